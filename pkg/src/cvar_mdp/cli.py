"""Command-line interface: ``cvar-mdp <command> [options]``.

Exit codes: 0 success, 2 input error, 3 model error, 4 solver error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from .chain import recurrent_states
from .exceptions import (DimensionError, InvalidModelError, NonConvergenceError,
                         NotErgodicError, SingularSystemError, CvarMdpError)
from .model import induced_matrix, validate_model
from .portfolio import PortfolioConfig, build_mdp, describe_policy, default_config
from .risk import RiskParams, evaluate
from .serialization import (ParseError, load_model, load_policy, read_json, save_policy,
                            write_csv, write_json)
from .solvers import (maximize_cvar, multi_start, random_policy, solve_global_bruteforce,
                      solve_mean_cvar)
from .validation import check_model

logger = logging.getLogger("cvar_mdp")

EXIT_OK, EXIT_INPUT, EXIT_MODEL, EXIT_SOLVER = 0, 2, 3, 4


def _tool_version():
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


class _Run:
    """Resolved inputs shared by every command."""

    def __init__(self, args):
        self.args = args
        self.labeling = None
        self.config = None
        if args.scenario:
            self.config = _portfolio_config(args)
            self.model, self.labeling = build_mdp(self.config)
            self.source = f"scenario:{args.scenario}"
        elif args.model:
            self.model = load_model(args.model)
            self.source = str(args.model)
        else:
            raise ParseError("give a model file or --scenario portfolio")
        alpha = getattr(args, "alpha", None)
        if alpha is None and self.config is not None:
            alpha = self.config.alpha
        self.alpha = alpha
        self.out = Path(args.out)
        self.started = time.perf_counter()

    def params(self, beta=0.0):
        if self.alpha is None:
            raise ParseError("--alpha is required for model files")
        return RiskParams(self.alpha, beta)

    def finish(self, command, parameters, inputs=()):
        manifest = {
            "command": command,
            "inputs": [self.source, *map(str, inputs)],
            "parameters": parameters,
            "output_dir": str(self.out),
            "tool_version": _tool_version(),
            "wall_clock_seconds": round(time.perf_counter() - self.started, 6),
        }
        if self.config is not None:
            manifest["portfolio_config"] = self.config.to_dict()
        write_json(self.out / "manifest.json", manifest)

    def write_policy(self, policy, stem="policy"):
        save_policy(policy, self.out / f"{stem}.txt")
        if self.labeling is not None:
            table = describe_policy(policy, self.labeling)
            header = ["weight\\condition"] + [str(e) for e in range(table.shape[0])]
            rows = [[float(w)] + table[:, k].tolist()
                    for k, w in enumerate(self.labeling.action_grid)]
            write_csv(self.out / f"{stem}_matrix.csv", header, rows)


def _portfolio_config(args):
    if args.scenario != "portfolio":
        raise ParseError(f"unknown scenario {args.scenario!r}")
    data = default_config().to_dict()
    if args.portfolio_config:
        data.update(read_json(args.portfolio_config))
    for flag, key in (("risk_free_rate", "risk_free_rate"),
                      ("transaction_cost", "transaction_cost_rate"),
                      ("wealth_scale", "wealth_scale")):
        value = getattr(args, flag, None)
        if value is not None:
            data[key] = value
    return PortfolioConfig.from_dict(data)


def _write_trace(path, result):
    write_csv(path, ["iteration", "objective", "var"],
              [[r.iteration, r.objective, r.var] for r in result.trace])


def cmd_validate(args):
    run = _Run(args)
    violations = [str(v) for v in validate_model(run.model)]
    if not violations:
        # spot-check uniqueness of the stationary law under a few policies
        rng = np.random.default_rng(0)
        policies = [np.full(run.model.n_states, a) for a in range(run.model.n_actions)]
        policies += [random_policy(run.model, rng).actions for _ in range(16)]
        for actions in policies:
            try:
                recurrent_states(induced_matrix(run.model, actions))
            except NotErgodicError as exc:
                violations.append(f"policy {actions.tolist()}: {exc}")
    run.out.mkdir(parents=True, exist_ok=True)
    write_json(run.out / "validation.json", {"violations": violations, "valid": not violations})
    run.finish("validate", {})
    for line in violations:
        print(line)
    print("valid" if not violations else f"{len(violations)} violation(s)")
    return EXIT_OK if not violations else EXIT_MODEL


def cmd_evaluate(args):
    run = _Run(args)
    check_model(run.model)
    policy = load_policy(args.policy, run.model.n_states)
    report = evaluate(run.model, policy, run.params())
    run.out.mkdir(parents=True, exist_ok=True)
    write_json(run.out / "evaluation.json", report.to_dict())
    write_csv(run.out / "loss_distribution.csv", ["value", "probability"],
              zip(report.loss_dist.values, report.loss_dist.probs))
    run.finish("evaluate", {"alpha": run.alpha}, [args.policy])
    print(f"mean={report.mean_cost:.6f} std={report.std_dev:.6f} "
          f"VaR={report.var:.6f} CVaR={report.cvar:.6f}")
    return EXIT_OK


def cmd_solve(args):
    run = _Run(args)
    params = run.params(args.beta or 0.0)
    run.out.mkdir(parents=True, exist_ok=True)
    parameters = {"alpha": params.alpha, "beta": params.beta}
    inputs = []
    if args.starts:
        ms = multi_start(run.model, params, args.starts, args.seed)
        result = ms.best
        parameters.update(seed=args.seed, starts=args.starts)
        for k, r in enumerate(ms.runs):
            _write_trace(run.out / f"trace_start{k:03d}.csv", r)
        write_csv(run.out / "local_optima.csv", ["rank", "objective", "policy"],
                  [[k, v, " ".join(map(str, p.actions))]
                   for k, (p, v) in enumerate(ms.distinct_local_optima)])
        if ms.failures:
            write_json(run.out / "failures.json",
                       [{"start": k, "error": msg} for k, msg in ms.failures])
        optima = [v for _, v in ms.distinct_local_optima]
    else:
        initial = None
        if args.initial:
            initial = load_policy(args.initial, run.model.n_states)
            inputs.append(args.initial)
        result = solve_mean_cvar(run.model, params, initial)
        optima = [result.objective]
    _write_trace(run.out / "trace.csv", result)
    run.write_policy(result.converged_policy)
    report = evaluate(run.model, result.converged_policy, params)
    summary = result.to_dict()
    summary.update(cvar=report.cvar, mean_cost=report.mean_cost, std_dev=report.std_dev,
                   distinct_local_optima=optima)
    write_json(run.out / "result.json", summary)
    run.finish("solve", parameters, inputs)
    print(f"objective={result.objective:.6f} CVaR={report.cvar:.6f} mean={report.mean_cost:.6f} "
          f"iterations={result.iterations}")
    if args.starts:
        print("distinct local optima: " + ", ".join(f"{v:.6f}" for v in optima))
    return EXIT_OK


def cmd_global(args):
    run = _Run(args)
    params = run.params(args.beta or 0.0)
    result = solve_global_bruteforce(run.model, params)
    run.out.mkdir(parents=True, exist_ok=True)
    write_csv(run.out / "per_y.csv", ["y", "value", "policy"],
              [[y, v, " ".join(map(str, p.actions))] for y, p, v in result.per_y])
    write_json(run.out / "result.json", result.to_dict())
    run.write_policy(result.best_policy)
    run.finish("global", {"alpha": params.alpha, "beta": params.beta})
    print(f"global optimum={result.best_cvar:.6f} at y={result.argmin_y:.6f}")
    return EXIT_OK


def cmd_sweep_beta(args):
    run = _Run(args)
    betas = [float(b) for b in args.betas.split(",") if b.strip()]
    run.out.mkdir(parents=True, exist_ok=True)
    rows, optima_rows, errors = [], [], []
    for beta in betas:
        params = run.params(beta)
        try:
            ms = multi_start(run.model, params, args.starts, args.seed)
        except CvarMdpError as exc:
            errors.append({"beta": beta, "error": str(exc)})
            continue
        best = evaluate(run.model, ms.best.converged_policy, params)
        rows.append([beta, best.cvar, best.mean_cost, best.objective,
                     len(ms.distinct_local_optima)])
        for policy, value in ms.distinct_local_optima:
            rep = evaluate(run.model, policy, params)
            optima_rows.append([beta, rep.cvar, rep.mean_cost, value, " ".join(map(str, policy.actions))])
    write_csv(run.out / "sweep.csv", ["beta", "cvar", "mean", "combined", "n_distinct_optima"], rows)
    write_csv(run.out / "sweep_optima.csv", ["beta", "cvar", "mean", "combined", "policy"], optima_rows)
    if errors:
        write_json(run.out / "failures.json", errors)
    run.finish("sweep-beta", {"alpha": run.alpha, "betas": betas, "starts": args.starts,
                              "seed": args.seed})
    for row in rows:
        print("beta={:g} CVaR={:.6f} mean={:.6f} combined={:.6f} optima={}".format(*row))
    return EXIT_OK if not errors else EXIT_SOLVER


def cmd_maximize(args):
    run = _Run(args)
    params = run.params()
    result = maximize_cvar(run.model, params, args.tol)
    run.out.mkdir(parents=True, exist_ok=True)
    write_csv(run.out / "search_trace.csv", ["y", "h"], result.search_trace)
    write_json(run.out / "result.json", result.to_dict())
    run.write_policy(result.inner_policy, "inner_policy")
    run.finish("maximize", {"alpha": params.alpha, "tol": args.tol})
    print(f"max CVaR={result.max_cvar:.6f} at y={result.outer_y:.6f}")
    return EXIT_OK
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="cvar-mdp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, alpha=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("model", nargs="?", help="model JSON file")
        p.add_argument("--scenario", choices=["portfolio"], help="use a built-in scenario")
        p.add_argument("--portfolio-config", help="JSON overrides for the portfolio scenario")
        p.add_argument("--risk-free-rate", type=float)
        p.add_argument("--transaction-cost", type=float)
        p.add_argument("--wealth-scale", type=float)
        p.add_argument("--out", default="cvar-mdp-output", help="output directory")
        if alpha:
            p.add_argument("--alpha", type=float, help="CVaR probability level")
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "check model invariants", alpha=False)
    p = add("evaluate", cmd_evaluate, "evaluate a deterministic policy")
    p.add_argument("--policy", required=True, help="policy file (one action per state)")
    p = add("solve", cmd_solve, "local CVaR / mean-CVaR optimisation")
    p.add_argument("--beta", type=float, help="mean weight for mean-CVaR")
    p.add_argument("--initial", help="initial policy file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, help="number of random initial policies")
    p = add("global", cmd_global, "global optimum by enumeration over candidate VaRs")
    p.add_argument("--beta", type=float)
    p = add("sweep-beta", cmd_sweep_beta, "mean-CVaR sweep over beta")
    p.add_argument("--betas", default="0.1,0.22,0.4,2")
    p.add_argument("--starts", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p = add("maximize", cmd_maximize, "maximal long-run CVaR")
    p.add_argument("--tol", type=float, default=1e-6)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, ParseError, IsADirectoryError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InvalidModelError, DimensionError, NotErgodicError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (SingularSystemError, NonConvergenceError, CvarMdpError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
