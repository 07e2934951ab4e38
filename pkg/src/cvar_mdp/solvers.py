"""Policy-iteration solvers for average-cost, CVaR and mean-CVaR objectives.

The CVaR solver alternates policy evaluation (VaR and potentials of the
pseudo cost at ``y = VaR``) with greedy improvement, keeping the incumbent
action on ties, until the policy stops changing.

Models may be unichain: states that are transient under the current policy
carry no stationary mass, so an update confined to them leaves the objective
unchanged.  Such updates are folded into the current iteration instead of
being recorded as a new one; every recorded iteration therefore strictly
decreases the objective.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .chain import solve_poisson, stationary_distribution
from .exceptions import CvarMdpError, NonConvergenceError
from .model import DeterministicPolicy, MdpModel, as_policy, induced_matrix
from .risk import (RiskParams, _params, candidate_var_set, evaluate, long_run_cvar,
                   objective_cost_table, pseudo_cost_table)
from .validation import check_model

logger = logging.getLogger(__name__)

TIE_TOL = 1e-10
OPTIMALITY_TOL = 1e-9
BELLMAN_RESIDUAL_TOL = 1e-8


def _scaled(tol, values):
    return tol * max(1.0, float(np.max(np.abs(values))))


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    policy: DeterministicPolicy
    var: float
    objective: float


@dataclass
class SolveResult:
    converged_policy: DeterministicPolicy
    trace: list[IterationRecord]
    objective_kind: str
    local_opt_certificate: bool
    iterations: int
    refinements: int = 0
    beta: float = 0.0

    @property
    def objective(self) -> float:
        return self.trace[-1].objective

    @property
    def var(self) -> float:
        return self.trace[-1].var

    def to_dict(self):
        return {
            "objective_kind": self.objective_kind,
            "beta": self.beta,
            "objective": self.objective,
            "var": self.var,
            "iterations": self.iterations,
            "refinements": self.refinements,
            "local_opt_certificate": self.local_opt_certificate,
            "converged_policy": self.converged_policy.actions.tolist(),
            "trace": [
                {"iteration": r.iteration, "objective": r.objective, "var": r.var,
                 "policy": r.policy.actions.tolist()}
                for r in self.trace
            ],
        }


def greedy_policy(q_values, incumbent=None, tol=TIE_TOL) -> np.ndarray:
    """Row-wise argmin of ``q_values``.

    Ties within ``tol`` (scaled by the magnitude of ``q_values``) keep the
    incumbent action, otherwise resolve to the smallest action index.
    """
    q_values = np.asarray(q_values, dtype=float)
    tol = _scaled(tol, q_values)
    best = q_values.min(axis=1)
    near = q_values <= best[:, None] + tol
    choice = np.argmax(near, axis=1)
    if incumbent is not None:
        incumbent = np.asarray(incumbent)
        keep = near[np.arange(len(incumbent)), incumbent]
        choice = np.where(keep, incumbent, choice)
    return choice


def _initial_policy(model, initial):
    if initial is None:
        return np.zeros(model.n_states, dtype=np.int64)
    policy = as_policy(initial)
    if not isinstance(policy, DeterministicPolicy):
        raise TypeError("initial policy must be deterministic")
    if policy.n_states != model.n_states or policy.actions.max() >= model.n_actions:
        raise ValueError("initial policy does not match the model dimensions")
    return np.array(policy.actions)


def _iterate(model, evaluate_fn, initial, kind, beta=0.0):
    """Generic policy iteration.

    ``evaluate_fn(actions)`` returns ``(objective, var, q_values, pi_state)``.
    """
    d = _initial_policy(model, initial)
    cap = model.n_states * model.n_actions + 1
    objective, var, q_values, pi = evaluate_fn(d)
    trace = [IterationRecord(0, DeterministicPolicy(d), var, objective)]
    refinements = 0
    for _ in range(cap * (model.n_states + 1)):
        new = greedy_policy(q_values, d)
        changed = new != d
        if not changed.any():
            return SolveResult(DeterministicPolicy(d), trace, kind,
                               local_opt_certificate=True, iterations=len(trace),
                               refinements=refinements, beta=beta)
        touches_recurrent = bool(np.any(changed & (pi > 0)))
        d = new
        objective, var, q_values, pi = evaluate_fn(d)
        record = IterationRecord(len(trace), DeterministicPolicy(d), var, objective)
        if touches_recurrent:
            if len(trace) >= cap:
                raise NonConvergenceError(f"{kind} policy iteration exceeded {cap} iterations")
            trace.append(record)
        else:
            # Only transient states changed: same stationary law, same iteration.
            refinements += 1
            trace[-1] = IterationRecord(trace[-1].iteration, record.policy, var, objective)
    raise NonConvergenceError(f"{kind} policy iteration did not settle")


def solve_average_mdp(model: MdpModel, cost_table=None, sense="min", initial=None) -> SolveResult:
    """Classical average-cost policy iteration.

    ``sense="max"`` maximises the long-run average by minimising the negated
    cost; trace objectives are reported in the original (unnegated) units.
    """
    check_model(model)
    cost_table = model.expected_cost if cost_table is None else np.asarray(cost_table, dtype=float)
    if cost_table.shape != (model.n_states, model.n_actions):
        raise ValueError(f"cost table must have shape {(model.n_states, model.n_actions)}")
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    sign = 1.0 if sense == "min" else -1.0
    signed = sign * cost_table
    rows = np.arange(model.n_states)

    def evaluate_fn(d):
        P = model.transition[rows, d]
        pot = solve_poisson(P, signed[rows, d])
        return pot.average, None, signed + model.transition @ pot.g, pot.pi

    if initial is None:
        initial = np.argmin(signed, axis=1)
    result = _iterate(model, evaluate_fn, initial,
                      "average_cost" if sense == "min" else "average_reward")
    if sense == "max":
        result.trace = [IterationRecord(r.iteration, r.policy, r.var, -r.objective)
                        for r in result.trace]
    return result


def _risk_evaluator(model, params):
    def evaluate_fn(d):
        report = evaluate(model, DeterministicPolicy(d), params)
        return report.objective, report.var, report.q_values, report.pi.pi_state
    return evaluate_fn


def policy_improvement(model: MdpModel, d, g, y, params) -> DeterministicPolicy:
    """Greedy step ``argmin_a f(y, i, a) + sum_j p(j|i,a) g(j)`` with incumbent ties."""
    d = as_policy(d)
    g = getattr(g, "g", g)
    q_values = objective_cost_table(model, y, params) + model.transition @ np.asarray(g, dtype=float)
    return DeterministicPolicy(greedy_policy(q_values, d.actions))


def solve_cvar(model: MdpModel, params, initial=None) -> SolveResult:
    """Local minimum of the long-run CVaR by sensitivity-based policy iteration."""
    check_model(model)
    params = RiskParams(_params(params).alpha)
    return _iterate(model, _risk_evaluator(model, params), initial, "cvar")


def solve_mean_cvar(model: MdpModel, params, initial=None) -> SolveResult:
    """Local minimum of ``CVaR + beta * mean`` (the CVaR loop with ``f_beta`` costs)."""
    check_model(model)
    params = _params(params)
    return _iterate(model, _risk_evaluator(model, params), initial,
                    "mean_cvar" if params.beta else "cvar", beta=params.beta)


def check_local_optimality(model: MdpModel, d, params) -> tuple[bool, float]:
    """Check the Bellman local optimality equations at ``d``.

    Returns ``(is_local_opt, worst_violation)`` where ``worst_violation`` is
    the largest improvement of the bracket available at any state.
    """
    d = as_policy(d)
    report = evaluate(model, d, params)
    q = report.q_values
    rows = np.arange(model.n_states)
    best = q.min(axis=1)
    gap = q[rows, d.actions] - best
    worst = float(gap.max())
    residual = np.max(np.abs(report.potentials.g + report.objective - best))
    scale = max(1.0, float(np.max(np.abs(q))))
    ok = worst <= OPTIMALITY_TOL * scale and residual <= BELLMAN_RESIDUAL_TOL * scale
    return bool(ok), worst


@dataclass
class GlobalSolveResult:
    best_policy: DeterministicPolicy
    best_cvar: float
    argmin_y: float
    per_y: list[tuple[float, DeterministicPolicy, float]]
    beta: float = 0.0

    def to_dict(self):
        return {
            "best_cvar": self.best_cvar,
            "argmin_y": self.argmin_y,
            "beta": self.beta,
            "best_policy": self.best_policy.actions.tolist(),
            "per_y": [{"y": y, "value": v, "policy": p.actions.tolist()} for y, p, v in self.per_y],
        }


def solve_global_bruteforce(model: MdpModel, params) -> GlobalSolveResult:
    """Global optimum via one standard average-cost MDP per candidate VaR.

    With beta > 0 the inner costs are ``f_beta`` and ``best_cvar`` is the
    global optimum of the mean-CVaR objective.
    """
    check_model(model)
    params = _params(params)
    per_y = []
    warm = None
    for y in candidate_var_set(model):
        inner = solve_average_mdp(model, objective_cost_table(model, y, params), "min", warm)
        warm = inner.converged_policy
        per_y.append((float(y), inner.converged_policy, inner.objective))
    k = int(np.argmin([v for _, _, v in per_y]))
    y, policy, value = per_y[k]
    return GlobalSolveResult(policy, value, y, per_y, beta=params.beta)


@dataclass
class MultiStartResult:
    best: SolveResult
    runs: list[SolveResult]
    initial_policies: list[DeterministicPolicy]
    distinct_local_optima: list[tuple[DeterministicPolicy, float]]
    failures: list[tuple[int, str]] = field(default_factory=list)

    def distinct_values(self, decimals=8) -> list[float]:
        return sorted({round(v, decimals) for _, v in self.distinct_local_optima})


def random_policy(model: MdpModel, rng) -> DeterministicPolicy:
    return DeterministicPolicy(rng.integers(0, model.n_actions, size=model.n_states))


def multi_start(model: MdpModel, params, n_starts: int, seed: int = 0,
                initial_policies=None) -> MultiStartResult:
    """Run the (mean-)CVaR solver from several initial policies.

    Initial actions are drawn i.i.d. uniform per state from
    ``numpy.random.default_rng(seed)``, unless ``initial_policies`` is given.
    Failed starts are recorded and skipped.
    """
    check_model(model)
    params = _params(params)
    if initial_policies is None:
        if n_starts < 1:
            raise ValueError("n_starts must be at least 1")
        rng = np.random.default_rng(seed)
        initial_policies = [random_policy(model, rng) for _ in range(n_starts)]
    else:
        initial_policies = [as_policy(p) for p in initial_policies]
    runs, failures, used = [], [], []
    for k, start in enumerate(initial_policies):
        try:
            runs.append(solve_mean_cvar(model, params, start))
            used.append(start)
        except CvarMdpError as exc:
            logger.warning("start %d failed: %s", k, exc)
            failures.append((k, str(exc)))
    if not runs:
        raise CvarMdpError(f"all {len(initial_policies)} starts failed")
    distinct = {}
    for run in runs:
        distinct.setdefault(run.converged_policy, run.objective)
    optima = sorted(distinct.items(), key=lambda item: item[1])
    best = min(runs, key=lambda r: r.objective)
    return MultiStartResult(best, runs, used, optima, failures)


@dataclass
class MaxSolveResult:
    max_cvar: float
    outer_y: float
    inner_policy: DeterministicPolicy
    search_trace: list[tuple[float, float]]

    def to_dict(self):
        return {
            "max_cvar": self.max_cvar,
            "outer_y": self.outer_y,
            "inner_policy": self.inner_policy.actions.tolist(),
            "search_trace": [{"y": y, "h": h} for y, h in self.search_trace],
        }


def maximize_cvar(model: MdpModel, params, tol: float = 1e-6) -> MaxSolveResult:
    """Maximal long-run CVaR over stationary policies, as ``min_y max_d``.

    ``h(y) = max_d pseudo_CVaR(d, y)`` is convex and piecewise linear.  It is
    evaluated on the candidate set, refined by golden-section search between
    the neighbours of the best grid point, and finally polished by
    intersecting the linear pieces of the inner maximisers at the bracket ends.
    The value equals the maximum over randomized policies, which can exceed
    the best deterministic policy.
    """
    check_model(model)
    if tol <= 0:
        raise ValueError("tol must be positive")
    params = RiskParams(_params(params).alpha)
    trace = []
    cache = {}

    def h(y):
        y = float(y)
        if y not in cache:
            inner = solve_average_mdp(model, pseudo_cost_table(model, y, params), "max")
            cache[y] = (inner.objective, inner.converged_policy)
            trace.append((y, cache[y][0]))
        return cache[y]

    grid = candidate_var_set(model)
    values = [h(y)[0] for y in grid]
    k = int(np.argmin(values))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    width = tol * (grid[-1] - grid[0])
    ratio = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, e = b - ratio * (b - a), a + ratio * (b - a)
    while b - a > width:
        if h(c)[0] <= h(e)[0]:
            b, e = e, c
            c = b - ratio * (b - a)
        else:
            a, c = c, e
            e = a + ratio * (b - a)

    candidates = [a, b]
    # Exact kink: on a stretch without candidate costs each policy's pseudo
    # CVaR is linear in y; intersect the pieces of the two bracket maximisers.
    for left, right in ((a, b), (lo, grid[k]), (grid[k], hi)):
        if right - left <= 0:
            continue
        pl, pr = h(left)[1], h(right)[1]
        fl = [pseudo_cvar_line(model, p, left, right, params) for p in (pl, pr)]
        (s1, i1), (s2, i2) = fl
        if abs(s1 - s2) > 1e-15:
            y_star = (i2 - i1) / (s1 - s2)
            if left <= y_star <= right:
                candidates.append(y_star)
    best_y = min(candidates + [grid[k]], key=lambda y: (h(y)[0], y))
    value, policy = h(best_y)
    trace.sort()
    return MaxSolveResult(value, float(best_y), policy, trace)


def pseudo_cvar_line(model, policy, left, right, params):
    """Slope and intercept of ``y -> pseudo_CVaR(policy, y)`` on ``[left, right]``.

    Exact when no candidate cost lies strictly inside the interval.
    """
    pi = stationary_distribution(induced_matrix(model, policy))
    rows = np.arange(model.n_states)
    actions = as_policy(policy).actions

    def value(y):
        return float(pi @ pseudo_cost_table(model, y, params)[rows, actions])

    vl, vr = value(left), value(right)
    slope = (vr - vl) / (right - left)
    return slope, vl - slope * left


def enumerate_deterministic_policies(model: MdpModel):
    """Yield every deterministic policy (``A**S`` of them)."""
    for actions in itertools.product(range(model.n_actions), repeat=model.n_states):
        yield DeterministicPolicy(np.array(actions))


def cvar_by_enumeration(model: MdpModel, params) -> list[tuple[DeterministicPolicy, float]]:
    """Long-run CVaR of every deterministic policy."""
    return [(p, long_run_cvar(model, p, params)[1]) for p in enumerate_deterministic_policies(model)]
