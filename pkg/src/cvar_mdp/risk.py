"""Long-run VaR/CVaR of a policy and the sensitivity quantities built on them.

CVaR is always the Rockafellar-Uryasev functional evaluated at the VaR,

    CVaR = VaR + E[C - VaR]^+ / (1 - alpha),

which for discrete losses can differ from ``E[C | C >= VaR]``; the latter is
reported separately as ``tail_expectation``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import Potentials, StationaryDistribution, solve_poisson, stationary
from .model import MdpModel, as_policy, induced_matrix, policy_table
from .validation import check_alpha, check_beta

# Slack on the cumulative probability when scanning for the quantile, so
# that F(v) == alpha is not missed through summation round-off.
CDF_TOL = 1e-12


@dataclass(frozen=True)
class RiskParams:
    """Probability level ``alpha`` and mean weight ``beta`` (0 = pure CVaR)."""

    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        object.__setattr__(self, "beta", check_beta(self.beta))


def _params(params) -> RiskParams:
    if isinstance(params, RiskParams):
        return params
    return RiskParams(alpha=params)


def pseudo_cost(cost, y, params):
    """``y + [cost - y]^+ / (1 - alpha)``, elementwise."""
    alpha = _params(params).alpha
    cost = np.asarray(cost, dtype=float)
    return y + np.maximum(cost - y, 0.0) / (1.0 - alpha)


def mean_cvar_cost(cost, y, params):
    """Pseudo cost plus ``beta * cost``; equals :func:`pseudo_cost` at beta 0."""
    params = _params(params)
    cost = np.asarray(cost, dtype=float)
    out = pseudo_cost(cost, y, params)
    if params.beta:
        out = out + params.beta * cost
    return out


@dataclass(frozen=True)
class DiscreteLossDistribution:
    """Atoms sorted by strictly increasing value; probabilities sum to one."""

    values: np.ndarray
    probs: np.ndarray

    @classmethod
    def from_weights(cls, values, weights) -> "DiscreteLossDistribution":
        """Merge equal values (exact equality) and drop zero-mass atoms."""
        values = np.asarray(values, dtype=float).ravel()
        weights = np.asarray(weights, dtype=float).ravel()
        keep = weights > 0
        uniq, inverse = np.unique(values[keep], return_inverse=True)
        probs = np.bincount(inverse, weights=weights[keep], minlength=uniq.size)
        return cls(uniq, probs / probs.sum())

    def cdf(self, w) -> float:
        return float(self.probs[self.values <= w].sum())

    @property
    def mean(self) -> float:
        return float(self.probs @ self.values)

    @property
    def std(self) -> float:
        mean = self.mean
        return float(np.sqrt(max(self.probs @ (self.values - mean) ** 2, 0.0)))

    def var(self, alpha) -> float:
        """Smallest atom ``v`` with ``F(v) >= alpha``."""
        cum = np.cumsum(self.probs)
        k = int(np.argmax(cum >= alpha - CDF_TOL))
        if cum[k] < alpha - CDF_TOL:
            k = len(cum) - 1
        return float(self.values[k])

    def pseudo_cvar(self, y, alpha) -> float:
        return float(y + self.probs @ np.maximum(self.values - y, 0.0) / (1.0 - alpha))

    def cvar(self, alpha) -> float:
        return self.pseudo_cvar(self.var(alpha), alpha)

    def tail_expectation(self, alpha) -> float:
        """``E[C | C >= VaR]``, for comparison with the CVaR functional."""
        tail = self.values >= self.var(alpha)
        return float(self.probs[tail] @ self.values[tail] / self.probs[tail].sum())

    def to_dict(self):
        return {"values": self.values.tolist(), "probs": self.probs.tolist()}


def _loss_distribution(model: MdpModel, pi_state_action) -> DiscreteLossDistribution:
    weights = pi_state_action[:, :, None] * model.transition
    return DiscreteLossDistribution.from_weights(model.outcome_cost, weights)


def steady_loss_distribution(model: MdpModel, policy) -> DiscreteLossDistribution:
    """Steady-state law of the one-step cost under ``policy``."""
    return _loss_distribution(model, stationary(model, policy).pi_state_action)


def var_of(dist: DiscreteLossDistribution, params) -> float:
    return dist.var(_params(params).alpha)


def objective_cost_table(model: MdpModel, y, params) -> np.ndarray:
    """Expected one-step mean-CVaR cost ``f_beta(y, i, a)`` as an ``(S, A)`` table.

    For transition costs the hinge is applied per outcome and then averaged
    over the next state.
    """
    params = _params(params)
    if model.has_transition_costs:
        return model.expectation(mean_cvar_cost(model.cost, y, params))
    return mean_cvar_cost(model.cost, y, params)


def pseudo_cost_table(model: MdpModel, y, params) -> np.ndarray:
    return objective_cost_table(model, y, RiskParams(_params(params).alpha))


def pseudo_cvar(model: MdpModel, policy, y, params) -> float:
    """Long-run average of the pseudo cost at a fixed ``y``."""
    dist = stationary(model, policy)
    return float(np.sum(dist.pi_state_action * pseudo_cost_table(model, y, params)))


def long_run_cvar(model: MdpModel, policy, params) -> tuple[float, float]:
    """``(VaR, CVaR)`` of the steady-state one-step cost."""
    alpha = _params(params).alpha
    dist = steady_loss_distribution(model, policy)
    var = dist.var(alpha)
    return var, dist.pseudo_cvar(var, alpha)


def candidate_var_set(model: MdpModel) -> np.ndarray:
    """Sorted distinct costs that any policy's VaR can take."""
    return np.unique(model.outcome_cost[model.transition > 0])


@dataclass(frozen=True)
class EvaluationReport:
    """Everything the solvers need about one policy, at ``y = VaR``.

    ``potentials`` and ``q_values`` refer to the objective cost
    ``f_beta(VaR, i, a)``, which is the plain pseudo cost when beta is 0.
    """

    alpha: float
    beta: float
    pi: StationaryDistribution
    mean_cost: float
    loss_dist: DiscreteLossDistribution
    var: float
    cvar: float
    pseudo_cvar_at_var: float
    std_dev: float
    tail_expectation: float
    objective: float
    cost_table: np.ndarray
    potentials: Potentials
    q_values: np.ndarray

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "mean_cost": self.mean_cost,
            "std_dev": self.std_dev,
            "var": self.var,
            "cvar": self.cvar,
            "pseudo_cvar_at_var": self.pseudo_cvar_at_var,
            "tail_expectation": self.tail_expectation,
            "objective": self.objective,
            "stationary_distribution": self.pi.pi_state.tolist(),
            "potentials": self.potentials.g.tolist(),
            "loss_distribution": self.loss_dist.to_dict(),
        }


def evaluate(model: MdpModel, policy, params) -> EvaluationReport:
    params = _params(params)
    table = policy_table(model, policy)
    dist = stationary(model, policy)
    loss = _loss_distribution(model, dist.pi_state_action)
    var = loss.var(params.alpha)
    cvar = loss.pseudo_cvar(var, params.alpha)
    mean = float(np.sum(dist.pi_state_action * model.expected_cost))
    pseudo_at_var = float(np.sum(dist.pi_state_action * pseudo_cost_table(model, var, params)))
    cost_table = objective_cost_table(model, var, params)
    pot = solve_poisson(induced_matrix(model, policy),
                        np.einsum("ia,ia->i", table, cost_table), dist.pi_state)
    q_values = cost_table + model.transition @ pot.g
    return EvaluationReport(
        alpha=params.alpha, beta=params.beta, pi=dist, mean_cost=mean, loss_dist=loss,
        var=var, cvar=cvar, pseudo_cvar_at_var=pseudo_at_var, std_dev=loss.std,
        tail_expectation=loss.tail_expectation(params.alpha),
        objective=cvar + params.beta * mean, cost_table=cost_table,
        potentials=pot, q_values=q_values)


def delta_cvar(model: MdpModel, d, d_prime, params) -> float:
    """``CVaR(d') - pseudo_CVaR(d', y=VaR(d))``; never positive."""
    params = _params(params)
    var_d, _ = long_run_cvar(model, d, params)
    _, cvar_dp = long_run_cvar(model, d_prime, params)
    return cvar_dp - pseudo_cvar(model, d_prime, var_d, params)


def improvement_brackets(report: EvaluationReport, model: MdpModel, d, d_prime) -> np.ndarray:
    """Per-state bracket ``sum_a (d'(i,a) - d(i,a)) Q(i,a)`` of the difference formula."""
    diff = policy_table(model, d_prime) - policy_table(model, d)
    return np.einsum("ia,ia->i", diff, report.q_values)


def cvar_difference_terms(model: MdpModel, d, d_prime, params) -> tuple[float, float]:
    """Right-hand side of the long-run CVaR difference formula.

    Returns ``(bracket_sum, delta)`` with the brackets built from ``d``'s
    potentials at ``y = VaR(d)`` and weighted by ``pi^{d'}``, so that
    ``CVaR(d') - CVaR(d) == bracket_sum + delta``.  With beta > 0 the same
    identity holds for the mean-CVaR objective.
    """
    params = _params(params)
    report = evaluate(model, d, params)
    other = stationary(model, d_prime)
    brackets = improvement_brackets(report, model, d, d_prime)
    bracket_sum = float(other.pi_state @ brackets)
    evaluated = evaluate(model, d_prime, params)
    pseudo = float(np.sum(other.pi_state_action * report.cost_table))
    return bracket_sum, evaluated.objective - pseudo


def cvar_derivative(model: MdpModel, d, d_prime, params) -> float:
    """Derivative of the long-run CVaR along the mixture ``d -> d'`` at delta 0."""
    report = evaluate(model, as_policy(d), params)
    brackets = improvement_brackets(report, model, d, d_prime)
    return float(report.pi.pi_state @ brackets)
