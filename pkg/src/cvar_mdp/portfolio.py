"""Two-asset portfolio MDP driven by a Markov chain of market conditions.

State ``(e, w)``: market condition ``e`` and current risky-asset weight ``w``
(always a grid value, since the chosen weight becomes the next one).  The
action picks the next weight.  Wealth is reset to ``wealth_scale`` every
period and the per-period loss is the negated realised return

    -(r_risky(e') a - b |a - w| + r_f (1 - a)) * wealth_scale

which depends on the next market condition ``e'``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidModelError
from .model import DeterministicPolicy, MdpModel, as_policy

MARKET_TRANSITION = (
    (0.20, 0.13, 0.19, 0.09, 0.12, 0.06, 0.12, 0.04, 0.04, 0.01),
    (0.18, 0.15, 0.15, 0.09, 0.08, 0.15, 0.06, 0.07, 0.04, 0.03),
    (0.13, 0.09, 0.12, 0.22, 0.14, 0.14, 0.04, 0.03, 0.07, 0.02),
    (0.11, 0.10, 0.13, 0.12, 0.11, 0.15, 0.07, 0.08, 0.07, 0.06),
    (0.07, 0.14, 0.15, 0.10, 0.13, 0.11, 0.11, 0.05, 0.07, 0.07),
    (0.07, 0.09, 0.08, 0.06, 0.06, 0.18, 0.14, 0.14, 0.07, 0.11),
    (0.08, 0.05, 0.13, 0.16, 0.11, 0.10, 0.11, 0.07, 0.09, 0.10),
    (0.09, 0.06, 0.08, 0.16, 0.10, 0.07, 0.11, 0.13, 0.08, 0.12),
    (0.07, 0.09, 0.07, 0.08, 0.13, 0.08, 0.12, 0.09, 0.13, 0.14),
    (0.01, 0.15, 0.11, 0.08, 0.04, 0.15, 0.10, 0.11, 0.03, 0.22),
)
RISKY_RETURNS = (0.09, 0.08, 0.06, 0.05, 0.04, 0.03, 0.02, -0.001, -0.002, -0.05)
ACTION_GRID = (0.1, 0.25, 0.4, 0.55, 0.7, 0.85)

COST_DECIMALS = 10


@dataclass(frozen=True)
class PortfolioConfig:
    market_transition: np.ndarray = field(default_factory=lambda: np.array(MARKET_TRANSITION))
    risky_returns: np.ndarray = field(default_factory=lambda: np.array(RISKY_RETURNS))
    risk_free_rate: float = 0.0001
    transaction_cost_rate: float = 0.0045
    action_grid: np.ndarray = field(default_factory=lambda: np.array(ACTION_GRID))
    wealth_scale: float = 1e4
    alpha: float = 0.66

    def __post_init__(self):
        for name in ("market_transition", "risky_returns", "action_grid"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=float))
        validate_config(self)

    @property
    def n_conditions(self) -> int:
        return self.market_transition.shape[0]

    @property
    def n_weights(self) -> int:
        return self.action_grid.shape[0]

    def to_dict(self):
        return {
            "market_transition": self.market_transition.tolist(),
            "risky_returns": self.risky_returns.tolist(),
            "risk_free_rate": self.risk_free_rate,
            "transaction_cost_rate": self.transaction_cost_rate,
            "action_grid": self.action_grid.tolist(),
            "wealth_scale": self.wealth_scale,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, data) -> "PortfolioConfig":
        defaults = default_config().to_dict()
        unknown = set(data) - set(defaults)
        if unknown:
            raise InvalidModelError(f"unknown portfolio config fields: {sorted(unknown)}")
        defaults.update(data)
        return cls(**defaults)


def validate_config(config: PortfolioConfig):
    P = config.market_transition
    problems = []
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        problems.append(f"market_transition must be square, got {P.shape}")
    else:
        bad = np.flatnonzero((np.abs(P.sum(axis=1) - 1.0) > 1e-9) | np.any(P < 0, axis=1))
        problems += [f"market_transition row {e} is not a distribution" for e in bad]
        if config.risky_returns.shape != (P.shape[0],):
            problems.append("risky_returns must have one entry per market condition")
    grid = config.action_grid
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
        problems.append("action_grid must be strictly increasing")
    if grid.size and (grid.min() < 0 or grid.max() > 1):
        problems.append("action_grid values must lie in [0, 1]")
    if config.transaction_cost_rate < 0:
        problems.append("transaction_cost_rate must be non-negative")
    if not 0 < config.alpha < 1:
        problems.append("alpha must lie in (0, 1)")
    if problems:
        raise InvalidModelError("invalid portfolio config: " + "; ".join(problems), problems)


def default_config() -> PortfolioConfig:
    return PortfolioConfig()


@dataclass(frozen=True)
class StateLabeling:
    """Bijection between dense state index and ``(condition, weight_index)``."""

    n_conditions: int
    action_grid: np.ndarray

    @property
    def n_weights(self) -> int:
        return len(self.action_grid)

    def index(self, condition: int, weight_index: int) -> int:
        if not (0 <= condition < self.n_conditions and 0 <= weight_index < self.n_weights):
            raise IndexError(f"state label ({condition}, {weight_index}) out of range")
        return condition * self.n_weights + weight_index

    def label(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.n_conditions * self.n_weights:
            raise IndexError(f"state index {index} out of range")
        return divmod(int(index), self.n_weights)


def build_mdp(config: PortfolioConfig | None = None) -> tuple[MdpModel, StateLabeling]:
    """Portfolio MDP with per-transition costs.

    From ``(e, w)`` under action ``a`` the next state is ``(e', a)`` with
    probability ``p(e, e')``.  Costs are rounded to 10 decimals so that
    equal losses merge into one atom of the loss distribution.
    """
    config = default_config() if config is None else config
    E, W = config.n_conditions, config.n_weights
    grid = config.action_grid
    S = E * W
    transition = np.zeros((S, W, S))
    cost = np.zeros((S, W, S))
    # realised return as a function of (current weight, action, next condition)
    ret = (config.risky_returns[None, None, :] * grid[None, :, None]
           - config.transaction_cost_rate * np.abs(grid[None, :, None] - grid[:, None, None])
           + config.risk_free_rate * (1.0 - grid[None, :, None]))
    loss = np.round(-ret * config.wealth_scale, COST_DECIMALS) + 0.0
    for e in range(E):
        for w in range(W):
            s = e * W + w
            for a in range(W):
                nxt = np.arange(E) * W + a
                transition[s, a, nxt] = config.market_transition[e]
                cost[s, a, nxt] = loss[w, a]
    return MdpModel(transition, cost), StateLabeling(E, grid)


def describe_policy(policy, labeling: StateLabeling) -> np.ndarray:
    """Chosen weight per ``(market condition, current weight)`` as an ``E x W`` table."""
    policy = as_policy(policy)
    if not isinstance(policy, DeterministicPolicy):
        raise TypeError("describe_policy expects a deterministic policy")
    if policy.n_states != labeling.n_conditions * labeling.n_weights:
        raise ValueError("policy does not cover the portfolio state space")
    return labeling.action_grid[policy.actions].reshape(labeling.n_conditions, labeling.n_weights)
