"""Finite MDP model, stationary policies, and policy-induced quantities.

States and actions are dense 0-based integers.  Costs are either a table
``c(i, a)`` of shape ``(S, A)`` or a per-transition table ``c(i, a, j)`` of
shape ``(S, A, S)``; in the latter case the one-step loss ``C_t`` is the cost
realised on the transition ``X_t -> X_{t+1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, InvalidModelError

STOCHASTIC_TOL = 1e-9


def _frozen(array, dtype=float):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class MdpModel:
    """Finite MDP ``<S, A, P, c>``.

    Parameters
    ----------
    transition : array_like, shape (S, A, S)
        ``transition[i, a, j] = p(j | i, a)``.
    cost : array_like, shape (S, A) or (S, A, S)
        One-step cost per state-action pair, or per realised transition.

    Construction only checks shapes; use :func:`validate_model` to list
    stochasticity and finiteness violations.
    """

    transition: np.ndarray
    cost: np.ndarray
    _expected: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        transition = _frozen(self.transition)
        cost = _frozen(self.cost)
        if transition.ndim != 3 or transition.shape[0] != transition.shape[2]:
            raise DimensionError(
                f"transition must have shape (S, A, S), got {transition.shape}")
        n_states, n_actions, _ = transition.shape
        if n_states < 1 or n_actions < 1:
            raise DimensionError("model needs at least one state and one action")
        if cost.shape not in ((n_states, n_actions), (n_states, n_actions, n_states)):
            raise DimensionError(
                f"cost must have shape {(n_states, n_actions)} or "
                f"{(n_states, n_actions, n_states)}, got {cost.shape}")
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "cost", cost)
        if cost.ndim == 3:
            expected = np.einsum("iaj,iaj->ia", transition, np.where(transition > 0, cost, 0.0))
        else:
            expected = cost
        object.__setattr__(self, "_expected", _frozen(expected))

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def has_transition_costs(self) -> bool:
        return self.cost.ndim == 3

    @property
    def expected_cost(self) -> np.ndarray:
        """``sum_j p(j|i,a) c(i,a,j)``, or the cost table itself."""
        return self._expected

    @property
    def outcome_cost(self) -> np.ndarray:
        """Cost broadcast to shape ``(S, A, S)``."""
        if self.has_transition_costs:
            return self.cost
        return np.broadcast_to(self.cost[:, :, None], self.transition.shape)

    def expectation(self, outcome_table) -> np.ndarray:
        """Average an ``(S, A, S)`` table over next states, giving ``(S, A)``.

        Entries on zero-probability transitions are ignored.
        """
        outcome_table = np.asarray(outcome_table, dtype=float)
        if outcome_table.shape != self.transition.shape:
            raise DimensionError("outcome table must have shape (S, A, S)")
        return np.einsum("iaj,iaj->ia", self.transition,
                         np.where(self.transition > 0, outcome_table, 0.0))

    def __eq__(self, other):
        if not isinstance(other, MdpModel):
            return NotImplemented
        return (np.array_equal(self.transition, other.transition)
                and np.array_equal(self.cost, other.cost))

    __hash__ = None


class Policy:
    """Stationary policy; subclasses provide the ``(S, A)`` action table."""

    n_states: int

    def table(self, n_actions: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class DeterministicPolicy(Policy):
    """Policy ``d(i) -> a``."""

    actions: np.ndarray

    def __post_init__(self):
        actions = np.asarray(self.actions)
        if actions.ndim != 1:
            raise DimensionError("deterministic policy must be a 1-D action array")
        if actions.size and not np.issubdtype(actions.dtype, np.integer):
            if not np.all(actions == np.round(actions)):
                raise DimensionError("actions must be integers")
        actions = _frozen(actions, dtype=np.int64)
        if np.any(actions < 0):
            raise DimensionError("actions must be non-negative")
        object.__setattr__(self, "actions", actions)

    @property
    def n_states(self) -> int:
        return self.actions.shape[0]

    def table(self, n_actions):
        if self.actions.size and self.actions.max() >= n_actions:
            raise DimensionError(
                f"action {int(self.actions.max())} out of range for {n_actions} actions")
        out = np.zeros((self.n_states, n_actions))
        out[np.arange(self.n_states), self.actions] = 1.0
        return out

    def __eq__(self, other):
        if not isinstance(other, DeterministicPolicy):
            return NotImplemented
        return np.array_equal(self.actions, other.actions)

    def __hash__(self):
        return hash(self.actions.tobytes())

    def __repr__(self):
        return f"DeterministicPolicy({self.actions.tolist()})"


@dataclass(frozen=True, eq=False)
class RandomizedPolicy(Policy):
    """Policy with action probabilities ``d(i, a)``."""

    probabilities: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probabilities)
        if probs.ndim != 2:
            raise DimensionError("randomized policy must be an (S, A) table")
        if np.any(probs < 0) or np.any(np.abs(probs.sum(axis=1) - 1.0) > STOCHASTIC_TOL):
            raise InvalidModelError("policy rows must be probability vectors")
        object.__setattr__(self, "probabilities", probs)

    @property
    def n_states(self) -> int:
        return self.probabilities.shape[0]

    def table(self, n_actions):
        if self.probabilities.shape[1] != n_actions:
            raise DimensionError(
                f"policy has {self.probabilities.shape[1]} actions, model has {n_actions}")
        return np.array(self.probabilities)


@dataclass(frozen=True)
class MixedPolicy(Policy):
    """Per-state randomisation between two deterministic policies.

    At every step and state the action of ``target`` is used with probability
    ``delta`` and that of ``base`` otherwise.
    """

    base: DeterministicPolicy
    target: DeterministicPolicy
    delta: float

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")
        if self.base.n_states != self.target.n_states:
            raise DimensionError("mixed policies must cover the same states")

    @property
    def n_states(self) -> int:
        return self.base.n_states

    def table(self, n_actions):
        return ((1.0 - self.delta) * self.base.table(n_actions)
                + self.delta * self.target.table(n_actions))


def as_policy(policy) -> Policy:
    """Coerce an action array or probability table into a :class:`Policy`."""
    if isinstance(policy, Policy):
        return policy
    arr = np.asarray(policy)
    if arr.ndim == 1:
        return DeterministicPolicy(arr)
    if arr.ndim == 2:
        return RandomizedPolicy(arr)
    raise DimensionError(f"cannot interpret array of shape {arr.shape} as a policy")


def policy_table(model: MdpModel, policy) -> np.ndarray:
    policy = as_policy(policy)
    if policy.n_states != model.n_states:
        raise DimensionError(
            f"policy covers {policy.n_states} states, model has {model.n_states}")
    return policy.table(model.n_actions)


@dataclass(frozen=True)
class Violation:
    kind: str
    state: int
    action: int | None
    detail: str

    def __str__(self):
        where = f"(state={self.state}" + (f", action={self.action})" if self.action is not None else ")")
        return f"{self.kind} at {where}: {self.detail}"


def validate_model(model: MdpModel, tol: float = STOCHASTIC_TOL) -> list[Violation]:
    """Return every stochasticity or finiteness violation; empty means valid."""
    out = []
    transition = model.transition
    for i in range(model.n_states):
        for a in range(model.n_actions):
            row = transition[i, a]
            if not np.all(np.isfinite(row)):
                out.append(Violation("non-finite probability", i, a, "row contains NaN/inf"))
                continue
            if np.any(row < 0):
                j = int(np.argmin(row))
                out.append(Violation("negative probability", i, a, f"p({j}|{i},{a})={row[j]:g}"))
            total = row.sum()
            if abs(total - 1.0) > tol:
                out.append(Violation("row sum", i, a, f"sum_j p(j|{i},{a}) = {total:.12g}"))
            costs = model.cost[i, a]
            if not np.all(np.isfinite(costs)):
                out.append(Violation("non-finite cost", i, a, "cost is NaN/inf"))
    return out


def induced_matrix(model: MdpModel, policy) -> np.ndarray:
    """``P^d(i, j) = sum_a d(i, a) p(j | i, a)``."""
    table = policy_table(model, policy)
    return np.einsum("ia,iaj->ij", table, model.transition)


def induced_cost(model: MdpModel, policy, cost_table=None) -> np.ndarray:
    """Expected one-step cost per state, ``sum_a d(i, a) cost(i, a)``.

    ``cost_table`` defaults to the model's expected cost.
    """
    table = policy_table(model, policy)
    cost_table = model.expected_cost if cost_table is None else np.asarray(cost_table, dtype=float)
    if cost_table.shape != table.shape:
        raise DimensionError(f"cost table must have shape {table.shape}, got {cost_table.shape}")
    return np.einsum("ia,ia->i", table, cost_table)


def mix_policies(d: DeterministicPolicy, d_prime: DeterministicPolicy, delta: float) -> MixedPolicy:
    return MixedPolicy(as_policy(d), as_policy(d_prime), float(delta))
