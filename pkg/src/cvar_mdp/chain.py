"""Steady-state analysis of policy-induced Markov chains."""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .exceptions import NotErgodicError, SingularSystemError
from .model import MdpModel, induced_cost, induced_matrix, policy_table
from .validation import check_probability_vector, check_stochastic_matrix

RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class ErgodicityReport:
    irreducible: bool
    aperiodic: bool
    period: int
    n_recurrent_classes: int

    @property
    def ergodic(self) -> bool:
        return self.irreducible and self.aperiodic

    @property
    def unichain(self) -> bool:
        return self.n_recurrent_classes == 1


def _class_period(P, members):
    # BFS levels inside a strongly connected class; period = gcd of level
    # discrepancies over all internal edges.
    inside = np.zeros(P.shape[0], dtype=bool)
    inside[members] = True
    level = {members[0]: 0}
    queue = [members[0]]
    period = 0
    while queue:
        u = queue.pop()
        for v in np.flatnonzero((P[u] > 0) & inside):
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
    for u in members:
        for v in np.flatnonzero((P[u] > 0) & inside):
            period = gcd(period, abs(level[u] + 1 - level[v]))
    return period or 1


def _closed_classes(P):
    n_comp, labels = connected_components(csr_matrix(P > 0), directed=True, connection="strong")
    closed = []
    for k in range(n_comp):
        members = np.flatnonzero(labels == k)
        outside = np.ones(P.shape[0], dtype=bool)
        outside[members] = False
        if not np.any(P[np.ix_(members, outside)] > 0):
            closed.append(members)
    return n_comp, closed


def check_ergodicity(P) -> ErgodicityReport:
    """Irreducibility and periodicity of a row-stochastic matrix.

    ``period`` is the least common multiple of the periods of the closed
    (recurrent) classes, so ``aperiodic`` means every recurrent class is.
    """
    P = check_stochastic_matrix(P)
    n_comp, closed = _closed_classes(P)
    period = 1
    for members in closed:
        p = _class_period(P, members)
        period = period * p // gcd(period, p)
    return ErgodicityReport(irreducible=n_comp == 1, aperiodic=period == 1,
                            period=period, n_recurrent_classes=len(closed))


def recurrent_states(P) -> np.ndarray:
    """Boolean mask of the single recurrent class.

    Raises :class:`NotErgodicError` when the chain has more than one closed
    class, in which case the stationary law is not unique.
    """
    P = np.asarray(P, dtype=float)
    _, closed = _closed_classes(P)
    if len(closed) != 1:
        raise NotErgodicError(
            f"induced chain has {len(closed)} recurrent classes; a unique "
            "stationary distribution requires exactly one")
    mask = np.zeros(P.shape[0], dtype=bool)
    mask[closed[0]] = True
    return mask


def stationary_distribution(P) -> np.ndarray:
    """Unique ``pi`` with ``pi P = pi`` and ``sum(pi) = 1``.

    Solved on the recurrent class by replacing one balance equation with the
    normalisation row; transient states get exactly zero mass.
    """
    P = check_stochastic_matrix(P)
    mask = recurrent_states(P)
    sub = P[np.ix_(mask, mask)]
    m = sub.shape[0]
    system = sub.T - np.eye(m)
    system[-1, :] = 1.0
    rhs = np.zeros(m)
    rhs[-1] = 1.0
    try:
        sol = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"stationary system is singular: {exc}") from exc
    pi = np.zeros(P.shape[0])
    pi[mask] = sol
    residual = np.max(np.abs(pi @ P - pi))
    if residual > RESIDUAL_TOL or not np.all(np.isfinite(pi)):
        raise SingularSystemError(f"stationary residual {residual:.3g} above tolerance")
    return pi


@dataclass(frozen=True)
class StationaryDistribution:
    """State marginal ``pi(i)`` and state-action law ``pi(i, a) = pi(i) d(i, a)``.

    ``pi_state_action`` coincides with the occupation-measure variables of the
    linear-programming formulation of average-cost MDPs.
    """

    pi_state: np.ndarray
    pi_state_action: np.ndarray


def stationary(model: MdpModel, policy) -> StationaryDistribution:
    table = policy_table(model, policy)
    pi = stationary_distribution(induced_matrix(model, policy))
    return StationaryDistribution(pi, pi[:, None] * table)


def average_cost(pi, cost_table) -> float:
    """``sum_{i,a} pi(i, a) cost(i, a)``.

    ``pi`` is a :class:`StationaryDistribution` or an ``(S, A)`` table.
    """
    if isinstance(pi, StationaryDistribution):
        pi = pi.pi_state_action
    pi = np.asarray(pi, dtype=float)
    cost_table = np.asarray(cost_table, dtype=float)
    if cost_table.shape != pi.shape:
        raise ValueError(f"cost table shape {cost_table.shape} does not match {pi.shape}")
    return float(np.sum(pi * cost_table))


@dataclass(frozen=True)
class Potentials:
    """Solution ``g`` of the Poisson equation, normalised so ``pi . g = 0``."""

    g: np.ndarray
    average: float
    pi: np.ndarray
    normalization: str = "pi.g=0"


def solve_poisson(P, cost, pi=None) -> Potentials:
    """Solve ``(I - P) g = cost - eta 1`` with ``pi . g = 0``.

    Uses the nonsingular system ``(I - P + 1 pi) g = cost - eta 1``; its
    solution satisfies ``pi . g = pi . (cost - eta) = 0``.
    """
    P = np.asarray(P, dtype=float)
    cost = np.asarray(cost, dtype=float)
    if pi is None:
        pi = stationary_distribution(P)
    n = P.shape[0]
    eta = float(pi @ cost)
    rhs = cost - eta
    system = np.eye(n) - P + np.outer(np.ones(n), pi)
    try:
        g = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"Poisson system is singular: {exc}") from exc
    scale = max(1.0, float(np.max(np.abs(cost))), float(np.max(np.abs(g))))
    residual = np.max(np.abs(g - (cost - eta + P @ g)))
    if not np.all(np.isfinite(g)) or residual > 1e-8 * scale:
        raise SingularSystemError(f"Poisson residual {residual:.3g} above tolerance")
    return Potentials(g=g, average=eta, pi=pi)


def potentials(model: MdpModel, policy, cost_table=None) -> Potentials:
    """Performance potentials of ``policy`` for an ``(S, A)`` cost table."""
    P = induced_matrix(model, policy)
    return solve_poisson(P, induced_cost(model, policy, cost_table))


def transient_distribution(model: MdpModel, policy, nu, t: int) -> np.ndarray:
    """State distribution ``nu (P^d)^t`` after ``t`` steps."""
    if t < 0:
        raise ValueError("t must be non-negative")
    nu = check_probability_vector(nu, model.n_states)
    P = induced_matrix(model, policy)
    out = np.array(nu)
    for _ in range(int(t)):
        out = out @ P
    return out
