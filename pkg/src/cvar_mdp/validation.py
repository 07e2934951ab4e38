"""Input validation helpers used at public entry points."""

import numpy as np

from .exceptions import InvalidModelError
from .model import MdpModel, validate_model


def check_model(model):
    """Raise :class:`InvalidModelError` unless ``model`` is a valid MdpModel."""
    if not isinstance(model, MdpModel):
        raise TypeError(f"expected MdpModel, got {type(model).__name__}")
    violations = validate_model(model)
    if violations:
        head = "; ".join(str(v) for v in violations[:3])
        more = f" (+{len(violations) - 3} more)" if len(violations) > 3 else ""
        raise InvalidModelError(f"invalid model: {head}{more}", violations)
    return model


def check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def check_beta(beta):
    beta = float(beta)
    if not (beta >= 0.0 and np.isfinite(beta)):
        raise ValueError(f"beta must be a finite non-negative number, got {beta}")
    return beta


def check_probability_vector(nu, size, tol=1e-9):
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (size,):
        raise ValueError(f"expected a probability vector of length {size}, got shape {nu.shape}")
    if np.any(nu < -tol) or abs(nu.sum() - 1.0) > tol:
        raise ValueError("vector is not a probability distribution")
    return nu


def check_stochastic_matrix(P, tol=1e-9):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError(f"transition matrix must be square, got shape {P.shape}")
    if np.any(P < -tol) or np.any(np.abs(P.sum(axis=1) - 1.0) > tol):
        raise ValueError("transition matrix must be row-stochastic")
    return P
