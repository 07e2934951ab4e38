import numpy as np
import pytest

from cvar_mdp.model import MdpModel
from cvar_mdp.portfolio import build_mdp


def random_model(rng, max_states=5, max_actions=3, transition_costs=False, integer_costs=None):
    """Strictly positive transitions, so every policy induces an ergodic chain."""
    S = int(rng.integers(1, max_states + 1))
    A = int(rng.integers(1, max_actions + 1))
    transition = rng.random((S, A, S)) + 0.05
    transition /= transition.sum(axis=2, keepdims=True)
    shape = (S, A, S) if transition_costs else (S, A)
    if integer_costs is None:
        integer_costs = rng.random() < 0.3
    if integer_costs:
        cost = rng.integers(-3, 4, size=shape).astype(float)
    else:
        cost = np.round(rng.normal(size=shape), 3)
    return MdpModel(transition, cost)


def random_instances(n, seed, **kwargs):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        model = random_model(rng, **kwargs)
        alpha = float(rng.uniform(0.05, 0.95))
        yield rng, model, alpha


def random_deterministic(rng, model):
    return rng.integers(0, model.n_actions, size=model.n_states)


@pytest.fixture(scope="session")
def portfolio():
    return build_mdp()
