import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvar_mdp.chain import (average_cost, check_ergodicity, potentials, solve_poisson,
                            stationary, stationary_distribution, transient_distribution)
from cvar_mdp.exceptions import NotErgodicError
from cvar_mdp.model import MdpModel, induced_cost, induced_matrix

from conftest import random_model


def test_two_state_stationary():
    P = np.array([[0.9, 0.1], [0.5, 0.5]])
    np.testing.assert_allclose(stationary_distribution(P), [5 / 6, 1 / 6], atol=1e-14)


def test_identity_one_state():
    np.testing.assert_array_equal(stationary_distribution(np.eye(1)), [1.0])


def test_reducible_chain_rejected():
    P = np.eye(2)
    with pytest.raises(NotErgodicError):
        stationary_distribution(P)


def test_transient_state_gets_zero_mass():
    P = np.array([[0.0, 1.0], [0.0, 1.0]])
    np.testing.assert_array_equal(stationary_distribution(P), [0.0, 1.0])


def test_non_stochastic_rejected():
    with pytest.raises(ValueError, match="row-stochastic"):
        stationary_distribution(np.array([[0.5, 0.4], [0.5, 0.5]]))


class TestErgodicity:

    def test_ergodic(self):
        report = check_ergodicity(np.array([[0.9, 0.1], [0.5, 0.5]]))
        assert report.ergodic and report.unichain
        assert report.period == 1

    def test_periodic_two_cycle(self):
        report = check_ergodicity(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert report.irreducible
        assert not report.aperiodic
        assert report.period == 2
        # still a unique stationary law
        np.testing.assert_allclose(stationary_distribution([[0, 1], [1, 0]]), [0.5, 0.5])

    def test_three_cycle_with_chord(self):
        P = np.array([[0, 1, 0], [0, 0, 1], [0.5, 0, 0.5]])
        assert check_ergodicity(P).aperiodic

    def test_two_closed_classes(self):
        report = check_ergodicity(np.eye(3))
        assert report.n_recurrent_classes == 3
        assert not report.irreducible and not report.unichain

    def test_transient_plus_one_class(self):
        report = check_ergodicity(np.array([[0.5, 0.5], [0.0, 1.0]]))
        assert report.unichain and not report.irreducible


class TestPoisson:

    def test_constant_cost_zero_potential(self):
        P = np.array([[0.2, 0.8], [0.6, 0.4]])
        pot = solve_poisson(P, np.array([3.0, 3.0]))
        assert pot.average == pytest.approx(3.0)
        np.testing.assert_allclose(pot.g, 0.0, atol=1e-13)

    def test_two_state_closed_form(self):
        # g(0) - g(1) = (c0 - c1) / (p + q) for P = [[1-p, p], [q, 1-q]]
        p, q = 0.3, 0.2
        P = np.array([[1 - p, p], [q, 1 - q]])
        pot = solve_poisson(P, np.array([1.0, 6.0]))
        assert pot.g[0] - pot.g[1] == pytest.approx(-5.0 / (p + q))
        assert pot.pi @ pot.g == pytest.approx(0.0, abs=1e-13)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_stationary_and_poisson_properties(seed):
    rng = np.random.default_rng(seed)
    model = random_model(rng)
    d = rng.integers(0, model.n_actions, model.n_states)
    P = induced_matrix(model, d)
    pi = stationary_distribution(P)
    assert np.all(pi > 0)
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(pi @ P, pi, atol=1e-12)
    cost = induced_cost(model, d)
    pot = potentials(model, d)
    np.testing.assert_allclose(pot.g, cost - pot.average + P @ pot.g, atol=1e-10)
    assert pi @ pot.g == pytest.approx(0.0, abs=1e-10)
    assert pot.average == pytest.approx(average_cost(stationary(model, d), model.expected_cost))


def test_transient_distribution_converges():
    rng = np.random.default_rng(3)
    model = random_model(rng, max_states=4)
    d = np.zeros(model.n_states, dtype=int)
    nu = np.eye(model.n_states)[0]
    far = transient_distribution(model, d, nu, 400)
    np.testing.assert_allclose(far, stationary(model, d).pi_state, atol=1e-10)
    np.testing.assert_array_equal(transient_distribution(model, d, nu, 0), nu)


def test_stationary_state_action_law():
    model = MdpModel(np.full((2, 2, 2), 0.5), np.zeros((2, 2)))
    dist = stationary(model, [[0.25, 0.75], [1.0, 0.0]])
    np.testing.assert_allclose(dist.pi_state_action, [[0.125, 0.375], [0.5, 0.0]])
