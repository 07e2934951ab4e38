import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvar_mdp.model import MdpModel, mix_policies, DeterministicPolicy
from cvar_mdp.risk import (DiscreteLossDistribution, RiskParams, candidate_var_set,
                           cvar_derivative, cvar_difference_terms, delta_cvar, evaluate,
                           long_run_cvar, mean_cvar_cost, pseudo_cost, pseudo_cvar,
                           steady_loss_distribution)

from conftest import random_model

ATOMS = DiscreteLossDistribution.from_weights([-5.0, 0.0, 10.0], [0.5, 0.3, 0.2])


class TestLossDistribution:

    def test_var_levels(self):
        assert ATOMS.var(0.66) == 0.0
        assert ATOMS.var(0.85) == 10.0
        assert ATOMS.var(0.5) == -5.0
        assert ATOMS.var(0.8) == 0.0

    def test_cvar_functional(self):
        assert ATOMS.cvar(0.66) == pytest.approx(2.0 / 0.34, abs=1e-12)
        assert ATOMS.cvar(0.85) == pytest.approx(10.0)

    def test_functional_differs_from_tail_mean(self):
        assert ATOMS.tail_expectation(0.66) == pytest.approx((0.2 * 10) / 0.5)
        assert ATOMS.tail_expectation(0.66) != pytest.approx(ATOMS.cvar(0.66))

    def test_mean_and_std(self):
        assert ATOMS.mean == pytest.approx(-0.5)
        assert ATOMS.std == pytest.approx(np.sqrt(0.5 * 20.25 + 0.3 * 0.25 + 0.2 * 110.25))

    def test_merge_and_drop(self):
        dist = DiscreteLossDistribution.from_weights([1.0, 2.0, 1.0, 7.0], [0.2, 0.5, 0.3, 0.0])
        np.testing.assert_array_equal(dist.values, [1.0, 2.0])
        np.testing.assert_allclose(dist.probs, [0.5, 0.5])

    def test_single_atom(self):
        dist = DiscreteLossDistribution.from_weights([3.0], [1.0])
        for alpha in (0.01, 0.5, 0.99):
            assert dist.cvar(alpha) == pytest.approx(3.0)

    def test_exact_cdf_boundary(self):
        # cumulative sums that land on alpha only up to round-off
        dist = DiscreteLossDistribution.from_weights([1.0, 2.0, 3.0], [0.1, 0.2, 0.7])
        assert dist.var(0.3) == 2.0


class TestPseudoCost:

    def test_hinge(self):
        np.testing.assert_allclose(pseudo_cost([1.0, 3.0], 2.0, 0.5), [2.0, 4.0])

    def test_mean_cvar_reduces_at_beta_zero(self):
        c = np.array([-1.0, 0.5, 4.0])
        np.testing.assert_array_equal(mean_cvar_cost(c, 0.5, RiskParams(0.7, 0.0)),
                                      pseudo_cost(c, 0.5, 0.7))
        np.testing.assert_allclose(mean_cvar_cost(c, 0.5, RiskParams(0.7, 2.0)),
                                   pseudo_cost(c, 0.5, 0.7) + 2.0 * c)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.3])
    def test_alpha_range(self, alpha):
        with pytest.raises(ValueError):
            RiskParams(alpha)

    def test_negative_beta(self):
        with pytest.raises(ValueError):
            RiskParams(0.5, -1.0)


def test_one_state_cvar_is_cost():
    model = MdpModel(np.ones((1, 1, 1)), np.array([[7.5]]))
    var, cvar = long_run_cvar(model, [0], 0.9)
    assert var == 7.5 and cvar == pytest.approx(7.5)


def test_loss_distribution_with_transition_costs():
    transition = np.array([[[0.5, 0.5]], [[0.5, 0.5]]])
    cost = np.array([[[0.0, 10.0]], [[0.0, 10.0]]])
    dist = steady_loss_distribution(MdpModel(transition, cost), [0, 0])
    np.testing.assert_array_equal(dist.values, [0.0, 10.0])
    np.testing.assert_allclose(dist.probs, [0.5, 0.5])


def test_candidate_set_skips_impossible_outcomes():
    transition = np.array([[[1.0, 0.0]], [[0.5, 0.5]]])
    cost = np.array([[[1.0, 99.0]], [[2.0, 3.0]]])
    np.testing.assert_array_equal(candidate_var_set(MdpModel(transition, cost)), [1.0, 2.0, 3.0])


def test_evaluate_report_consistency():
    rng = np.random.default_rng(11)
    model = random_model(rng, max_states=5)
    d = rng.integers(0, model.n_actions, model.n_states)
    report = evaluate(model, d, RiskParams(0.7, 0.3))
    assert report.pseudo_cvar_at_var == pytest.approx(report.cvar)
    assert report.objective == pytest.approx(report.cvar + 0.3 * report.mean_cost)
    assert report.cvar >= report.var - 1e-12
    assert report.cvar >= report.mean_cost - 1e-12
    assert set(report.to_dict()) >= {"var", "cvar", "mean_cost", "std_dev", "potentials"}


@st.composite
def instance(draw, transition_costs=st.booleans()):
    seed = draw(st.integers(0, 2**32 - 1))
    tc = draw(transition_costs)
    rng = np.random.default_rng(seed)
    model = random_model(rng, transition_costs=tc)
    alpha = float(rng.uniform(0.05, 0.95))
    d = rng.integers(0, model.n_actions, model.n_states)
    dp = rng.integers(0, model.n_actions, model.n_states)
    return model, alpha, d, dp


@settings(max_examples=80, deadline=None)
@given(instance())
def test_pseudo_cvar_minimised_at_var(data):
    model, alpha, d, _ = data
    var, cvar = long_run_cvar(model, d, alpha)
    values = [pseudo_cvar(model, d, y, alpha) for y in candidate_var_set(model)]
    assert min(values) == pytest.approx(cvar, abs=1e-10)
    assert pseudo_cvar(model, d, var, alpha) == pytest.approx(cvar, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(instance())
def test_difference_formula(data):
    model, alpha, d, dp = data
    params = RiskParams(alpha)
    bracket, delta = cvar_difference_terms(model, d, dp, params)
    diff = long_run_cvar(model, dp, params)[1] - long_run_cvar(model, d, params)[1]
    assert diff == pytest.approx(bracket + delta, abs=1e-8)
    assert delta <= 1e-12
    assert delta == pytest.approx(delta_cvar(model, d, dp, params), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(instance(), st.floats(0.0, 3.0))
def test_difference_formula_mean_cvar(data, beta):
    model, alpha, d, dp = data
    params = RiskParams(alpha, beta)
    bracket, delta = cvar_difference_terms(model, d, dp, params)
    diff = evaluate(model, dp, params).objective - evaluate(model, d, params).objective
    assert diff == pytest.approx(bracket + delta, abs=1e-8)
    assert delta <= 1e-12


def test_derivative_matches_finite_difference():
    rng = np.random.default_rng(5)
    checked = 0
    while checked < 30:
        model = random_model(rng, integer_costs=False)
        alpha = float(rng.uniform(0.05, 0.95))
        d = rng.integers(0, model.n_actions, model.n_states)
        dp = rng.integers(0, model.n_actions, model.n_states)
        dist = steady_loss_distribution(model, d)
        var = dist.var(alpha)
        below = dist.values < var
        prev_cdf = dist.cdf(dist.values[below][-1]) if below.any() else 0.0
        if dist.cdf(var) <= alpha + 1e-3 or prev_cdf >= alpha - 1e-3:
            continue
        delta = 1e-5
        mixed = mix_policies(DeterministicPolicy(d), DeterministicPolicy(dp), delta)
        fd = (long_run_cvar(model, mixed, alpha)[1] - long_run_cvar(model, d, alpha)[1]) / delta
        analytic = cvar_derivative(model, d, dp, alpha)
        assert fd == pytest.approx(analytic, rel=1e-3, abs=1e-6)
        checked += 1
