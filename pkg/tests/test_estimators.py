import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from cvar_mdp.estimators import (AverageCostPolicyIteration, CVaRMaximizer, CVaRPolicyIteration,
                                 GlobalCVaRSolver, PolicyRiskProfile)
from cvar_mdp.risk import long_run_cvar
from cvar_mdp.solvers import solve_cvar

from conftest import random_model


@pytest.fixture
def model():
    return random_model(np.random.default_rng(30), max_states=5)


def test_get_params_and_clone():
    est = CVaRPolicyIteration(alpha=0.8, beta=0.1, n_starts=3)
    params = est.get_params()
    assert params["alpha"] == 0.8 and params["n_starts"] == 3
    again = clone(est).set_params(alpha=0.5)
    assert again.alpha == 0.5 and est.alpha == 0.8


def test_policy_iteration_matches_function(model):
    est = CVaRPolicyIteration(alpha=0.7).fit(model)
    ref = solve_cvar(model, 0.7)
    assert est.policy_ == ref.converged_policy
    assert est.objective_ == pytest.approx(ref.objective)
    assert est.predict().tolist() == ref.converged_policy.actions.tolist()
    assert est.predict([0]).tolist() == [ref.converged_policy.actions[0]]
    assert est.score(model) == pytest.approx(-ref.objective)
    with pytest.raises(IndexError):
        est.predict([model.n_states])


def test_global_not_worse_than_multistart(model):
    glob = GlobalCVaRSolver(alpha=0.7).fit(model)
    local = CVaRPolicyIteration(alpha=0.7, n_starts=5).fit(model)
    assert glob.objective_ <= local.objective_ + 1e-9
    assert len(local.local_optima_) >= 1


def test_average_and_maximizer(model):
    low = AverageCostPolicyIteration().fit(model)
    high = AverageCostPolicyIteration(sense="max").fit(model)
    assert low.average_ <= high.average_
    mx = CVaRMaximizer(alpha=0.6).fit(model)
    assert mx.max_cvar_ >= long_run_cvar(model, low.policy_, 0.6)[1] - 1e-9


def test_risk_profile(model):
    est = CVaRPolicyIteration(alpha=0.7).fit(model)
    profile = PolicyRiskProfile(alpha=0.7).fit(model)
    X = profile.transform([est.policy_, np.zeros(model.n_states, dtype=int)])
    assert X.shape == (2, 4)
    assert X[0, 3] == pytest.approx(est.objective_)
    assert list(profile.get_feature_names_out()) == ["mean", "std", "var", "cvar"]


def test_not_fitted():
    with pytest.raises(NotFittedError):
        CVaRPolicyIteration().predict()
