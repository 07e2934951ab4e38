"""scikit-learn style wrappers around the solvers.

``fit`` takes an :class:`~cvar_mdp.model.MdpModel`; fitted estimators expose
``policy_`` and ``predict(states)`` returns the chosen action per state.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .model import DeterministicPolicy, as_policy
from .risk import RiskParams, evaluate
from .solvers import (maximize_cvar, multi_start, solve_average_mdp, solve_global_bruteforce,
                      solve_mean_cvar)
from .validation import check_model


class _PolicyEstimator(BaseEstimator):

    def predict(self, states=None):
        """Actions of the fitted policy; all states when ``states`` is None."""
        check_is_fitted(self, "policy_")
        actions = self.policy_.actions
        if states is None:
            return actions.copy()
        states = np.asarray(states, dtype=np.int64)
        if np.any(states < 0) or np.any(states >= actions.size):
            raise IndexError("state index out of range")
        return actions[states]

    def score(self, model):
        """Negated objective of the fitted policy on ``model`` (higher is better)."""
        check_is_fitted(self, "policy_")
        report = evaluate(check_model(model), self.policy_, self._risk_params())
        return -report.objective

    def _risk_params(self):
        return RiskParams(self.alpha, getattr(self, "beta", 0.0))


class CVaRPolicyIteration(_PolicyEstimator):
    """Local minimiser of long-run CVaR (plus ``beta`` times the mean cost).

    With ``n_starts > 1`` the best of several seeded random starts is kept.
    """

    def __init__(self, alpha=0.66, beta=0.0, n_starts=1, random_state=0, initial_policy=None):
        self.alpha = alpha
        self.beta = beta
        self.n_starts = n_starts
        self.random_state = random_state
        self.initial_policy = initial_policy

    def fit(self, model, y=None):
        check_model(model)
        params = self._risk_params()
        if self.n_starts > 1:
            ms = multi_start(model, params, self.n_starts, self.random_state)
            self.result_ = ms.best
            self.local_optima_ = ms.distinct_local_optima
        else:
            self.result_ = solve_mean_cvar(model, params, self.initial_policy)
            self.local_optima_ = [(self.result_.converged_policy, self.result_.objective)]
        self.policy_ = self.result_.converged_policy
        self.objective_ = self.result_.objective
        self.var_ = self.result_.var
        self.n_iter_ = self.result_.iterations
        return self


class GlobalCVaRSolver(_PolicyEstimator):
    """Global minimiser by solving one average-cost MDP per candidate VaR."""

    def __init__(self, alpha=0.66, beta=0.0):
        self.alpha = alpha
        self.beta = beta

    def fit(self, model, y=None):
        self.result_ = solve_global_bruteforce(check_model(model), self._risk_params())
        self.policy_ = self.result_.best_policy
        self.objective_ = self.result_.best_cvar
        self.var_ = self.result_.argmin_y
        return self


class AverageCostPolicyIteration(_PolicyEstimator):
    """Classical average-cost policy iteration on the model's expected costs."""

    def __init__(self, sense="min", alpha=0.66):
        self.sense = sense
        self.alpha = alpha

    def fit(self, model, y=None):
        self.result_ = solve_average_mdp(check_model(model), sense=self.sense)
        self.policy_ = self.result_.converged_policy
        self.average_ = self.result_.objective
        return self


class CVaRMaximizer(_PolicyEstimator):
    """Maximal long-run CVaR via the min-max interchange."""

    def __init__(self, alpha=0.66, tol=1e-6):
        self.alpha = alpha
        self.tol = tol

    def fit(self, model, y=None):
        self.result_ = maximize_cvar(check_model(model), RiskParams(self.alpha), self.tol)
        self.policy_ = self.result_.inner_policy
        self.max_cvar_ = self.result_.max_cvar
        self.var_ = self.result_.outer_y
        return self

    def score(self, model):
        check_is_fitted(self, "policy_")
        return evaluate(check_model(model), self.policy_, RiskParams(self.alpha)).cvar


class PolicyRiskProfile(TransformerMixin, BaseEstimator):
    """Map policies to ``[mean, std, VaR, CVaR]`` rows under a fitted model."""

    feature_names = ("mean", "std", "var", "cvar")

    def __init__(self, alpha=0.66):
        self.alpha = alpha

    def fit(self, model, y=None):
        self.model_ = check_model(model)
        return self

    def transform(self, policies):
        check_is_fitted(self, "model_")
        params = RiskParams(self.alpha)
        rows = []
        for policy in policies:
            rep = evaluate(self.model_, as_policy(policy), params)
            rows.append([rep.mean_cost, rep.std_dev, rep.var, rep.cvar])
        return np.array(rows).reshape(-1, 4)

    def get_feature_names_out(self, input_features=None):
        return np.array(self.feature_names, dtype=object)


__all__ = ["AverageCostPolicyIteration", "CVaRMaximizer", "CVaRPolicyIteration",
           "DeterministicPolicy", "GlobalCVaRSolver", "PolicyRiskProfile"]
