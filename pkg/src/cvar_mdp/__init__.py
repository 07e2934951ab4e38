"""Long-run CVaR optimisation of finite Markov decision processes."""

from .chain import (ErgodicityReport, Potentials, StationaryDistribution, average_cost,
                    check_ergodicity, potentials, stationary, stationary_distribution,
                    transient_distribution)
from .estimators import (AverageCostPolicyIteration, CVaRMaximizer, CVaRPolicyIteration,
                         GlobalCVaRSolver, PolicyRiskProfile)
from .exceptions import (CvarMdpError, DimensionError, InvalidModelError, NonConvergenceError,
                         NotErgodicError, SingularSystemError)
from .model import (DeterministicPolicy, MdpModel, MixedPolicy, RandomizedPolicy, induced_cost,
                    induced_matrix, mix_policies, validate_model)
from .portfolio import PortfolioConfig, build_mdp, default_config, describe_policy
from .risk import (DiscreteLossDistribution, EvaluationReport, RiskParams, candidate_var_set,
                   cvar_derivative, cvar_difference_terms, delta_cvar, evaluate, long_run_cvar,
                   mean_cvar_cost, pseudo_cost, pseudo_cvar, steady_loss_distribution, var_of)
from .solvers import (GlobalSolveResult, MaxSolveResult, SolveResult, check_local_optimality,
                      maximize_cvar, multi_start, policy_improvement, solve_average_mdp,
                      solve_cvar, solve_global_bruteforce, solve_mean_cvar)

__version__ = "0.1.0"
