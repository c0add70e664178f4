"""Objective priors from a constant log + Hyvarinen score, with samplers,
Bayes factors and frequentist comparisons against Jeffreys priors."""

from .exceptions import *  # noqa: F401,F403
from .prior import (DensityTable, PriorSpec, ProductPrior, UTable, log_prior_ratio, normalize,
                    solve_half_line_anchor, solve_u, step_u, tail_bound_check, u_derivatives)
from .scoring import (InfoReport, ScoreBreakdown, convexity_eigenvalues,
                      euler_lagrange_crosscheck, info_functionals, score_at,
                      score_identity_residual)
from .models import (Dataset, ModelSpec, jeffreys_posterior_normal_mean,
                     jeffreys_posterior_poisson)
from .mcmc import (Chain, ChainSummary, ProposalSpec, RandomWalkGaussian, RandomWalkLogScale,
                   chain_summary, mh_step, run_chain, run_mixture_gibbs)
from .selection import (BFReport, NestedReport, bayes_factor_poisson_vs_geometric,
                        intrinsic_bf10, intrinsic_prior, marginal_likelihood, nested_comparison,
                        replication_study)
from .estimators import (MixturePosteriorMH, PoissonRegressionMH, ScalarPosteriorMH,
                         ScoringRulePrior)

__version__ = "0.1.0"
