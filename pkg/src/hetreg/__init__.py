"""Bayesian nonparametric regression with unknown mean and variance.

The observation model is y = eta(x) + sqrt(V(x)) * eps with standard
normal noise and V = exp(f); both eta and f carry nonparametric priors
(spline expansions in one dimension, Gaussian fields beyond).  The
package provides the divergence calculus between parameters, prior
samplers and theoretical contraction rates, a blockwise Metropolis
posterior sampler with an sklearn-style estimator front end, numerical
verifiers for the supporting inequalities, and a batch CLI for
simulation and contraction experiments.
"""

from .design import DesignSpec
from .estimator import BayesianSplineRegression, SplineFeatures
from .experiment import (ConfigError, ContractionReport, ExperimentConfig,
                         config_from_dict, contraction_experiment, load_config)
from .model import (DivergenceReport, FunctionPair, avg_divergences,
                    avg_hellinger_bound, hellinger_sq_point, kl_point,
                    log_density, oracle_divergences, var_point, var_point_alt)
from .posterior import (Chain, ChainSummary, Dataset, PosteriorDraw,
                        SamplerConfig, diagnostics, effective_sample_size,
                        export_chain_csv, log_posterior,
                        posterior_distance_summary, run_mcmc, run_mcmc_gp,
                        split_rhat)
from .priors import (GPPriorConfig, RateSpec, SplinePriorConfig,
                     contraction_rate, dimension_cap, dimension_schedule,
                     sample_dimension_geometric, sample_integrated_bm,
                     sample_rescaled_se_path, sample_spline_prior,
                     solve_geometric_p, squared_exp_kernel, sup_tail_bound)
from .splines import (GramMatrix, ProjectionResult, SplineBasis, build_basis,
                      check_gram_regularity, eval_basis, eval_spline,
                      gram_matrix, project, spline_function)
from .theory import (BoundCheckReport, BudgetError, CoveringResult, SieveSpec,
                     approximation_rate_check, concentration_mc,
                     concentration_sweep, covering_number,
                     tail_probability_mc, verify_gp_sieve,
                     verify_hellinger_entropy_bound, verify_divergence_bounds)
from .truth import gen_data, holder_series, make_truth

__version__ = "0.1.0"

__all__ = [
    "BayesianSplineRegression", "BoundCheckReport", "BudgetError", "Chain",
    "ChainSummary", "ConfigError", "ContractionReport", "CoveringResult",
    "Dataset", "DesignSpec", "DivergenceReport", "ExperimentConfig",
    "FunctionPair", "GPPriorConfig", "GramMatrix", "PosteriorDraw",
    "ProjectionResult", "RateSpec", "SamplerConfig", "SieveSpec",
    "SplineBasis", "SplineFeatures", "SplinePriorConfig",
    "approximation_rate_check", "avg_divergences", "avg_hellinger_bound",
    "build_basis", "check_gram_regularity", "concentration_mc",
    "concentration_sweep", "config_from_dict", "contraction_experiment",
    "contraction_rate", "covering_number", "diagnostics", "dimension_cap",
    "dimension_schedule", "effective_sample_size", "eval_basis",
    "eval_spline", "export_chain_csv", "gen_data", "gram_matrix",
    "hellinger_sq_point", "holder_series", "kl_point", "load_config",
    "log_density", "log_posterior", "make_truth", "oracle_divergences",
    "posterior_distance_summary", "project", "run_mcmc", "run_mcmc_gp",
    "sample_dimension_geometric", "sample_integrated_bm",
    "sample_rescaled_se_path", "sample_spline_prior", "solve_geometric_p",
    "spline_function", "split_rhat", "squared_exp_kernel", "sup_tail_bound",
    "tail_probability_mc", "var_point", "var_point_alt", "verify_gp_sieve",
    "verify_hellinger_entropy_bound", "verify_divergence_bounds",
]
