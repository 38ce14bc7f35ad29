"""Small area estimation of finite-population means and Gini coefficients
from grouped frequency data.

The model places a latent power-transformed normal mixed model (random area
intercepts and random area dispersions) under multinomial class counts.
Hyperparameters are estimated by Monte Carlo EM with importance-sampling
E-steps; area parameters are predicted by empirical Bayes via a Gibbs sampler
over the latent finite population.
"""

from .baseline import Midpoints, gini, naive_mean
from .bootstrap import bootstrap_rmse, generate_population
from .datamodel import (
    AreaRecord,
    FittedModel,
    GroupedSample,
    Hyperparameters,
    RandomEffects,
    Thresholds,
    load_areas,
    load_model,
    save_model,
)
from .eb_gibbs import EbEstimate, PosteriorDraw, eb_estimate, predict_out_of_sample
from .eis_sir import ProposalParams, WeightCollapseError, WeightedDraws, eis_fit, sir
from .likelihood import complete_loglik, group_probs, log_group_probs, log_pmf, log_prior_u
from .mcem import (
    EmConfig,
    EStepDraws,
    FitResult,
    check_convergence,
    e_step,
    fit,
    initial_values,
    m_step,
    marginal_loglik_is,
)
from .simharness import (
    build_design_populations,
    default_shift,
    simulate_design_based,
    simulate_model_based,
    synthetic_population,
)
from .transform import BoxCox

__version__ = "0.1.0"

__all__ = [
    "AreaRecord",
    "BoxCox",
    "EbEstimate",
    "EmConfig",
    "EStepDraws",
    "FitResult",
    "FittedModel",
    "GroupedSample",
    "Hyperparameters",
    "Midpoints",
    "PosteriorDraw",
    "ProposalParams",
    "RandomEffects",
    "Thresholds",
    "WeightCollapseError",
    "WeightedDraws",
    "bootstrap_rmse",
    "build_design_populations",
    "check_convergence",
    "complete_loglik",
    "default_shift",
    "e_step",
    "eb_estimate",
    "eis_fit",
    "fit",
    "generate_population",
    "gini",
    "group_probs",
    "initial_values",
    "load_areas",
    "load_model",
    "log_group_probs",
    "log_pmf",
    "log_prior_u",
    "m_step",
    "marginal_loglik_is",
    "naive_mean",
    "predict_out_of_sample",
    "save_model",
    "simulate_design_based",
    "simulate_model_based",
    "sir",
    "synthetic_population",
]
