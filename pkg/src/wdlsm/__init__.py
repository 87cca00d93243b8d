"""Bayesian latent space models for dynamic weighted networks.

Count (Poisson) and non-negative real (tobit) edge weights, an MH-within-Gibbs
sampler, a case-control likelihood approximation for large networks,
simulation generators and fit diagnostics.
"""

from .errors import (DegenerateInputError, NumericalError, ParseError, UsageError,
                     WDLSMError)
from .model import (DynamicNetwork, DyadKind, Hyperparams, LatentTrajectories, ModelParams,
                    log_likelihood, log_latent_prior, log_param_prior)
from .initialization import InitConfig, initialize_all
from .sampler import PosteriorSamples, SamplerConfig, posterior_summary, run_chain
from .simgen import SimConfig, simulate

__version__ = "0.1.0"

__all__ = [
    "DynamicNetwork", "DyadKind", "Hyperparams", "LatentTrajectories", "ModelParams",
    "log_likelihood", "log_latent_prior", "log_param_prior",
    "InitConfig", "initialize_all",
    "SamplerConfig", "PosteriorSamples", "run_chain", "posterior_summary",
    "SimConfig", "simulate",
    "WDLSMError", "UsageError", "ParseError", "DegenerateInputError", "NumericalError",
]
