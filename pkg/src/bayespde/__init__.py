"""Bayesian inference for PDE problems from scattered noisy sensor data.

Surrogates (tanh networks with exact nested derivatives, truncated
Karhunen-Loeve expansions), posterior estimators (Hamiltonian Monte Carlo,
mean-field variational inference, potential-flow transport), non-Bayesian
baselines (PINN point estimates, MC dropout, GP regression) and a
configuration-driven experiment harness.
"""

__version__ = "0.1.0"

from .adam import AdamState, adam_step
from .datagen import NoiseSpec, SensorLayout, build_experiment_dataset, generate_sensors
from .flow import FlowConfig, PotentialNet, flow_fit, flow_forward, flow_sample
from .hmc import HmcConfig, hmc_sample, leapfrog
from .klbasis import KLBasis, KlSurrogate, kl_eigenpairs, kl_eval
from .mlp import (
    Jet,
    MlpArchitecture,
    MlpSurrogate,
    PriorScales,
    mlp_forward,
    mlp_jet,
)
from .posterior import (
    LogPosteriorTarget,
    ObservationSet,
    PosteriorSamples,
    SensorDataset,
    log_prior,
    predictive_stats,
)
from .problems import PdeProblem, exact_eval, get_problem, problem_names, residual
from .vi import ViParams, vi_fit, vi_sample

__all__ = [
    "__version__",
    "AdamState",
    "adam_step",
    "NoiseSpec",
    "SensorLayout",
    "build_experiment_dataset",
    "generate_sensors",
    "FlowConfig",
    "PotentialNet",
    "flow_fit",
    "flow_forward",
    "flow_sample",
    "HmcConfig",
    "hmc_sample",
    "leapfrog",
    "KLBasis",
    "KlSurrogate",
    "kl_eigenpairs",
    "kl_eval",
    "Jet",
    "MlpArchitecture",
    "MlpSurrogate",
    "PriorScales",
    "mlp_forward",
    "mlp_jet",
    "LogPosteriorTarget",
    "ObservationSet",
    "PosteriorSamples",
    "SensorDataset",
    "log_prior",
    "predictive_stats",
    "PdeProblem",
    "exact_eval",
    "get_problem",
    "problem_names",
    "residual",
    "ViParams",
    "vi_fit",
    "vi_sample",
]
