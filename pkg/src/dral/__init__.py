"""Distributionally robust active learning for Gaussian process regression on finite grids."""

from .acquisition import StrategyKind, select
from .ambiguity import AmbiguitySet, DiscreteDistribution, gaussian_reference, worst_case_expectation
from .config import ExperimentConfig, load_config, parse_config
from .gp import GpState, beta_confidence, fit_hyperparameters, sample_prior
from .harness import aggregate, compute_diagnostics, compute_error, load_dataset, run_trial, run_trials, synthetic_grid
from .kernel import KernelKind, KernelSpec, eval_kernel, gram, sigma_lipschitz_constant

__version__ = "0.1.0"

__all__ = [
    "AmbiguitySet",
    "DiscreteDistribution",
    "ExperimentConfig",
    "GpState",
    "KernelKind",
    "KernelSpec",
    "StrategyKind",
    "aggregate",
    "beta_confidence",
    "compute_diagnostics",
    "compute_error",
    "eval_kernel",
    "fit_hyperparameters",
    "gaussian_reference",
    "gram",
    "load_config",
    "load_dataset",
    "parse_config",
    "run_trial",
    "run_trials",
    "sample_prior",
    "select",
    "sigma_lipschitz_constant",
    "synthetic_grid",
    "worst_case_expectation",
]
