"""Safe adaptive importance sampling with weighted-KDE mixture policies.

The sampler alternates between drawing batches from a mixture policy
(weighted kernel density estimate + heavy-tailed safe component) and folding
the importance-weighted draws back into the estimate. See the README for a
tour and the `bench` module for the replicated benchmark harness.
"""

from .algorithms import RunResult, StageRecord, run_standard_sais, run_subsampling_sais
from .baselines import RunningCovariance, run_amh, run_rwmh
from .bench import CellResult, ExperimentConfig, SummaryRow, run_experiment, summarize
from .cloud import DegenerateCloudError, Particle, ParticleCloud
from .diagnostics import (CltCheck, GaussianDensity, clt_variance_check_integral,
                          clt_variance_check_kde, criterion_C, mse_metric,
                          self_normalized_estimate, variance_functional)
from .kde import GAUSSIAN, GaussianKernel, kde_log_density, kde_sample, smoothed_reference
from .policy import PolicyState, SafeDensity, Schedules, default_safe_density, update_center
from .resample import bootstrap_kde_support, multinomial_draw, search_cost
from .targets import (IsoGaussianMixture, Target, UnsupportedTargetError,
                      banana_target, cold_start_target, gaussian_mixture_target)

__version__ = "0.1.0"

__all__ = [
    "CellResult", "CltCheck", "DegenerateCloudError", "ExperimentConfig",
    "GAUSSIAN", "GaussianDensity", "GaussianKernel", "IsoGaussianMixture",
    "Particle", "ParticleCloud", "PolicyState", "RunResult",
    "RunningCovariance", "SafeDensity", "Schedules", "StageRecord",
    "SummaryRow", "Target", "UnsupportedTargetError", "banana_target",
    "bootstrap_kde_support", "clt_variance_check_integral",
    "clt_variance_check_kde", "cold_start_target", "criterion_C",
    "default_safe_density", "gaussian_mixture_target", "kde_log_density",
    "kde_sample", "mse_metric", "multinomial_draw", "run_amh",
    "run_experiment", "run_rwmh", "run_standard_sais",
    "run_subsampling_sais", "search_cost", "self_normalized_estimate",
    "smoothed_reference", "summarize", "update_center", "variance_functional",
    "__version__",
]
