"""fbmlab: fractional Gaussian noise generation, rescaled-range Hurst
estimation, fractional Ornstein-Uhlenbeck analytics, FBM-driven SDE Monte
Carlo, and a minibatch gradient-noise laboratory."""

__version__ = "0.1.0"

from .fou import DensityCurve, FouParams, fpt_density_approx, state_density, survival_probability, z_of_t
from .hurst import HurstEstimate, WindowPolicy, estimate_hurst, rs_statistic
from .noise import (
    FgnSeries,
    StableSeries,
    fgn_autocovariance,
    fgn_to_fbm,
    generate_fgn,
    generate_stable,
)
from .sde import ConvergenceResult, Dynamics, FptBatch, SimConfig, convergence_slope, first_passage_mc, simulate_fou_paths
from .sgn import (
    SamplingScheme,
    SgnTrace,
    anderson_darling_normality,
    sample_zeta,
    sampling_noise_moments,
    scalarize_trace,
    shapiro_wilk_normality,
    train_toy_and_log,
)

__all__ = [
    "__version__",
    "FgnSeries",
    "StableSeries",
    "fgn_autocovariance",
    "generate_fgn",
    "fgn_to_fbm",
    "generate_stable",
    "WindowPolicy",
    "HurstEstimate",
    "rs_statistic",
    "estimate_hurst",
    "FouParams",
    "DensityCurve",
    "z_of_t",
    "state_density",
    "survival_probability",
    "fpt_density_approx",
    "Dynamics",
    "SimConfig",
    "FptBatch",
    "ConvergenceResult",
    "simulate_fou_paths",
    "first_passage_mc",
    "convergence_slope",
    "SamplingScheme",
    "SgnTrace",
    "sampling_noise_moments",
    "sample_zeta",
    "train_toy_and_log",
    "scalarize_trace",
    "anderson_darling_normality",
    "shapiro_wilk_normality",
]
