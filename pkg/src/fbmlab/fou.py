"""Closed-form analytics for the fractional Ornstein-Uhlenbeck process

    dw_t = -a w_t dt + sigma dB_t^H,    H in (0.5, 1),

started from a point mass at w0: the time-dependent variance kernel Z(t),
the Gaussian state density with mean e^(-at) w0 and variance 2 Z(t), the
in-interval occupation probability of that free density, and the heavy-tail
first-passage-time shape  a^(3H) t^(2H-2) e^(-at) / sigma  valid for large t.

The analytic formulas are restricted to H strictly above 0.5: the memory
kernel H(2H-1) |tau|^(2H-2) flips sign at H = 0.5 and Gamma(2H-1) blows up
there.  ``ou_variance_kernel`` serves the H = 0.5 limit in closed form, and
Monte Carlo (see ``fbmlab.sde``) covers H below 0.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .specfun import exp2t_scaled_kummer_m, exp_integral_e, gamma_fn

__all__ = [
    "FouParams",
    "DensityCurve",
    "z_of_t",
    "ou_variance_kernel",
    "state_density",
    "survival_probability",
    "fpt_density_approx",
    "fpt_normalization",
    "mean_escape_time",
]


@dataclass(frozen=True)
class FouParams:
    """Drift coefficient a, noise intensity sigma, Hurst index, start w0."""

    a: float
    sigma: float
    hurst: float
    w0: float = 0.0

    def __post_init__(self):
        if self.a <= 0.0:
            raise ValueError(f"a must be positive, got {self.a}")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0.5 < self.hurst < 1.0:
            raise ValueError(
                f"analytic formulas require hurst in (0.5, 1), got {self.hurst}; "
                "use ou_variance_kernel at 0.5 or Monte Carlo below it"
            )


@dataclass(frozen=True)
class DensityCurve:
    """A density sampled on a strictly increasing grid at one time point."""

    t: float
    grid: np.ndarray
    density: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("w,density\n")
            for w, p in zip(self.grid, self.density):
                fh.write(f"{float(w)!r},{float(p)!r}\n")


def z_of_t(params: FouParams, t: float) -> float:
    """Variance kernel Z(t); the state density has variance 2 Z(t).

    Three-term closed form: a stationary plateau minus two transients,
    one through E_(2-2H)(at) and one through e^(-2at) M(2H-1, 2H, at).
    The Kummer product is evaluated in its damped form, so large at is
    safe.  Converges to sigma^2 (1 - e^(-2at)) / (4a) as H -> 0.5+.
    """
    if t <= 0.0:
        raise ValueError(f"t must be positive, got {t}")
    h, a, sig = params.hurst, params.a, params.sigma
    at = a * t
    front = sig**2 * h / (2.0 * a)
    plateau = (2.0 * h - 1.0) * a ** (1.0 - 2.0 * h) * gamma_fn(2.0 * h - 1.0)
    e_term = (2.0 * h - 1.0) * t ** (2.0 * h - 1.0) * exp_integral_e(2.0 - 2.0 * h, at).value
    m_term = t ** (2.0 * h - 1.0) * exp2t_scaled_kummer_m(2.0 * h - 1.0, 2.0 * h, at).value
    z = front * (plateau - e_term - m_term)
    if not z > 0.0:
        raise ArithmeticError(f"variance kernel came out non-positive ({z}) at t={t}; "
                              "cancellation beyond working precision")
    return z


def ou_variance_kernel(a: float, sigma: float, t: float) -> float:
    """Classical OU (H = 0.5) value of the same kernel: sigma^2 (1-e^(-2at))/(4a)."""
    return sigma**2 * (1.0 - math.exp(-2.0 * a * t)) / (4.0 * a)


def state_density(params: FouParams, t: float, grid: np.ndarray) -> DensityCurve:
    """Gaussian state density on the grid: mean e^(-at) w0, variance 2 Z(t)."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0.0):
        raise ValueError("grid must be one-dimensional and strictly increasing")
    z = z_of_t(params, t)
    mean = math.exp(-params.a * t) * params.w0
    density = np.exp(-((grid - mean) ** 2) / (4.0 * z)) / (2.0 * math.sqrt(math.pi * z))
    return DensityCurve(t=t, grid=grid, density=density)


def survival_probability(params: FouParams, t: float, boundary: float) -> float:
    """Mass of the freely evolving density inside (-boundary, boundary).

    This integrates the unabsorbed Gaussian, so it is an approximation to
    a true survival function and is not guaranteed monotone in t.
    """
    if boundary < 0.0:
        raise ValueError(f"boundary must be nonnegative, got {boundary}")
    if boundary == 0.0:
        return 0.0
    if math.isinf(boundary):
        return 1.0
    z = z_of_t(params, t)
    mean = math.exp(-params.a * t) * params.w0
    s = math.sqrt(2.0 * z)
    return float(special.ndtr((boundary - mean) / s) - special.ndtr((-boundary - mean) / s))


def fpt_density_approx(params: FouParams, t, normalized: bool = False, t_min: float | None = None):
    """Large-t first-passage-time density shape a^(3H) t^(2H-2) e^(-at) / sigma.

    Unnormalized by default (the approximation fixes the shape only, not
    the constant).  With ``normalized=True`` the shape is divided by its
    integral over (t_min, inf); t_min defaults to 1e-3 / a since the
    approximation is meaningless near zero.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0.0):
        raise ValueError("t must be positive")
    h, a, sig = params.hurst, params.a, params.sigma
    shape = a ** (3.0 * h) * t_arr ** (2.0 * h - 2.0) * np.exp(-a * t_arr) / sig
    if normalized:
        shape = shape / fpt_normalization(params, t_min)
    return shape if np.ndim(t) else float(shape)


def fpt_normalization(params: FouParams, t_min: float | None = None) -> float:
    """Integral of the unnormalized shape over (t_min, inf).

    int_tmin^inf t^(2H-2) e^(-at) dt = a^(1-2H) Gamma(2H-1, a t_min), so the
    whole constant is a^(H+1) Gamma(2H-1, a t_min) / sigma, evaluated with
    the regularized upper incomplete gamma.
    """
    h, a, sig = params.hurst, params.a, params.sigma
    if t_min is None:
        t_min = 1e-3 / a
    if t_min <= 0.0:
        raise ValueError(f"t_min must be positive, got {t_min}")
    s = 2.0 * h - 1.0
    upper = special.gammaincc(s, a * t_min) * gamma_fn(s)
    return a ** (h + 1.0) * upper / sig


def mean_escape_time(params: FouParams, t_min: float | None = None) -> float:
    """Mean of the normalized approximate first-passage density.

    Equals Gamma(2H, a t_min) / (a Gamma(2H-1, a t_min)): increasing in H,
    and inversely proportional to a.  sigma cancels under normalization,
    so the intensity dependence of true escape times is not visible here;
    the Monte Carlo grid in ``fbmlab.sde`` carries that part.
    """
    h, a = params.hurst, params.a
    if t_min is None:
        t_min = 1e-3 / a
    x = a * t_min
    num = special.gammaincc(2.0 * h, x) * gamma_fn(2.0 * h)
    den = special.gammaincc(2.0 * h - 1.0, x) * gamma_fn(2.0 * h - 1.0)
    return num / (a * den)
