"""Euler-Maruyama Monte Carlo for linear dynamics driven by fractional
Gaussian noise: endpoint ensembles, first-passage sampling with censoring,
a high-dimensional drift-distance probe, and empirical strong-convergence
slopes.

The drift is affine (-a w), so the Euler recursion with constant diffusion
is a first-order linear filter and is evaluated with ``scipy.signal.lfilter``
step for step; state-dependent diffusion falls back to an explicit time
loop vectorized across paths.  Paths are independent work items seeded by
(master_seed, path index), so results never depend on chunking order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .noise import _fgn_unit_batch
from .seeding import task_rng, task_rngs

__all__ = [
    "Dynamics",
    "SimConfig",
    "FptBatch",
    "ConvergenceResult",
    "simulate_fou_paths",
    "first_passage_mc",
    "drift_distance_experiment",
    "convergence_slope",
]

# Refuse silently huge path tensors (values, not bytes).
MEMORY_CELL_CAP = 500_000_000
_CHUNK_PATHS = 2000
_CHUNK_BUDGET = 30_000_000  # complex values held at once during FGN synthesis


def _chunk_paths(n_steps: int) -> int:
    return max(1, min(_CHUNK_PATHS, _CHUNK_BUDGET // (2 * n_steps)))


@dataclass(frozen=True)
class Dynamics:
    """Affine-drift coefficients; unlike the analytic layer, any H in (0, 1)
    is simulable and sigma may be zero (deterministic decay)."""

    a: float
    sigma: float
    hurst: float
    w0: float = 0.0

    def __post_init__(self):
        if self.a <= 0.0:
            raise ValueError(f"a must be positive, got {self.a}")
        if self.sigma < 0.0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")


def _as_dynamics(params) -> Dynamics:
    if isinstance(params, Dynamics):
        return params
    return Dynamics(a=params.a, sigma=params.sigma, hurst=params.hurst, w0=params.w0)


@dataclass(frozen=True)
class SimConfig:
    params: Dynamics
    t_end: float
    dt: float
    n_paths: int
    master_seed: int
    dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "params", _as_dynamics(self.params))
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.dt < self.t_end:
            raise ValueError(f"dt must be smaller than t_end ({self.dt} >= {self.t_end})")
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.n_steps * max(self.n_paths, self.dim) > MEMORY_CELL_CAP:
            raise ValueError(
                f"{self.n_steps} steps x {max(self.n_paths, self.dim)} paths exceeds the "
                f"in-memory cap of {MEMORY_CELL_CAP} values; split the run"
            )

    @property
    def n_steps(self) -> int:
        steps = round(self.t_end / self.dt)
        if steps < 1 or abs(steps * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ValueError(f"t_end={self.t_end} is not a whole number of dt={self.dt} steps")
        return steps


def _euler_affine(increments: np.ndarray, a: float, dt: float, w0: float) -> np.ndarray:
    """Paths of w_{k+1} = (1 - a dt) w_k + increments_k, rows = paths.

    Returns values at t = dt, 2dt, ..., so column k holds w_{k+1}.
    """
    phi = 1.0 - a * dt
    driven = lfilter([1.0], [1.0, -phi], increments, axis=-1)
    if w0 != 0.0:
        driven = driven + w0 * phi ** np.arange(1, increments.shape[-1] + 1)
    return driven


def _path_chunks(config: SimConfig, *key_prefix: int):
    """Yield (start index, Euler path matrix) chunk by chunk."""
    p = config.params
    n_steps = config.n_steps
    scale = p.sigma * config.dt**p.hurst
    chunk = _chunk_paths(n_steps)
    for start in range(0, config.n_paths, chunk):
        count = min(chunk, config.n_paths - start)
        rngs = task_rngs(config.master_seed, start, count, *key_prefix)
        incr = _fgn_unit_batch(p.hurst, n_steps, rngs) * scale
        yield start, _euler_affine(incr, p.a, config.dt, p.w0)


def simulate_fou_paths(config: SimConfig, return_paths: bool = False):
    """Endpoint ensemble of the scalar Euler scheme; optionally full paths.

    Each path consumes an independent FGN stream whose increments carry
    variance (sigma * dt^H)^2 per step.  Deterministic in master_seed.
    """
    endpoints = np.empty(config.n_paths)
    paths = np.empty((config.n_paths, config.n_steps)) if return_paths else None
    for start, w in _path_chunks(config):
        endpoints[start : start + w.shape[0]] = w[:, -1]
        if return_paths:
            paths[start : start + w.shape[0]] = w
    return (endpoints, paths) if return_paths else endpoints


@dataclass(frozen=True)
class FptBatch:
    """First-passage samples; censored entries sat at the horizon t_end."""

    times: np.ndarray
    censored: np.ndarray
    boundary: float
    config: SimConfig

    @property
    def n_censored(self) -> int:
        return int(self.censored.sum())

    @property
    def mean_uncensored(self) -> float:
        hits = self.times[~self.censored]
        return float(hits.mean()) if len(hits) else float("nan")

    def summary(self) -> dict:
        return {
            "boundary": self.boundary,
            "n_paths": len(self.times),
            "n_censored": self.n_censored,
            "mean_fpt_uncensored": self.mean_uncensored,
        }

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("path_id,time,censored\n")
            for i, (t, c) in enumerate(zip(self.times, self.censored)):
                fh.write(f"{i},{float(t)!r},{int(c)}\n")


def first_passage_mc(config: SimConfig, boundary: float) -> FptBatch:
    """First exit times of |w| past the boundary, checked at grid points.

    Paths still inside at t_end are censored (flagged, time set to t_end)
    rather than folded into the mean.
    """
    if boundary <= abs(config.params.w0):
        raise ValueError(
            f"boundary ({boundary}) must exceed |w0| ({abs(config.params.w0)})"
        )
    times = np.full(config.n_paths, config.t_end)
    censored = np.ones(config.n_paths, dtype=bool)
    for start, w in _path_chunks(config):
        crossed = np.abs(w) >= boundary
        hit = crossed.any(axis=1)
        first = crossed.argmax(axis=1)
        sl = slice(start, start + w.shape[0])
        times[sl] = np.where(hit, (first + 1) * config.dt, config.t_end)
        censored[sl] = ~hit
    return FptBatch(times=times, censored=censored, boundary=boundary, config=config)


def drift_distance_experiment(
    hurst_list,
    dim: int,
    sigma: float,
    t_end: float,
    dt: float,
    seed: int,
    a: float = 2.0,
    n_report: int = 50,
    increment_scale: str = "unit",
):
    """Distance from the origin of a d-dimensional damped walk, per H.

    Coordinates evolve independently under w' = -a w + sigma * FGN with a
    shared seed layout, so curves for different H ride on common random
    numbers.  ``increment_scale`` picks the noise convention:

    * ``"unit"`` (default): one unit-variance FGN variate per step, i.e.
      iteration-indexed noise.  Correlation structure alone then separates
      the H values, which is the regime this probe is meant to show.
    * ``"step"``: increments scaled by dt^H, the SDE-consistent scaling
      under which the process matches the analytic variance kernel.

    Returns a list of (hurst, t, distance) rows.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if increment_scale not in ("unit", "step"):
        raise ValueError(f"increment_scale must be 'unit' or 'step', got {increment_scale!r}")
    n_steps = round(t_end / dt)
    if n_steps < 1:
        raise ValueError("t_end must cover at least one dt step")
    if dim * n_steps > MEMORY_CELL_CAP:
        raise ValueError(
            f"dim * steps = {dim * n_steps} exceeds the cap of {MEMORY_CELL_CAP}; "
            "reduce dim, dt resolution, or t_end"
        )
    report_idx = np.unique(np.linspace(1, n_steps, min(n_report, n_steps)).round().astype(int)) - 1
    rows = []
    for h in hurst_list:
        if not 0.0 < h < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {h}")
        scale = sigma if increment_scale == "unit" else sigma * dt**h
        sq = np.zeros(len(report_idx))
        chunk = _chunk_paths(n_steps)
        for start in range(0, dim, chunk):
            count = min(chunk, dim - start)
            rngs = task_rngs(seed, start, count)
            incr = _fgn_unit_batch(h, n_steps, rngs) * scale
            w = _euler_affine(incr, a, dt, 0.0)
            sq += (w[:, report_idx] ** 2).sum(axis=0)
        for i, idx in enumerate(report_idx):
            rows.append((float(h), float((idx + 1) * dt), float(math.sqrt(sq[i]))))
    return rows


@dataclass(frozen=True)
class ConvergenceResult:
    hurst: float
    slope: float
    r_squared: float
    dts: tuple
    errors: tuple

    def as_dict(self) -> dict:
        return {
            "hurst": self.hurst,
            "slope": self.slope,
            "r_squared": self.r_squared,
            "dts": list(self.dts),
            "errors": list(self.errors),
        }


def _euler_statedep(incr: np.ndarray, a: float, dt: float, w0: float, sigma_slope: bool) -> np.ndarray:
    """Explicit Euler loop; diffusion sigma*(1+w) when sigma_slope is set.

    ``incr`` already carries the sigma * dt^H factor; rows are paths.
    Returns the whole path matrix (columns t = dt .. t_end).
    """
    n_paths, n_steps = incr.shape
    w = np.full(n_paths, float(w0))
    out = np.empty_like(incr)
    for k in range(n_steps):
        dB = incr[:, k]
        noise = dB * (1.0 + w) if sigma_slope else dB
        w = w - a * dt * w + noise
        out[:, k] = w
    return out


def convergence_slope(
    params,
    dt_list,
    n_paths: int,
    seed: int,
    t_end: float = 1.0,
    diffusion: str = "linear",
    refine: int = 64,
) -> ConvergenceResult:
    """Fitted slope of log strong error against log step size.

    All step sizes share one driving FGN stream per path: the stream is
    generated on a reference grid ``refine`` times finer than the smallest
    requested step, every requested discretization takes its increments as
    exact block sums of that stream, and strong error is the across-path
    mean of the sup-norm deviation from the reference solution on each
    grid.  Keeping the reference well below the measured steps matters:
    errors measured against a same-order reference partially cancel and
    the fitted slope comes out too steep.

    With ``diffusion="linear"`` the noise is sigma * (1 + w) dB, a
    state-dependent coefficient for which the Euler error is dominated by
    the missing Milstein-type term and decays like dt^(2H-1); with
    constant diffusion the drift discretization dominates instead and the
    decay is close to first order regardless of H.
    """
    p = _as_dynamics(params)
    if not p.hurst > 0.5:
        raise ValueError(f"rate measurement needs hurst > 0.5, got {p.hurst}")
    if diffusion not in ("linear", "constant"):
        raise ValueError(f"diffusion must be 'linear' or 'constant', got {diffusion!r}")
    if p.sigma == 0.0 and p.w0 == 0.0:
        raise ValueError("sigma = 0 with w0 = 0 leaves nothing to measure")
    if refine < 1:
        raise ValueError(f"refine must be >= 1, got {refine}")
    dts = sorted(set(float(d) for d in dt_list), reverse=True)
    if len(dts) < 2:
        raise ValueError("need at least 2 distinct step sizes to fit a slope")
    ref_dt = dts[-1] / refine
    ratios = []
    for d in dts:
        r = d / ref_dt
        if abs(r - round(r)) > 1e-9 * r:
            raise ValueError(f"step sizes must nest: {d} is not an integer multiple of {dts[-1]}")
        if abs(round(t_end / d) * d - t_end) > 1e-9 * t_end:
            raise ValueError(f"t_end={t_end} is not a whole number of {d} steps")
        ratios.append(round(r))
    n_fine = round(t_end / ref_dt)
    state_dep = diffusion == "linear"

    sup_err = np.zeros(len(dts))
    chunk = _chunk_paths(n_fine)
    for start in range(0, n_paths, chunk):
        count = min(chunk, n_paths - start)
        rngs = task_rngs(seed, start, count)
        fine_incr = _fgn_unit_batch(p.hurst, n_fine, rngs) * (p.sigma * ref_dt**p.hurst)
        ref = _euler_statedep(fine_incr, p.a, ref_dt, p.w0, state_dep)
        for i, (d, r) in enumerate(zip(dts, ratios)):
            coarse_incr = fine_incr.reshape(count, n_fine // r, r).sum(axis=2)
            w = _euler_statedep(coarse_incr, p.a, d, p.w0, state_dep)
            ref_at = ref[:, r - 1 :: r]
            sup_err[i] += np.abs(w - ref_at).max(axis=1).sum()
    errors = sup_err / n_paths

    if np.any(errors <= 0.0):
        raise ArithmeticError("strong error vanished at some step size; nothing to fit")
    x = np.log(dts)
    y = np.log(errors)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    r2 = 1.0 - resid.var() / y.var() if y.var() > 0 else 1.0
    return ConvergenceResult(
        hurst=p.hurst,
        slope=float(slope),
        r_squared=float(r2),
        dts=tuple(dts),
        errors=tuple(errors),
    )
