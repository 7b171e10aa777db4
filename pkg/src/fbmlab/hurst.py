"""Rescaled-range (R/S) estimation of the Hurst parameter.

A block of length k is reduced to Q = R/S, the range of its mean-adjusted
cumulative sum over its population standard deviation.  The series is cut
into disjoint blocks at a ladder of window sizes, per-window averages of Q
are fitted against window size on log-log axes, and the slope is the
estimate: FGN of index H gives slope H, while any i.i.d. finite- or
infinite-variance noise gives slope 1/2.

The raw log-log slope carries a sizable small-window bias toward larger
values (white noise with an 8..2500 window ladder reads near 0.55, H = 0.3
reads near 0.38).  The headline estimate therefore subtracts the apparent
slope of the expected R/S of i.i.d. Gaussian noise (Anis & Lloyd 1976,
with the finite-k factor popularized by Peters) and re-centers at 1/2.
The uncorrected slope is kept alongside.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .noise import _fgn_unit
from .seeding import task_rng

__all__ = [
    "WindowPolicy",
    "WindowStat",
    "HurstEstimate",
    "rs_statistic",
    "expected_rs_iid",
    "estimate_hurst",
    "calibrate_estimator",
]


@dataclass(frozen=True)
class WindowPolicy:
    """Window ladder: powers of two from min_window up to max_window
    (defaulting to a quarter of the series length); trailing samples that
    do not fill a block are discarded.  The default floor of 16 keeps the
    corrected estimator's residual bias under 0.04 across H in [0.3, 0.7]
    at 10^4 points."""

    min_window: int = 16
    max_window: int | None = None

    def window_sizes(self, n: int) -> list[int]:
        lo = self.min_window
        hi = self.max_window if self.max_window is not None else n // 4
        if lo < 2:
            raise ValueError(f"min_window must be >= 2, got {lo}")
        if hi < lo:
            raise ValueError(f"max_window ({hi}) is below min_window ({lo})")
        sizes = []
        k = 1 << max(1, (lo - 1).bit_length())
        if k < lo:
            k <<= 1
        while k <= min(hi, n):
            sizes.append(k)
            k <<= 1
        return sizes


@dataclass(frozen=True)
class WindowStat:
    k: int
    q_k: float
    m_used: int
    m_skipped: int


@dataclass(frozen=True)
class HurstEstimate:
    """Fit summary.  ``hurst`` is the bias-corrected estimate; ``raw_slope``
    and ``intercept``/``r_squared`` describe the plain OLS fit of
    (log k, log q_k), from which ``hurst`` is recomputable given the i.i.d.
    reference curve."""

    hurst: float
    intercept: float
    r_squared: float
    windows: tuple[WindowStat, ...]
    n_points: int
    raw_slope: float = float("nan")

    def as_dict(self) -> dict:
        return {
            "hurst": self.hurst,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "windows": [
                {"k": w.k, "q_k": w.q_k, "m_used": w.m_used, "m_skipped": w.m_skipped}
                for w in self.windows
            ],
            "n_points": self.n_points,
        }

    def to_json(self, **dump_kwargs) -> str:
        return json.dumps(self.as_dict(), **dump_kwargs)


def rs_statistic(block) -> float:
    """R/S of one block: range of the mean-adjusted cumulative sum divided
    by the population (divisor-k) standard deviation."""
    x = np.asarray(block, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise ValueError("block must be one-dimensional with at least 2 values")
    y = x - x.mean()
    s = math.sqrt(float(np.mean(y * y)))
    if s == 0.0:
        raise ValueError("degenerate block: zero standard deviation")
    z = np.cumsum(y)
    return float((z.max() - z.min()) / s)


# A window is dropped when more than this fraction of its blocks is
# degenerate (frozen coordinates produce constant stretches).
MAX_SKIPPED_FRACTION = 0.10


@lru_cache(maxsize=4096)
def expected_rs_iid(k: int) -> float:
    """Expected R/S of a length-k block of i.i.d. Gaussian noise.

    Anis-Lloyd expectation with the (k - 1/2)/k finite-sample factor; the
    exact gamma-ratio front switches to its Stirling limit past k = 340.
    The trailing sqrt(k/(k-1)) converts from the sample-deviation
    convention of that formula to the population deviation used by
    :func:`rs_statistic`.
    """
    if k < 2:
        raise ValueError(f"block length must be >= 2, got {k}")
    i = np.arange(1, k)
    tail = float(np.sqrt((k - i) / i).sum())
    if k <= 340:
        front = math.exp(gammaln((k - 1) / 2.0) - gammaln(k / 2.0)) / math.sqrt(math.pi)
    else:
        front = 1.0 / math.sqrt(k * math.pi / 2.0)
    return (k - 0.5) / k * front * tail * math.sqrt(k / (k - 1.0))


def _window_stat(series: np.ndarray, k: int) -> WindowStat | None:
    m = len(series) // k
    blocks = series[: m * k].reshape(m, k)
    y = blocks - blocks.mean(axis=1, keepdims=True)
    s = np.sqrt(np.mean(y * y, axis=1))
    usable = s > 0.0
    m_used = int(usable.sum())
    m_skipped = m - m_used
    if m_used == 0:
        raise ValueError(f"every block is degenerate at window k={k}")
    if m_skipped > MAX_SKIPPED_FRACTION * m:
        return None
    z = np.cumsum(y[usable], axis=1)
    q = (z.max(axis=1) - z.min(axis=1)) / s[usable]
    return WindowStat(k=k, q_k=float(q.mean()), m_used=m_used, m_skipped=m_skipped)


def estimate_hurst(
    series,
    window_policy: WindowPolicy | None = None,
    correction: str = "anis-lloyd",
) -> HurstEstimate:
    """Hurst estimate from the log-log R/S ladder.

    Requires at least 64 points and at least 4 usable window sizes.
    Degenerate blocks are skipped and counted; windows with more than 10%
    degenerate blocks are dropped from the fit.

    With the default correction the estimate is 1/2 plus the OLS slope of
    log(q_k / expected_rs_iid(k)) against log k; with ``correction="none"``
    it is the plain OLS slope of (log k, log q_k).  ``intercept`` and
    ``r_squared`` always describe the plain fit.
    """
    if correction not in ("anis-lloyd", "none"):
        raise ValueError(f"correction must be 'anis-lloyd' or 'none', got {correction!r}")
    x = np.asarray(series, dtype=float).ravel()
    if len(x) < 64:
        raise ValueError(f"series too short for R/S estimation: {len(x)} < 64")
    policy = window_policy or WindowPolicy()
    stats = [s for k in policy.window_sizes(len(x)) if (s := _window_stat(x, k)) is not None]
    if len(stats) < 4:
        raise ValueError(f"only {len(stats)} usable windows; need at least 4")
    log_k = np.log([s.k for s in stats])
    log_q = np.log([s.q_k for s in stats])
    raw_slope, intercept = np.polyfit(log_k, log_q, 1)
    resid = log_q - (raw_slope * log_k + intercept)
    r2 = 1.0 - resid.var() / log_q.var()
    if correction == "anis-lloyd":
        log_ref = np.log([expected_rs_iid(s.k) for s in stats])
        hurst = 0.5 + float(np.polyfit(log_k, log_q - log_ref, 1)[0])
    else:
        hurst = float(raw_slope)
    return HurstEstimate(
        hurst=hurst,
        intercept=float(intercept),
        r_squared=float(r2),
        windows=tuple(stats),
        n_points=len(x),
        raw_slope=float(raw_slope),
    )


def calibrate_estimator(h_grid, n_points: int, n_reps: int, master_seed: int):
    """Mean and spread of the estimator on synthetic FGN, per true H.

    Returns one (true_h, mean_estimate, std_estimate) row per grid value.
    Fully deterministic in master_seed; replication j of grid cell i uses
    the stream keyed (master_seed, i, j) regardless of execution order.
    """
    h_grid = [float(h) for h in h_grid]
    for h in h_grid:
        if not 0.0 < h < 1.0:
            raise ValueError(f"grid values must lie in (0, 1), got {h}")
    if n_points < 1000:
        raise ValueError(f"calibration needs n_points >= 1000, got {n_points}")
    if n_reps < 1:
        raise ValueError(f"n_reps must be >= 1, got {n_reps}")
    rows = []
    for i, h in enumerate(h_grid):
        estimates = np.empty(n_reps)
        for j in range(n_reps):
            values = _fgn_unit(h, n_points, task_rng(master_seed, i, j))
            estimates[j] = estimate_hurst(values).hurst
        rows.append((h, float(estimates.mean()), float(estimates.std())))
    return rows
