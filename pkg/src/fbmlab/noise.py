"""Fractional Gaussian noise, fractional Brownian motion, and symmetric
alpha-stable sampling.

FGN is generated by circulant spectral embedding (Davies & Harte 1987, in
the form given by Dieker's 2004 thesis), which is exact in distribution and
O(n log n).  A dense Cholesky factorization of the Toeplitz covariance is
kept as a slow cross-check for short series.  Stable variates use the
classical trigonometric transform of Chambers, Mallows & Stuck (1976),
symmetric case only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, toeplitz

__all__ = [
    "FgnSeries",
    "StableSeries",
    "SpectralEmbeddingError",
    "fgn_autocovariance",
    "generate_fgn",
    "fgn_to_fbm",
    "generate_stable",
    "write_series_csv",
    "read_series_csv",
    "write_series_binary",
    "read_series_binary",
]

# Negative circulant eigenvalues below this fraction of the largest one are
# treated as roundoff and clamped; anything larger aborts generation.
SPECTRUM_TOLERANCE = 1e-10

FNS1_MAGIC = b"FNS1"
KIND_FLAGS = {"fgn": 0, "fbm": 1, "stable": 2}
FLAG_KINDS = {v: k for k, v in KIND_FLAGS.items()}


class SpectralEmbeddingError(RuntimeError):
    """Circulant embedding produced a genuinely negative eigenvalue."""


@dataclass(frozen=True)
class FgnSeries:
    """A realized fractional Gaussian noise series.

    ``values[i]`` is the i-th increment of a discrete FBM path started at
    zero; each increment has population variance ``step_dt ** (2 * hurst)``.
    """

    hurst: float
    step_dt: float
    values: np.ndarray
    seed: int

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie strictly in (0, 1), got {self.hurst}")
        if self.step_dt <= 0.0:
            raise ValueError(f"step_dt must be positive, got {self.step_dt}")
        if len(self.values) < 1:
            raise ValueError("series must contain at least one value")

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class StableSeries:
    """I.i.d. symmetric alpha-stable samples (zero skew, unit scale)."""

    alpha: float
    values: np.ndarray
    seed: int

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")

    def __len__(self):
        return len(self.values)


def fgn_autocovariance(hurst: float, lag: int) -> float:
    """Autocovariance of unit-step FGN at an integer lag.

    gamma(k) = 0.5 * (|k+1|^(2H) + |k-1|^(2H) - 2|k|^(2H)), so gamma(0) = 1.
    """
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"hurst must lie strictly in (0, 1), got {hurst}")
    if lag < 0:
        raise ValueError(f"lag must be nonnegative, got {lag}")
    k = float(lag)
    h2 = 2.0 * hurst
    return 0.5 * (abs(k + 1.0) ** h2 + abs(k - 1.0) ** h2 - 2.0 * abs(k) ** h2)


def _circulant_eigenvalues(hurst: float, n: int) -> np.ndarray:
    """Eigenvalues of the circulant embedding of the FGN covariance."""
    k = np.arange(n, dtype=float)
    h2 = 2.0 * hurst
    gamma = 0.5 * (np.abs(k + 1) ** h2 + np.abs(k - 1) ** h2 - 2.0 * k**h2)
    row = np.concatenate([gamma, [0.0], gamma[-1:0:-1]])
    eigs = np.fft.fft(row).real
    worst = eigs.min()
    if worst < 0.0:
        if -worst > SPECTRUM_TOLERANCE * eigs.max():
            raise SpectralEmbeddingError(
                f"circulant spectrum has eigenvalue {worst:.3e} below tolerance "
                f"(n={n}, H={hurst}); the embedding is numerically defective"
            )
        eigs = np.clip(eigs, 0.0, None)
    return eigs


def _fgn_unit(hurst: float, length: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-step FGN of the given length, exact in distribution."""
    n = int(length)
    if n == 1:
        return rng.standard_normal(1)
    eigs = _circulant_eigenvalues(hurst, n)
    m = 2 * n
    # Dieker's construction: a Hermitian Gaussian vector in Fourier space
    # whose transform carries the circulant covariance.
    ends = rng.standard_normal(2)
    re = rng.standard_normal(n - 1)
    im = rng.standard_normal(n - 1)
    w = np.empty(m, dtype=complex)
    w[0] = np.sqrt(eigs[0] / m) * ends[0]
    w[n] = np.sqrt(eigs[n] / m) * ends[1]
    w[1:n] = np.sqrt(eigs[1:n] / (2.0 * m)) * (re + 1j * im)
    w[n + 1 :] = np.conj(w[n - 1 : 0 : -1])
    return np.fft.fft(w).real[:n]


def _fgn_unit_batch(hurst: float, length: int, rngs) -> np.ndarray:
    """One unit-step FGN row per generator, FFT-batched.

    Row i is drawn from ``rngs[i]`` in the same order as :func:`_fgn_unit`,
    so a batch row is bit-identical to a single-path call with the same
    generator state.
    """
    n = int(length)
    if n == 1:
        return np.stack([rng.standard_normal(1) for rng in rngs])
    eigs = _circulant_eigenvalues(hurst, n)
    m = 2 * n
    w = np.empty((len(rngs), m), dtype=complex)
    amp = np.sqrt(eigs[1:n] / (2.0 * m))
    for i, rng in enumerate(rngs):
        ends = rng.standard_normal(2)
        re = rng.standard_normal(n - 1)
        im = rng.standard_normal(n - 1)
        w[i, 0] = np.sqrt(eigs[0] / m) * ends[0]
        w[i, n] = np.sqrt(eigs[n] / m) * ends[1]
        w[i, 1:n] = amp * (re + 1j * im)
    w[:, n + 1 :] = np.conj(w[:, n - 1 : 0 : -1])
    return np.fft.fft(w, axis=1).real[:, :n]


def _fgn_unit_cholesky(hurst: float, length: int, rng: np.random.Generator) -> np.ndarray:
    """O(n^2) reference generator via Cholesky of the Toeplitz covariance.

    Kept as an independent cross-check of the spectral path; refuses long
    series to avoid accidental quadratic blowups.
    """
    n = int(length)
    if n > 4096:
        raise ValueError(f"cholesky generator is limited to n <= 4096, got {n}")
    gamma = np.array([fgn_autocovariance(hurst, k) for k in range(n)])
    lower = cholesky(toeplitz(gamma), lower=True)
    return lower @ rng.standard_normal(n)


def generate_fgn(
    hurst: float,
    length: int,
    step_dt: float = 1.0,
    seed: int = 0,
    method: str = "spectral",
) -> FgnSeries:
    """Generate a stationary FGN series of the given length.

    The population autocovariance at lag k is
    ``step_dt**(2*hurst) * fgn_autocovariance(hurst, k)``, so cumulative
    sums form a discrete FBM path sampled every ``step_dt`` time units.
    Identical seeds give bit-identical output.
    """
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"hurst must lie strictly in (0, 1), got {hurst}")
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    if step_dt <= 0.0:
        raise ValueError(f"step_dt must be positive, got {step_dt}")
    rng = np.random.default_rng(seed)
    if method == "spectral":
        unit = _fgn_unit(hurst, length, rng)
    elif method == "cholesky":
        unit = _fgn_unit_cholesky(hurst, length, rng)
    else:
        raise ValueError(f"unknown method {method!r}; expected 'spectral' or 'cholesky'")
    values = unit * step_dt**hurst
    return FgnSeries(hurst=hurst, step_dt=step_dt, values=values, seed=seed)


def fgn_to_fbm(series: FgnSeries | np.ndarray) -> np.ndarray:
    """Cumulative sum of increments: the FBM path with B_0 = 0 dropped.

    Differencing the output (with a leading zero) recovers the increments
    exactly, so the pair is lossless.
    """
    values = series.values if isinstance(series, FgnSeries) else np.asarray(series, dtype=float)
    if len(values) == 0:
        raise ValueError("series must be non-empty")
    return np.cumsum(values)


def generate_stable(alpha: float, length: int, seed: int = 0) -> StableSeries:
    """I.i.d. symmetric alpha-stable samples, zero skew and unit scale.

    Chambers-Mallows-Stuck transform of a uniform angle and a unit
    exponential.  At alpha = 2 this reduces to N(0, 2).
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    rng = np.random.default_rng(seed)
    u = (rng.random(length) - 0.5) * np.pi
    w = rng.exponential(1.0, length)
    if alpha == 1.0:
        values = np.tan(u)
    else:
        values = (
            np.sin(alpha * u)
            / np.cos(u) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha)
        )
    return StableSeries(alpha=alpha, values=values, seed=seed)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def _series_parts(series) -> tuple[str, float, float, np.ndarray]:
    if isinstance(series, FgnSeries):
        return "fgn", series.hurst, series.step_dt, series.values
    if isinstance(series, StableSeries):
        return "stable", series.alpha, 1.0, series.values
    raise TypeError(f"expected FgnSeries or StableSeries, got {type(series).__name__}")


def write_series_csv(path, series) -> None:
    """Write a series as CSV with header ``index,value``."""
    _, _, _, values = _series_parts(series)
    with open(path, "w") as fh:
        fh.write("index,value\n")
        for i, v in enumerate(values):
            fh.write(f"{i},{float(v)!r}\n")


def read_series_csv(path) -> np.ndarray:
    """Read values from an ``index,value`` CSV."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "index,value":
            raise ValueError(f"{path}: expected header 'index,value', got {header!r}")
        values = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            _, v = line.split(",", 1)
            values.append(float(v))
    if not values:
        raise ValueError(f"{path}: no data rows")
    return np.asarray(values)


def write_series_binary(path, series, kind: str | None = None) -> None:
    """Write the FNS1 binary format.

    Layout: magic ``FNS1``, little-endian u32 length, u8 kind flag
    (0=fgn, 1=fbm, 2=stable), f64 parameter (H or alpha), f64 step_dt,
    then the values as little-endian f64.
    """
    default_kind, param, step_dt, values = _series_parts(series)
    kind = kind or default_kind
    if kind not in KIND_FLAGS:
        raise ValueError(f"unknown series kind {kind!r}")
    if kind == "fbm":
        values = fgn_to_fbm(values)
    header = (
        FNS1_MAGIC
        + np.uint32(len(values)).tobytes()
        + np.uint8(KIND_FLAGS[kind]).tobytes()
        + np.float64(param).tobytes()
        + np.float64(step_dt).tobytes()
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.asarray(values, dtype="<f8").tobytes())


def read_series_binary(path) -> dict:
    """Read an FNS1 file; returns kind, parameter, step_dt and values."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FNS1_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {FNS1_MAGIC!r}")
        length = int(np.frombuffer(fh.read(4), dtype="<u4")[0])
        flag = int(np.frombuffer(fh.read(1), dtype="u1")[0])
        if flag not in FLAG_KINDS:
            raise ValueError(f"{path}: unknown kind flag {flag}")
        param = float(np.frombuffer(fh.read(8), dtype="<f8")[0])
        step_dt = float(np.frombuffer(fh.read(8), dtype="<f8")[0])
        values = np.frombuffer(fh.read(8 * length), dtype="<f8").copy()
        if len(values) != length:
            raise ValueError(f"{path}: truncated file ({len(values)} of {length} values)")
    return {"kind": FLAG_KINDS[flag], "param": param, "step_dt": step_dt, "values": values}
