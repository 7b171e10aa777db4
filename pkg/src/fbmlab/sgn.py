"""Minibatch gradient-noise laboratory.

Covers the exact second-order theory of batch-sampling noise (the zeta
vector and its covariance for sampling with and without replacement), a
small trainer with hand-coded forward/backward passes that logs the true
per-step noise (minibatch gradient minus full gradient at the same
iterate), reductions of the logged noise matrix to scalar series, and two
classical normality tests.

The trainer recomputes the full gradient at every step, which is O(N * P)
but exact; dataset sizes are capped accordingly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .seeding import check_seed, task_rng

__all__ = [
    "SamplingScheme",
    "SgnTrace",
    "LinearModelSpec",
    "MlpModelSpec",
    "SyntheticRegressionSpec",
    "sampling_noise_moments",
    "sample_zeta",
    "make_dataset",
    "per_sample_gradients",
    "full_loss",
    "train_toy_and_log",
    "scalarize_trace",
    "anderson_darling_normality",
    "shapiro_wilk_normality",
    "save_trace",
    "load_trace",
]

MAX_DATASET = 4096
SGN1_MAGIC = b"SGN1"


@dataclass(frozen=True)
class SamplingScheme:
    """Batch selection: n_total samples, batches of size batch, drawn with
    or without replacement."""

    n_total: int
    batch: int
    replacement: bool = False

    def __post_init__(self):
        if not 1 <= self.batch <= self.n_total:
            raise ValueError(
                f"need 1 <= batch <= n_total, got batch={self.batch}, n_total={self.n_total}"
            )


def sampling_noise_moments(scheme: SamplingScheme):
    """Exact mean and covariance of the sampling-noise vector zeta.

    zeta = (rho - 1)/N where rho_i is N/n times the number of draws of
    index i.  The mean is zero; the covariance is c * (I - J/N) with
    c = (N-n)/(n N (N-1)) without replacement and c = 1/(n N) with.
    """
    n_tot, n = scheme.n_total, scheme.batch
    mean = np.zeros(n_tot)
    if scheme.replacement:
        c = 1.0 / (n * n_tot)
    else:
        if n == n_tot:
            return mean, np.zeros((n_tot, n_tot))
        c = (n_tot - n) / (n * n_tot * (n_tot - 1))
    cov = c * (np.eye(n_tot) - np.ones((n_tot, n_tot)) / n_tot)
    return mean, cov


def _draw_counts(scheme: SamplingScheme, rng: np.random.Generator, size: int) -> np.ndarray:
    """(size, N) matrix of per-index draw counts for batches."""
    n_tot, n = scheme.n_total, scheme.batch
    if scheme.replacement:
        return rng.multinomial(n, np.full(n_tot, 1.0 / n_tot), size=size).astype(float)
    keys = rng.random((size, n_tot))
    chosen = np.argpartition(keys, n - 1, axis=1)[:, :n]
    counts = np.zeros((size, n_tot))
    np.put_along_axis(counts, chosen, 1.0, axis=1)
    return counts


def sample_zeta(scheme: SamplingScheme, seed: int, size: int | None = None) -> np.ndarray:
    """Draw sampling-noise vectors zeta = (rho - 1)/N.

    rho_i = (N/n) * (draw count of index i), so (1/N) G rho is exactly the
    minibatch mean of columns of G.  Returns shape (N,) or (size, N).
    """
    rng = np.random.default_rng(check_seed(seed))
    counts = _draw_counts(scheme, rng, size or 1)
    rho = counts * (scheme.n_total / scheme.batch)
    zeta = (rho - 1.0) / scheme.n_total
    return zeta[0] if size is None else zeta


# ---------------------------------------------------------------------------
# Toy models with explicit forward/backward passes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearModelSpec:
    """Least-squares linear model, loss_i = (x_i . w - y_i)^2 / 2."""

    def n_params(self, dim: int) -> int:
        return dim

    def init_params(self, dim: int, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(0.0, 0.1, dim)

    def per_sample_gradients(self, params: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        resid = x @ params - y
        return resid[:, None] * x

    def losses(self, params: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return 0.5 * (x @ params - y) ** 2


@dataclass(frozen=True)
class MlpModelSpec:
    """One tanh hidden layer ending in a scalar readout, squared loss.

    Parameters are packed flat as [W1 (dim*hidden), b1, w2, b2].
    """

    hidden: int = 8

    def n_params(self, dim: int) -> int:
        return dim * self.hidden + self.hidden + self.hidden + 1

    def init_params(self, dim: int, rng: np.random.Generator) -> np.ndarray:
        w1 = rng.normal(0.0, 1.0 / math.sqrt(dim), dim * self.hidden)
        b1 = np.zeros(self.hidden)
        w2 = rng.normal(0.0, 1.0 / math.sqrt(self.hidden), self.hidden)
        b2 = np.zeros(1)
        return np.concatenate([w1, b1, w2, b2])

    def _unpack(self, params: np.ndarray, dim: int):
        h = self.hidden
        w1 = params[: dim * h].reshape(dim, h)
        b1 = params[dim * h : dim * h + h]
        w2 = params[dim * h + h : dim * h + 2 * h]
        b2 = params[-1]
        return w1, b1, w2, b2

    def per_sample_gradients(self, params: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        w1, b1, w2, b2 = self._unpack(params, x.shape[1])
        hidden = np.tanh(x @ w1 + b1)
        resid = hidden @ w2 + b2 - y
        d_hidden = resid[:, None] * w2 * (1.0 - hidden**2)
        g_w1 = (x[:, :, None] * d_hidden[:, None, :]).reshape(len(x), -1)
        g_b1 = d_hidden
        g_w2 = resid[:, None] * hidden
        g_b2 = resid[:, None]
        return np.concatenate([g_w1, g_b1, g_w2, g_b2], axis=1)

    def losses(self, params: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        w1, b1, w2, b2 = self._unpack(params, x.shape[1])
        pred = np.tanh(x @ w1 + b1) @ w2 + b2
        return 0.5 * (pred - y) ** 2


@dataclass(frozen=True)
class SyntheticRegressionSpec:
    """Gaussian design with a planted linear signal plus observation noise."""

    n_samples: int = 1024
    dim: int = 64
    noise_std: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_samples > MAX_DATASET:
            raise ValueError(
                f"full gradients are recomputed every step; keep n_samples <= {MAX_DATASET}"
            )


def make_dataset(spec: SyntheticRegressionSpec):
    rng = np.random.default_rng(check_seed(spec.seed))
    x = rng.normal(0.0, 1.0, (spec.n_samples, spec.dim))
    beta = rng.normal(0.0, 1.0, spec.dim) / math.sqrt(spec.dim)
    y = x @ beta + rng.normal(0.0, spec.noise_std, spec.n_samples)
    return x, y


def per_sample_gradients(model_spec, params: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """(N, P) matrix of per-sample loss gradients at the given parameters."""
    return model_spec.per_sample_gradients(params, x, y)


def full_loss(model_spec, params: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    return float(model_spec.losses(params, x, y).mean())


@dataclass(frozen=True)
class SgnTrace:
    """Per-step gradient-noise record of one training run.

    Row k of noise_vectors is the minibatch gradient minus the full
    gradient, both evaluated at the iterate entering step k.
    """

    noise_vectors: np.ndarray
    loss_curve: np.ndarray
    meta: dict

    @property
    def steps(self) -> int:
        return self.noise_vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.noise_vectors.shape[1]


DIVERGENCE_LOSS = 1e6


def train_toy_and_log(
    model_spec,
    dataset_spec: SyntheticRegressionSpec,
    batch: int,
    lr: float,
    steps: int,
    seed: int,
    replacement: bool = False,
    log_every: int = 1,
) -> SgnTrace:
    """Run plain minibatch SGD and log the exact gradient noise.

    Every step computes the full per-sample gradient matrix, takes the
    batch mean against the full mean to form the noise vector, and then
    applies the minibatch update.  Aborts if the loss passes 1e6.
    """
    if lr <= 0.0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if log_every < 1:
        raise ValueError(f"log_every must be >= 1, got {log_every}")
    x, y = make_dataset(dataset_spec)
    scheme = SamplingScheme(n_total=len(x), batch=batch, replacement=replacement)
    rng = task_rng(seed, 0)
    params = model_spec.init_params(dataset_spec.dim, task_rng(seed, 1))

    noise_rows = []
    losses = []
    for k in range(steps):
        grads = model_spec.per_sample_gradients(params, x, y)
        full = grads.mean(axis=0)
        if scheme.replacement:
            idx = np.sort(rng.integers(0, len(x), batch))
        else:
            idx = np.sort(rng.choice(len(x), batch, replace=False))
        mini = grads[idx].mean(axis=0)
        if k % log_every == 0:
            noise_rows.append(mini - full)
            losses.append(full_loss(model_spec, params, x, y))
        params = params - lr * mini
        if losses and losses[-1] > DIVERGENCE_LOSS:
            raise RuntimeError(
                f"training diverged at step {k} (loss {losses[-1]:.3g} > {DIVERGENCE_LOSS:g}); "
                "lower the learning rate"
            )
    meta = {
        "model": type(model_spec).__name__,
        "batch": batch,
        "learning_rate": lr,
        "steps": steps,
        "log_every": log_every,
        "seed": int(seed),
        "replacement": replacement,
        "dataset": {
            "n_samples": dataset_spec.n_samples,
            "dim": dataset_spec.dim,
            "noise_std": dataset_spec.noise_std,
            "seed": dataset_spec.seed,
        },
    }
    return SgnTrace(
        noise_vectors=np.asarray(noise_rows),
        loss_curve=np.asarray(losses),
        meta=meta,
    )


def scalarize_trace(trace: SgnTrace, mode: str, selector=None) -> np.ndarray:
    """Reduce the (steps, dim) noise matrix to a scalar series.

    * ``coordinate``: one column, selector is the index.
    * ``norm``: Euclidean norm per step.
    * ``projection``: inner product with the unit-normalized selector.
    """
    nv = trace.noise_vectors
    if mode == "coordinate":
        idx = int(selector)
        if not 0 <= idx < trace.dim:
            raise ValueError(f"coordinate {idx} out of range [0, {trace.dim})")
        return nv[:, idx].copy()
    if mode == "norm":
        return np.linalg.norm(nv, axis=1)
    if mode == "projection":
        u = np.asarray(selector, dtype=float)
        if u.shape != (trace.dim,):
            raise ValueError(f"projection vector must have shape ({trace.dim},)")
        norm = np.linalg.norm(u)
        if norm == 0.0:
            raise ValueError("projection vector must be nonzero")
        return nv @ (u / norm)
    raise ValueError(f"unknown mode {mode!r}; expected coordinate, norm, or projection")


# ---------------------------------------------------------------------------
# Normality tests
# ---------------------------------------------------------------------------


def anderson_darling_normality(series) -> tuple[float, float]:
    """Anderson-Darling test against a normal with estimated moments.

    Returns the small-sample-corrected statistic A2 * (1 + 0.75/n +
    2.25/n^2) and the upper-tail p approximation for the
    estimated-mean-and-variance case (D'Agostino & Stephens 1986).
    """
    x = np.sort(np.asarray(series, dtype=float))
    n = len(x)
    if n < 8:
        raise ValueError(f"need at least 8 observations, got {n}")
    s = x.std(ddof=1)
    if s == 0.0:
        raise ValueError("degenerate sample: zero variance")
    z = (x - x.mean()) / s
    log_cdf = stats.norm.logcdf(z)
    log_sf = stats.norm.logsf(z)
    i = np.arange(1, n + 1)
    a2 = -n - np.mean((2 * i - 1) * (log_cdf + log_sf[::-1]))
    a2_star = a2 * (1.0 + 0.75 / n + 2.25 / n**2)
    if a2_star < 0.2:
        p = 1.0 - math.exp(-13.436 + 101.14 * a2_star - 223.73 * a2_star**2)
    elif a2_star < 0.34:
        p = 1.0 - math.exp(-8.318 + 42.796 * a2_star - 59.938 * a2_star**2)
    elif a2_star < 0.6:
        p = math.exp(0.9177 - 4.279 * a2_star - 1.38 * a2_star**2)
    elif a2_star <= 13.0:
        p = math.exp(1.2937 - 5.709 * a2_star + 0.0186 * a2_star**2)
    else:
        p = 0.0
    return float(a2_star), float(min(max(p, 0.0), 1.0))


SHAPIRO_MAX_N = 5000


def shapiro_wilk_normality(series) -> tuple[float, float]:
    """Shapiro-Wilk W and p via Royston's approximation (valid to n = 5000)."""
    x = np.asarray(series, dtype=float)
    n = len(x)
    if not 8 <= n <= SHAPIRO_MAX_N:
        raise ValueError(f"sample size must lie in [8, {SHAPIRO_MAX_N}], got {n}")
    if x.std(ddof=1) == 0.0:
        raise ValueError("degenerate sample: zero variance")
    w, p = stats.shapiro(x)
    return float(w), float(p)


# ---------------------------------------------------------------------------
# Trace persistence: SGN1 binary matrix plus a JSON sidecar
# ---------------------------------------------------------------------------


def save_trace(trace: SgnTrace, matrix_path, sidecar_path=None) -> None:
    """Write the noise matrix (magic SGN1, u32 steps, u32 dim, row-major
    little-endian f64) and a JSON sidecar with meta and the loss curve."""
    sidecar_path = sidecar_path or (str(matrix_path) + ".json")
    with open(matrix_path, "wb") as fh:
        fh.write(SGN1_MAGIC)
        fh.write(np.uint32(trace.steps).tobytes())
        fh.write(np.uint32(trace.dim).tobytes())
        fh.write(np.ascontiguousarray(trace.noise_vectors, dtype="<f8").tobytes())
    with open(sidecar_path, "w") as fh:
        json.dump(
            {
                "steps": trace.steps,
                "dim": trace.dim,
                "meta": trace.meta,
                "loss_curve": trace.loss_curve.tolist(),
            },
            fh,
            indent=2,
        )


def load_trace(matrix_path, sidecar_path=None) -> SgnTrace:
    sidecar_path = sidecar_path or (str(matrix_path) + ".json")
    with open(matrix_path, "rb") as fh:
        magic = fh.read(4)
        if magic != SGN1_MAGIC:
            raise ValueError(f"{matrix_path}: bad magic {magic!r}, expected {SGN1_MAGIC!r}")
        steps = int(np.frombuffer(fh.read(4), dtype="<u4")[0])
        dim = int(np.frombuffer(fh.read(4), dtype="<u4")[0])
        data = np.frombuffer(fh.read(8 * steps * dim), dtype="<f8")
        if data.size != steps * dim:
            raise ValueError(f"{matrix_path}: truncated matrix")
    with open(sidecar_path) as fh:
        sidecar = json.load(fh)
    return SgnTrace(
        noise_vectors=data.reshape(steps, dim).copy(),
        loss_curve=np.asarray(sidecar.get("loss_curve", [])),
        meta=sidecar.get("meta", {}),
    )
