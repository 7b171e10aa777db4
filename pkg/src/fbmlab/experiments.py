"""Bundled experiment recipes behind the command-line interface.

Each function is deterministic in its seed and returns plain dicts/lists
ready for JSON or CSV emission; the heavy lifting lives in the owning
modules.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy import stats as _scipy_stats

from . import hurst as hurst_mod
from . import sde, sgn
from .fou import FouParams, z_of_t
from .noise import generate_stable
from .seeding import task_rng

__all__ = [
    "calibrate",
    "levy_null",
    "fig8_grid",
    "spearman_permutation",
    "density_check",
    "drift_distance",
    "convergence",
    "coordinate_hurst_summary",
    "sgn_demo",
]


def calibrate(h_grid, n_points: int = 10_000, reps: int = 100, seed: int = 0):
    """Estimator calibration on synthetic FGN: one row per true H."""
    rows = hurst_mod.calibrate_estimator(h_grid, n_points, reps, seed)
    return [{"true_hurst": h, "mean_estimate": m, "std_estimate": s} for h, m, s in rows]


def levy_null(alpha_grid, n_points: int = 10_000, reps: int = 100, seed: int = 0):
    """Estimates on i.i.d. symmetric stable noise; flat near 1/2 regardless
    of the tail index."""
    out = []
    for i, alpha in enumerate(alpha_grid):
        estimates = np.empty(reps)
        for j in range(reps):
            sub_seed = int(task_rng(seed, i, j).integers(0, 2**63 - 1))
            series = generate_stable(float(alpha), n_points, seed=sub_seed).values
            estimates[j] = hurst_mod.estimate_hurst(series).hurst
        out.append(
            {
                "alpha": float(alpha),
                "mean_estimate": float(estimates.mean()),
                "std_estimate": float(estimates.std()),
            }
        )
    return out


FIG8_H = (0.3, 0.5, 0.7)
FIG8_A = (0.5, 1.0, 1.5, 2.0, 2.5)
FIG8_INV_SIGMA2 = (0.5, 1.0, 1.5, 2.0, 2.5)


def fig8_grid(
    h_values=FIG8_H,
    a_values=FIG8_A,
    inv_sigma2_values=FIG8_INV_SIGMA2,
    n_paths: int = 50,
    dt: float = 0.01,
    t_end: float = 1000.0,
    boundary: float = 1.0,
    seed: int = 0,
):
    """Mean escaping time over the (H, a, 1/sigma^2) grid.

    Every cell reuses the same master seed, so path i sees the same
    underlying Gaussian draws in every cell (common random numbers), which
    sharpens cross-cell orderings at a fixed path budget.
    """
    cells = []
    for h, a, inv_s2 in itertools.product(h_values, a_values, inv_sigma2_values):
        sigma = (1.0 / inv_s2) ** 0.5
        cfg = sde.SimConfig(
            params=sde.Dynamics(a=a, sigma=sigma, hurst=h),
            t_end=t_end,
            dt=dt,
            n_paths=n_paths,
            master_seed=seed,
        )
        batch = sde.first_passage_mc(cfg, boundary)
        cells.append(
            {
                "hurst": float(h),
                "a": float(a),
                "inv_sigma2": float(inv_s2),
                "sigma": sigma,
                "mean_fpt_uncensored": batch.mean_uncensored,
                "n_censored": batch.n_censored,
                "n_paths": n_paths,
            }
        )
    return cells


def spearman_permutation(x, y, n_perm: int = 10_000, seed: int = 0, alternative: str = "greater"):
    """Spearman rho with a permutation p-value.

    ``alternative`` is "greater" (positive association) or "less".
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rho = float(_scipy_stats.spearmanr(x, y).statistic)
    rng = task_rng(seed, 0)
    perm = np.empty(n_perm)
    y_work = y.copy()
    for i in range(n_perm):
        rng.shuffle(y_work)
        perm[i] = _scipy_stats.spearmanr(x, y_work).statistic
    if alternative == "greater":
        p = float((1 + np.sum(perm >= rho)) / (n_perm + 1))
    elif alternative == "less":
        p = float((1 + np.sum(perm <= rho)) / (n_perm + 1))
    else:
        raise ValueError(f"alternative must be 'greater' or 'less', got {alternative!r}")
    return rho, p


def density_check(
    hurst: float = 0.7,
    a: float = 1.0,
    sigma: float = 0.5,
    t: float = 2.0,
    n_paths: int = 10_000,
    dt: float = 1e-3,
    seed: int = 0,
):
    """Kolmogorov-Smirnov distance between the closed-form state law and a
    simulated endpoint ensemble."""
    params = FouParams(a=a, sigma=sigma, hurst=hurst)
    cfg = sde.SimConfig(
        params=sde.Dynamics(a=a, sigma=sigma, hurst=hurst),
        t_end=t,
        dt=dt,
        n_paths=n_paths,
        master_seed=seed,
    )
    endpoints = sde.simulate_fou_paths(cfg)
    z = z_of_t(params, t)
    ks = _scipy_stats.kstest(endpoints, _scipy_stats.norm(loc=0.0, scale=(2.0 * z) ** 0.5).cdf)
    return {
        "hurst": hurst,
        "a": a,
        "sigma": sigma,
        "t": t,
        "n_paths": n_paths,
        "dt": dt,
        "z_of_t": z,
        "analytic_variance": 2.0 * z,
        "empirical_variance": float(endpoints.var()),
        "ks_distance": float(ks.statistic),
    }


def drift_distance(
    hurst_values=(0.3, 0.5, 0.7),
    dim: int = 10_000,
    sigma: float = 0.01,
    t_end: float = 20.0,
    dt: float = 0.01,
    seed: int = 0,
    increment_scale: str = "unit",
):
    rows = sde.drift_distance_experiment(
        list(hurst_values), dim, sigma, t_end, dt, seed, increment_scale=increment_scale
    )
    return [{"hurst": h, "t": t, "distance": d} for h, t, d in rows]


def convergence(
    hurst_values=(0.75,),
    dt_exponents=range(6, 13),
    n_paths: int = 200,
    seed: int = 0,
    a: float = 1.0,
    sigma: float = 1.0,
):
    dts = [2.0**-k for k in dt_exponents]
    out = []
    for h in hurst_values:
        res = sde.convergence_slope(
            sde.Dynamics(a=a, sigma=sigma, hurst=float(h)), dts, n_paths, seed
        )
        out.append(res.as_dict())
    return out


def coordinate_hurst_summary(
    trace: sgn.SgnTrace,
    n_coords: int = 32,
    seed: int = 0,
    window_policy=None,
):
    """Hurst estimates on uniformly chosen coordinates of a noise trace.

    The default reduction for d-dimensional noise: estimate per coordinate
    and report the mean and spread rather than collapsing the vector first.
    """
    n_coords = min(n_coords, trace.dim)
    coords = np.sort(task_rng(seed, 0).choice(trace.dim, n_coords, replace=False))
    estimates = []
    for c in coords:
        series = sgn.scalarize_trace(trace, "coordinate", int(c))
        estimates.append(hurst_mod.estimate_hurst(series, window_policy).hurst)
    estimates = np.asarray(estimates)
    return {
        "coordinates": [int(c) for c in coords],
        "estimates": [float(e) for e in estimates],
        "mean_hurst": float(estimates.mean()),
        "std_hurst": float(estimates.std()),
    }


def sgn_demo(
    batch: int = 32,
    lr: float = 0.01,
    steps: int = 5000,
    seed: int = 0,
    n_coords: int = 32,
    model: str = "linear",
    n_samples: int = 1024,
    dim: int = 64,
):
    """Train the toy model, then push its logged gradient noise through the
    Hurst and normality pipelines."""
    model_spec = sgn.LinearModelSpec() if model == "linear" else sgn.MlpModelSpec()
    dataset = sgn.SyntheticRegressionSpec(n_samples=n_samples, dim=dim, seed=seed)
    trace = sgn.train_toy_and_log(model_spec, dataset, batch=batch, lr=lr, steps=steps, seed=seed)
    hurst_report = coordinate_hurst_summary(trace, n_coords=n_coords, seed=seed)
    coord = hurst_report["coordinates"][0]
    series = sgn.scalarize_trace(trace, "coordinate", coord)
    a2, p_ad = sgn.anderson_darling_normality(series)
    sw_series = series if len(series) <= sgn.SHAPIRO_MAX_N else series[: sgn.SHAPIRO_MAX_N]
    w, p_sw = sgn.shapiro_wilk_normality(sw_series)
    return {
        "trace_meta": trace.meta,
        "final_loss": float(trace.loss_curve[-1]),
        "hurst": hurst_report,
        "normality": {
            "coordinate": coord,
            "anderson_darling": {"statistic": a2, "p": p_ad},
            "shapiro_wilk": {"statistic": w, "p": p_sw},
        },
    }, trace
