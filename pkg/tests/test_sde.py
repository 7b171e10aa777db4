import math

import numpy as np
import pytest

from fbmlab.fou import FouParams, z_of_t
from fbmlab.sde import (
    Dynamics,
    SimConfig,
    convergence_slope,
    drift_distance_experiment,
    first_passage_mc,
    simulate_fou_paths,
)


def cfg(h=0.5, a=1.0, sigma=1.0, w0=0.0, t_end=1.0, dt=1e-2, n_paths=100, seed=0):
    return SimConfig(
        params=Dynamics(a=a, sigma=sigma, hurst=h, w0=w0),
        t_end=t_end,
        dt=dt,
        n_paths=n_paths,
        master_seed=seed,
    )


class TestSimulatePaths:
    def test_zero_noise_exponential_decay(self):
        c = cfg(sigma=0.0, w0=2.0, t_end=5.0, dt=1e-3, n_paths=2)
        endpoints = simulate_fou_paths(c)
        want = 2.0 * math.exp(-5.0)
        assert np.all(np.abs(endpoints - want) < 5e-3 * want / 1e-3 * 1e-3)
        assert endpoints[0] == pytest.approx(want, rel=5e-3)

    def test_h05_stationary_variance(self):
        c = cfg(h=0.5, t_end=10.0, dt=1e-2, n_paths=4000, seed=1)
        endpoints = simulate_fou_paths(c)
        var = endpoints.var()
        se = 0.5 * math.sqrt(2.0 / 4000)
        assert abs(var - 0.5) < 4 * se + 0.01  # 0.01 covers the O(dt) bias

    def test_h07_variance_matches_analytic_kernel(self):
        c = cfg(h=0.7, t_end=10.0, dt=1e-2, n_paths=4000, seed=2)
        endpoints = simulate_fou_paths(c)
        want = 2.0 * z_of_t(FouParams(a=1.0, sigma=1.0, hurst=0.7), 10.0)
        se = want * math.sqrt(2.0 / 4000)
        assert abs(endpoints.var() - want) < 4 * se + 0.02

    def test_deterministic(self):
        c = cfg(h=0.7, n_paths=16, seed=3)
        a = simulate_fou_paths(c)
        b = simulate_fou_paths(c)
        assert np.array_equal(a, b)

    def test_paths_endpoint_consistency(self):
        c = cfg(h=0.6, n_paths=8, seed=4)
        endpoints, paths = simulate_fou_paths(c, return_paths=True)
        assert paths.shape == (8, c.n_steps)
        assert np.array_equal(paths[:, -1], endpoints)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            cfg(dt=0.0)
        with pytest.raises(ValueError):
            cfg(dt=2.0, t_end=1.0)
        with pytest.raises(ValueError):
            cfg(n_paths=0)
        with pytest.raises(ValueError):
            Dynamics(a=0.0, sigma=1.0, hurst=0.5)

    def test_memory_guard(self):
        with pytest.raises(ValueError, match="cap"):
            SimConfig(
                params=Dynamics(a=1.0, sigma=1.0, hurst=0.5),
                t_end=1e6,
                dt=1e-3,
                n_paths=10_000,
                master_seed=0,
            )


class TestFirstPassage:
    def test_large_sigma_exits_immediately(self):
        c = cfg(h=0.5, a=0.5, sigma=100.0, t_end=10.0, dt=1e-2, n_paths=50, seed=5)
        batch = first_passage_mc(c, 1.0)
        assert batch.n_censored == 0
        assert batch.mean_uncensored < 0.1

    def test_censoring_invariant(self):
        # weak noise, short horizon: some paths never exit
        c = cfg(h=0.5, a=2.0, sigma=0.3, t_end=5.0, dt=1e-2, n_paths=100, seed=6)
        batch = first_passage_mc(c, 1.0)
        assert batch.n_censored > 0
        assert np.all(batch.times[batch.censored] == c.t_end)
        assert np.all(batch.times[~batch.censored] < c.t_end)

    def test_hurst_ordering_at_unit_cell(self):
        means = []
        for h in (0.3, 0.5, 0.7):
            c = cfg(h=h, a=1.0, sigma=1.0, t_end=1000.0, dt=1e-2, n_paths=50, seed=7)
            means.append(first_passage_mc(c, 1.0).mean_uncensored)
        assert means[0] < means[1] < means[2]

    def test_deterministic(self):
        c = cfg(h=0.7, a=1.0, sigma=1.0, t_end=50.0, dt=1e-2, n_paths=20, seed=8)
        a = first_passage_mc(c, 1.0)
        b = first_passage_mc(c, 1.0)
        assert np.array_equal(a.times, b.times) and np.array_equal(a.censored, b.censored)

    def test_boundary_validation(self):
        c = cfg(w0=0.5)
        with pytest.raises(ValueError, match="boundary"):
            first_passage_mc(c, 0.4)

    def test_csv_layout(self, tmp_path):
        c = cfg(h=0.5, sigma=2.0, t_end=5.0, dt=1e-2, n_paths=5, seed=9)
        batch = first_passage_mc(c, 0.5)
        out = tmp_path / "fpt.csv"
        batch.write_csv(out)
        lines = out.read_text().splitlines()
        assert lines[0] == "path_id,time,censored"
        assert len(lines) == 6


class TestDriftDistance:
    def test_zero_sigma_distance_zero(self):
        rows = drift_distance_experiment([0.5], dim=16, sigma=0.0, t_end=1.0, dt=0.01, seed=0)
        assert all(r[2] == 0.0 for r in rows)

    def test_unit_scale_increasing_in_h(self):
        rows = drift_distance_experiment(
            [0.3, 0.5, 0.7], dim=2000, sigma=0.01, t_end=20.0, dt=0.01, seed=10
        )
        terminal = {h: [r for r in rows if r[0] == h][-1][2] for h in (0.3, 0.5, 0.7)}
        assert terminal[0.3] < terminal[0.5] < terminal[0.7]

    def test_step_scale_matches_ou_stationary_variance(self):
        # per-coordinate stationary variance sigma^2/(2a) = sigma^2/4 at
        # H = 0.5, a = 2, under SDE-consistent increment scaling
        dim = 4000
        rows = drift_distance_experiment(
            [0.5], dim=dim, sigma=0.01, t_end=20.0, dt=0.01, seed=11, increment_scale="step"
        )
        per_coord = rows[-1][2] ** 2 / dim
        want = 0.01**2 / 4.0
        se = want * math.sqrt(2.0 / dim)
        assert abs(per_coord - want) < 4 * se

    def test_memory_guard_message(self):
        with pytest.raises(ValueError, match="cap"):
            drift_distance_experiment([0.5], dim=10**7, sigma=0.01, t_end=1e3, dt=0.01, seed=0)

    def test_rows_shape(self):
        rows = drift_distance_experiment(
            [0.5], dim=8, sigma=0.1, t_end=1.0, dt=0.01, seed=0, n_report=10
        )
        assert len(rows) == 10
        assert rows[-1][1] == pytest.approx(1.0)


class TestConvergenceSlope:
    DTS = [2.0**-k for k in range(5, 11)]

    def test_noise_aggregation_is_exact(self):
        # summing fine increments over a coarse cell IS the coarse
        # increment by construction; verify the reshape-sum identity
        x = np.arange(24, dtype=float).reshape(2, 12)
        coarse = x.reshape(2, 3, 4).sum(axis=2)
        for row in range(2):
            for j in range(3):
                assert coarse[row, j] == x[row, 4 * j : 4 * (j + 1)].sum()

    def test_h075_slope_near_rate(self):
        res = convergence_slope(
            Dynamics(a=1.0, sigma=1.0, hurst=0.75), self.DTS, n_paths=100, seed=12, refine=32
        )
        assert 0.35 <= res.slope <= 0.65
        assert res.r_squared > 0.95

    def test_slope_ordering_in_h(self):
        lo = convergence_slope(
            Dynamics(a=1.0, sigma=1.0, hurst=0.6), self.DTS, n_paths=60, seed=13, refine=32
        )
        hi = convergence_slope(
            Dynamics(a=1.0, sigma=1.0, hurst=0.9), self.DTS, n_paths=60, seed=13, refine=32
        )
        assert hi.slope > lo.slope

    def test_zero_noise_deterministic_first_order(self):
        res = convergence_slope(
            Dynamics(a=1.0, sigma=0.0, hurst=0.75, w0=1.0), self.DTS, n_paths=2, seed=14
        )
        assert res.slope == pytest.approx(1.0, abs=0.1)

    def test_deterministic(self):
        a = convergence_slope(
            Dynamics(a=1.0, sigma=1.0, hurst=0.75), self.DTS, n_paths=10, seed=15, refine=8
        )
        b = convergence_slope(
            Dynamics(a=1.0, sigma=1.0, hurst=0.75), self.DTS, n_paths=10, seed=15, refine=8
        )
        assert a == b

    def test_rejects_non_nested_dts(self):
        with pytest.raises(ValueError, match="nest"):
            convergence_slope(
                Dynamics(a=1.0, sigma=1.0, hurst=0.75), [0.1, 0.03], n_paths=2, seed=0
            )

    def test_rejects_low_hurst(self):
        with pytest.raises(ValueError, match="hurst"):
            convergence_slope(Dynamics(a=1.0, sigma=1.0, hurst=0.4), self.DTS, 2, 0)

    def test_json_dict_fields(self):
        res = convergence_slope(
            Dynamics(a=1.0, sigma=1.0, hurst=0.75), self.DTS, n_paths=5, seed=16, refine=8
        )
        d = res.as_dict()
        assert set(d) == {"hurst", "slope", "r_squared", "dts", "errors"}
        assert len(d["dts"]) == len(d["errors"]) == len(self.DTS)
