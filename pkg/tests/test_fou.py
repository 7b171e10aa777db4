import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from fbmlab.fou import (
    DensityCurve,
    FouParams,
    fpt_density_approx,
    fpt_normalization,
    mean_escape_time,
    ou_variance_kernel,
    state_density,
    survival_probability,
    z_of_t,
)
from fbmlab.sde import Dynamics, SimConfig, simulate_fou_paths


def z_brute_force(h: float, a: float, sigma: float, t: float) -> float:
    """Nested quadrature of the covariance double integral over ordered
    pairs (t2 < t1) of e^{-a t1} e^{-a t2} g(t1 - t2), with the memory
    kernel g(u) = sigma^2 H(2H-1) u^(2H-2).  Entirely independent of the
    E_p / Kummer route used by z_of_t."""

    def inner(t1):
        val, _ = quad(
            lambda u: math.exp(-a * (t1 - u)),
            0.0,
            t1,
            weight="alg",
            wvar=(2.0 * h - 2.0, 0.0),
            epsabs=1e-13,
            epsrel=1e-11,
            limit=200,
        )
        return val

    outer, _ = quad(
        lambda t1: math.exp(-a * t1) * inner(t1), 0.0, t, epsabs=1e-13, epsrel=1e-11, limit=200
    )
    return sigma**2 * h * (2.0 * h - 1.0) * outer


class TestZofT:
    def test_brute_force_spot_check(self):
        # (H=0.7, a=2, sigma=0.5, t=1)
        params = FouParams(a=2.0, sigma=0.5, hurst=0.7)
        assert z_of_t(params, 1.0) == pytest.approx(z_brute_force(0.7, 2.0, 0.5, 1.0), rel=1e-6)

    @pytest.mark.parametrize("h", [0.55, 0.6375, 0.725, 0.8125, 0.9])
    def test_brute_force_small_grid(self, h):
        for a in (0.5, 1.5):
            for t in (0.5, 2.0, 10.0):
                params = FouParams(a=a, sigma=1.0, hurst=h)
                assert z_of_t(params, t) == pytest.approx(
                    z_brute_force(h, a, 1.0, t), rel=1e-5
                ), (h, a, t)

    def test_classical_ou_limit(self):
        params = FouParams(a=1.0, sigma=1.0, hurst=0.501)
        for t in (0.5, 1.0, 3.0, 10.0):
            ou = ou_variance_kernel(1.0, 1.0, t)
            assert abs(z_of_t(params, t) - ou) / ou < 0.01
        assert ou_variance_kernel(1.0, 1.0, 3.0) == pytest.approx(0.24938, abs=1e-5)

    def test_large_t_plateau(self):
        h, a, sigma = 0.7, 1.0, 1.0
        plateau = a ** (-2 * h) * sigma**2 * h * (2 * h - 1) * math.gamma(2 * h - 1) / 2.0
        assert abs(z_of_t(FouParams(a=a, sigma=sigma, hurst=h), 50.0) - plateau) < 1e-6

    def test_rejects_bad_domain(self):
        with pytest.raises(ValueError):
            FouParams(a=1.0, sigma=1.0, hurst=0.5)
        with pytest.raises(ValueError):
            FouParams(a=1.0, sigma=1.0, hurst=0.3)
        with pytest.raises(ValueError):
            z_of_t(FouParams(a=1.0, sigma=1.0, hurst=0.7), 0.0)


class TestStateDensity:
    def test_mode_at_decayed_start(self):
        params = FouParams(a=1.0, sigma=1.0, hurst=0.7, w0=1.0)
        grid = np.linspace(-3.0, 3.0, 4001)
        curve = state_density(params, 2.0, grid)
        assert grid[np.argmax(curve.density)] == pytest.approx(math.exp(-2.0), abs=0.01)

    def test_normalization_on_wide_grid(self):
        params = FouParams(a=1.0, sigma=0.5, hurst=0.7)
        z = z_of_t(params, 2.0)
        s = math.sqrt(2.0 * z)
        grid = np.linspace(-8 * s, 8 * s, 2001)
        curve = state_density(params, 2.0, grid)
        assert np.trapezoid(curve.density, grid) == pytest.approx(1.0, abs=1e-4)

    def test_variance_is_twice_z(self):
        params = FouParams(a=1.3, sigma=0.8, hurst=0.65)
        z = z_of_t(params, 1.5)
        s = math.sqrt(2.0 * z)
        grid = np.linspace(-10 * s, 10 * s, 8001)
        curve = state_density(params, 1.5, grid)
        var = np.trapezoid(grid**2 * curve.density, grid)
        assert var == pytest.approx(2.0 * z, rel=1e-4)

    def test_monte_carlo_ks(self):
        # endpoint ensemble from the simulator as the oracle
        params = FouParams(a=1.0, sigma=0.5, hurst=0.7)
        cfg = SimConfig(
            params=Dynamics(a=1.0, sigma=0.5, hurst=0.7),
            t_end=2.0,
            dt=1e-3,
            n_paths=4000,
            master_seed=31,
        )
        endpoints = simulate_fou_paths(cfg)
        z = z_of_t(params, 2.0)
        ks = stats.kstest(endpoints, stats.norm(loc=0.0, scale=math.sqrt(2 * z)).cdf)
        assert ks.statistic < 0.03

    def test_grid_validation(self):
        params = FouParams(a=1.0, sigma=1.0, hurst=0.7)
        with pytest.raises(ValueError):
            state_density(params, 1.0, np.array([1.0, 0.5]))

    def test_csv_emission(self, tmp_path):
        params = FouParams(a=1.0, sigma=1.0, hurst=0.7)
        curve = state_density(params, 1.0, np.linspace(-2, 2, 11))
        path = tmp_path / "density.csv"
        curve.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "w,density" and len(lines) == 12


class TestSurvival:
    def test_infinite_boundary(self):
        params = FouParams(a=1.0, sigma=0.5, hurst=0.7)
        assert survival_probability(params, 1.0, math.inf) == 1.0

    def test_zero_boundary(self):
        params = FouParams(a=1.0, sigma=0.5, hurst=0.7)
        assert survival_probability(params, 1.0, 0.0) == 0.0

    def test_gaussian_cdf_identity(self):
        params = FouParams(a=1.0, sigma=0.5, hurst=0.7, w0=0.0)
        z = z_of_t(params, 1.0)
        s = math.sqrt(2.0 * z)
        want = stats.norm.cdf(1.0 / s) - stats.norm.cdf(-1.0 / s)
        assert survival_probability(params, 1.0, 1.0) == pytest.approx(want, rel=1e-12)


class TestFptApprox:
    def test_doubling_ratio(self):
        # p(2t)/p(t) = 2^(2H-2) e^(-a t)
        params = FouParams(a=1.3, sigma=0.7, hurst=0.7)
        t = 1.7
        ratio = fpt_density_approx(params, 2 * t) / fpt_density_approx(params, t)
        assert ratio == pytest.approx(2 ** (2 * 0.7 - 2) * math.exp(-1.3 * t), rel=1e-12)

    def test_sigma_scaling(self):
        base = FouParams(a=1.0, sigma=0.5, hurst=0.6)
        double = FouParams(a=1.0, sigma=1.0, hurst=0.6)
        for t in (0.5, 2.0, 7.0):
            assert fpt_density_approx(double, t) == pytest.approx(
                fpt_density_approx(base, t) / 2.0, rel=1e-12
            )

    def test_log_slope_approaches_minus_a(self):
        params = FouParams(a=1.0, sigma=1.0, hurst=0.7)
        ts = np.linspace(40.0, 60.0, 9)
        logp = np.log(fpt_density_approx(params, ts))
        slope = np.polyfit(ts, logp, 1)[0]
        assert abs(slope - (-1.0)) < 0.05

    def test_normalized_integrates_to_one(self):
        params = FouParams(a=1.3, sigma=0.7, hurst=0.7)
        t_min = 1e-3 / params.a
        val, _ = quad(
            lambda s: fpt_density_approx(params, s, normalized=True), t_min, np.inf, limit=200
        )
        assert val == pytest.approx(1.0, rel=1e-8)

    def test_normalization_against_quadrature(self):
        params = FouParams(a=0.8, sigma=1.2, hurst=0.65)
        t_min = 1e-3 / params.a
        val, _ = quad(lambda s: fpt_density_approx(params, s), t_min, np.inf, limit=200)
        assert fpt_normalization(params) == pytest.approx(val, rel=1e-9)

    def test_mean_escape_increasing_in_h(self):
        means = [
            mean_escape_time(FouParams(a=1.0, sigma=1.0, hurst=h))
            for h in (0.55, 0.65, 0.75, 0.85)
        ]
        assert np.all(np.diff(means) > 0)

    def test_rejects_nonpositive_t(self):
        with pytest.raises(ValueError):
            fpt_density_approx(FouParams(a=1.0, sigma=1.0, hurst=0.7), 0.0)
