import math

import numpy as np
import pytest

from fbmlab.specfun import (
    exp2t_scaled_kummer_m,
    exp_integral_e,
    gamma_fn,
    kummer_m,
    log_kummer_m,
)

mpmath = pytest.importorskip("mpmath")
mpmath.mp.dps = 30


class TestGamma:
    def test_gamma_one(self):
        assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-14)

    def test_gamma_half_is_sqrt_pi(self):
        assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)

    def test_gamma_14_vs_high_precision(self):
        # arbitrary-precision oracle value
        assert gamma_fn(1.4) == pytest.approx(0.88726381750307529, rel=1e-13)

    def test_twelve_digits_on_working_range(self):
        for x in np.geomspace(0.01, 30.0, 25):
            ref = float(mpmath.gamma(x))
            assert gamma_fn(float(x)) == pytest.approx(ref, rel=1e-12)

    def test_rejects_nonpositive(self):
        for x in (0.0, -1.0):
            with pytest.raises(ValueError):
                gamma_fn(x)


class TestExpIntegral:
    def test_closed_form_p0(self):
        r = exp_integral_e(0.0, 2.0)
        assert r.value == pytest.approx(math.exp(-2.0) / 2.0, rel=1e-13)

    def test_p1_t1_oracle(self):
        assert exp_integral_e(1.0, 1.0).value == pytest.approx(0.21938393439552027, rel=1e-12)

    def test_negative_p_oracle(self):
        # p = -0.4 is the H = 0.7 regime through p = 2 - 2H
        assert exp_integral_e(-0.4, 5.0).value == pytest.approx(0.0014452919839229933, rel=1e-12)

    def test_error_bound_contract(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            p = rng.uniform(-2.0, 2.0)
            t = rng.uniform(0.1, 20.0)
            r = exp_integral_e(p, t)
            assert r.est_abs_error <= 1e-10 * max(1.0, abs(r.value))

    def test_matches_quadrature_oracle_on_grid(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            p = rng.uniform(-2.0, 2.0)
            t = rng.uniform(0.1, 30.0)
            r = exp_integral_e(p, t)
            ref = float(mpmath.expint(p, t))
            assert abs(r.value - ref) <= max(r.est_abs_error, 1e-13 * abs(ref)) * 10

    def test_monotone_in_t_and_p(self):
        ts = np.linspace(0.2, 8.0, 12)
        ps = np.linspace(-2.0, 2.0, 9)
        for p in ps:
            vals = [exp_integral_e(p, t).value for t in ts]
            assert np.all(np.diff(vals) < 0)
        for t in ts:
            vals = [exp_integral_e(p, t).value for p in ps]
            assert np.all(np.diff(vals) < 0)

    def test_rejects_nonpositive_t(self):
        with pytest.raises(ValueError):
            exp_integral_e(1.0, 0.0)


class TestKummer:
    def test_value_at_zero_is_one(self):
        assert kummer_m(0.4, 1.4, 0.0).value == pytest.approx(1.0, rel=1e-13)

    def test_erf_identity(self):
        # M(1/2, 3/2, -x^2) = sqrt(pi) erf(x) / (2x) at x = 1
        assert kummer_m(0.5, 1.5, -1.0).value == pytest.approx(0.74682413281242703, rel=1e-12)

    def test_h07_regime_oracle(self):
        assert kummer_m(0.4, 1.4, 3.0).value == pytest.approx(3.6909933832498942, rel=1e-12)

    def test_matches_oracle_on_grid(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            a = rng.uniform(0.05, 1.5)
            b = a + rng.uniform(0.1, 1.5)
            t = rng.uniform(-40.0, 40.0)
            r = kummer_m(a, b, t)
            ref = float(mpmath.hyp1f1(a, b, t))
            assert r.value == pytest.approx(ref, rel=1e-11)

    def test_derivative_recurrence(self):
        # d/dt M(a,b,t) = (a/b) M(a+1, b+1, t), central differences
        rng = np.random.default_rng(4)
        for _ in range(20):
            a = rng.uniform(0.1, 1.2)
            b = a + rng.uniform(0.2, 1.2)
            t = rng.uniform(-5.0, 5.0)
            h = 1e-5 * max(1.0, abs(t))
            lhs = (kummer_m(a, b, t + h).value - kummer_m(a, b, t - h).value) / (2 * h)
            rhs = a / b * kummer_m(a + 1.0, b + 1.0, t).value
            assert lhs == pytest.approx(rhs, rel=1e-6)

    def test_large_t_asymptotic_leading_order(self):
        # M(2H-1, 2H, t) ~ ((2H-1)/t) e^t for large t; relative deviation
        # shrinks like the (2-2H)/t first correction.
        h = 0.7
        for t in (25.0, 50.0, 100.0):
            lead = (2 * h - 1) / t * math.exp(t)
            ratio = kummer_m(2 * h - 1, 2 * h, t).value / lead
            assert abs(ratio - 1.0) < 3.0 * (2 - 2 * h) / t

    def test_log_form_matches_oracle_far_beyond_overflow(self):
        ref = float(mpmath.log(mpmath.hyp1f1(0.4, 1.4, 1500.0)))
        assert log_kummer_m(0.4, 1.4, 1500.0) == pytest.approx(ref, rel=1e-12)

    def test_overflow_is_reported(self):
        with pytest.raises(OverflowError):
            kummer_m(0.4, 1.4, 1500.0)

    def test_scaled_product_is_stable_for_huge_t(self):
        for t in (5.0, 80.0, 700.0):
            r = exp2t_scaled_kummer_m(0.4, 1.4, t)
            ref = float(mpmath.exp(-2 * t) * mpmath.hyp1f1(0.4, 1.4, t))
            assert r.value == pytest.approx(ref, rel=1e-11)

    def test_rejects_bad_regime(self):
        for a, b in ((0.0, 1.0), (-0.5, 1.0), (1.0, 0.5), (1.0, 1.0)):
            with pytest.raises(ValueError):
                kummer_m(a, b, 1.0)
