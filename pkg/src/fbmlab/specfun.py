"""Gamma, the generalized exponential integral E_p, and Kummer's confluent
hypergeometric function M, on the narrow parameter strip the fractional OU
closed form needs.

Both E_p and M are evaluated by adaptive quadrature of their defining
integrals, after substitutions that keep the integrands well scaled:

* ``E_p(t) = int_1^inf x^(-p) e^(-tx) dx`` becomes
  ``(e^-t / t) * int_0^inf (1 + u/t)^(-p) e^-u du`` via ``u = t(x-1)``,
  which factors the exponential smallness out analytically.
* ``M(a, b, t)`` for t > 0 is reflected to a negative argument with
  Kummer's transformation ``M(a, b, t) = e^t M(b-a, b, -t)``, whose Euler
  integrand is bounded by 1; the algebraic endpoint singularities
  ``x^(a-1) (1-x)^(b-a-1)`` go to QUADPACK's weighted (QAWS) rule.

The product ``e^(-2t) M(a, b, t)`` consumed by the variance kernel is
exposed directly so it never round-trips through an overflowing e^t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.integrate import quad

__all__ = [
    "SpecialFnResult",
    "gamma_fn",
    "exp_integral_e",
    "kummer_m",
    "log_kummer_m",
    "exp2t_scaled_kummer_m",
]

_QUAD_OPTS = dict(epsabs=1e-14, epsrel=1e-12, limit=200)


@dataclass(frozen=True)
class SpecialFnResult:
    value: float
    est_abs_error: float

    def __float__(self):
        return self.value


def gamma_fn(x: float) -> float:
    """Gamma function for strictly positive arguments."""
    if x <= 0.0:
        raise ValueError(f"gamma_fn requires x > 0, got {x}")
    return float(special.gamma(x))


def exp_integral_e(p: float, t: float) -> SpecialFnResult:
    """Generalized exponential integral E_p(t) = int_1^inf x^(-p) e^(-tx) dx."""
    if t <= 0.0:
        raise ValueError(f"exp_integral_e requires t > 0, got {t}")
    scale = math.exp(-t) / t
    val, err = quad(lambda u: (1.0 + u / t) ** (-p) * math.exp(-u), 0.0, np.inf, **_QUAD_OPTS)
    return SpecialFnResult(value=scale * val, est_abs_error=scale * err + abs(scale * val) * 1e-15)


def _check_kummer_domain(a: float, b: float) -> None:
    if not b > a > 0.0:
        raise ValueError(f"kummer_m requires b > a > 0, got a={a}, b={b}")


def _euler_integral(a: float, b: float, t: float) -> tuple[float, float]:
    """(value, abserr) of int_0^1 e^(tx) x^(a-1) (1-x)^(b-a-1) dx, t <= 0."""
    return quad(
        lambda x: math.exp(t * x),
        0.0,
        1.0,
        weight="alg",
        wvar=(a - 1.0, b - a - 1.0),
        **_QUAD_OPTS,
    )


def _log_beta_norm(a: float, b: float) -> float:
    """log of Gamma(b) / (Gamma(a) Gamma(b-a))."""
    return float(special.gammaln(b) - special.gammaln(a) - special.gammaln(b - a))


def kummer_m(a: float, b: float, t: float) -> SpecialFnResult:
    """Kummer's M(a, b, t) in the regime b > a > 0, via its Euler integral."""
    _check_kummer_domain(a, b)
    norm = math.exp(_log_beta_norm(a, b))
    if t <= 0.0:
        val, err = _euler_integral(a, b, t)
        return SpecialFnResult(value=norm * val, est_abs_error=norm * err)
    # Reflect to a decaying integrand; exact, not asymptotic.
    val, err = _euler_integral(b - a, b, -t)
    if t > 700.0:
        log_value = t + math.log(norm * val)
        if log_value > math.log(np.finfo(float).max):
            raise OverflowError(
                f"M({a}, {b}, {t}) overflows float64; "
                "use log_kummer_m or exp2t_scaled_kummer_m"
            )
        value = math.exp(log_value)
        return SpecialFnResult(value=value, est_abs_error=value * (err / val))
    scale = math.exp(t)
    return SpecialFnResult(value=norm * scale * val, est_abs_error=norm * scale * err)


def log_kummer_m(a: float, b: float, t: float) -> float:
    """log M(a, b, t) for t >= 0 without forming e^t."""
    _check_kummer_domain(a, b)
    if t < 0.0:
        raise ValueError("log path is meant for nonnegative t")
    val, _ = _euler_integral(b - a, b, -t)
    return t + _log_beta_norm(a, b) + math.log(val)


def exp2t_scaled_kummer_m(a: float, b: float, t: float) -> SpecialFnResult:
    """The damped product e^(-2t) M(a, b, t) for t >= 0.

    Equals e^(-t) M(b-a, b, -t) by Kummer's transformation, so it stays
    finite and well conditioned however large t gets.
    """
    _check_kummer_domain(a, b)
    if t < 0.0:
        raise ValueError(f"scaled form requires t >= 0, got {t}")
    norm = math.exp(_log_beta_norm(a, b))
    val, err = _euler_integral(b - a, b, -t)
    scale = norm * math.exp(-t)
    return SpecialFnResult(value=scale * val, est_abs_error=scale * err)
