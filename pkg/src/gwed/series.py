"""Power-series machinery: cdf Taylor coefficients, series reciprocal and
powers, Lagrange reversion and the series forms of PWMs and quantiles.

These paths are exposed for analysis; production quantiles and PWMs come
from :func:`gwed.core.quantile` and :func:`gwed.moments.pwm`.

Two structural facts govern what the series can do for the GWED:

* ``F(x) = O(x^2)`` because ``f(0) = 0``, so the leading coefficient ``d_0``
  of ``F(x) = x sum_i d_i x^i`` vanishes and the reversion ``Q(u) = sum b_n u^n``
  does not exist. :func:`quantile_series` raises for the GWED;
  :func:`quantile_series_sqrt` reverts ``sqrt(F)`` instead, giving a series
  in ``sqrt(u)``.
* The term-by-term PWM series ``sum_i c_{r,i} E[X^{s+i+..}]`` has ratio
  ``~ r * max_rate / lambda1 > 1`` and diverges for ``r >= 1``;
  :func:`pwm_series` detects this and raises.
"""
from dataclasses import dataclass
import math

import numpy as np

from .core import as_gwed, mixture
from .errors import (SeriesConvergenceError, SeriesDomainError,
                     SeriesInapplicableError)

DEFAULT_QUANTILE_ORDER = 40
DEFAULT_PWM_ORDER = 80


def _exp_taylor(c, order):
    """Taylor coefficients of ``exp(-c x)`` up to ``x^order``."""
    t = np.empty(order + 1)
    t[0] = 1.0
    for i in range(1, order + 1):
        t[i] = t[i - 1] * (-c) / i
    return t


def _cauchy(a, b, order):
    return np.array([np.dot(a[: i + 1], b[i::-1]) for i in range(order + 1)])


@dataclass(frozen=True)
class SeriesCoefficients:
    """Taylor coefficients of the cdf, ``F(x) = sum_{i>=1} a_i x^i``.

    ``a[0]`` is zero; ``d = a[1:]`` are the coefficients of ``F(x) / x``.
    """

    a: np.ndarray
    truncation_order: int

    @property
    def d(self):
        return self.a[1:]

    @property
    def leading_order(self):
        nz = np.flatnonzero(self.a)
        return int(nz[0]) if nz.size else None

    def partial_sum(self, x, order=None):
        order = self.truncation_order if order is None else order
        x = np.asarray(x, dtype=float)
        return np.polynomial.polynomial.polyval(x, self.a[: order + 1])

    def reciprocal(self):
        """``p_i`` with ``1 / sum d_i x^i = (1/d_0) sum p_i x^i``."""
        return series_reciprocal(self.d)

    def power(self, r):
        """``c_{r,i}`` with ``(sum d_i x^i)^r = sum c_{r,i} x^i``."""
        return series_power(self.d, r)

    def reversion(self):
        return lagrange_inversion(self.d)


def cdf_series_coefficients(params, order):
    """cdf Taylor coefficients from the product form of the density.

    ``f(x)/K = e^{-l1 x} * (1 - e^{-s x}) * (1 - theta e^{-s x} + 2 theta e^{-(s+l1) x})``
    is expanded factor by factor and multiplied as series, so the structural
    zero ``a_1 = f(0) = 0`` comes out exact.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    p = as_gwed(params)
    l1, s, th = p.lambda1, p.s, p.theta
    K = mixture(p).k_const
    n = order - 1
    f1 = _exp_taylor(l1, n)
    f2 = -_exp_taylor(s, n)
    f2[0] = 0.0
    f3 = -th * _exp_taylor(s, n) + 2.0 * th * _exp_taylor(s + l1, n)
    f3[0] += 1.0
    dens = K * _cauchy(_cauchy(f1, f2, n), f3, n)
    a = np.zeros(order + 1)
    a[1:] = dens / np.arange(1, order + 1)
    return SeriesCoefficients(a=a, truncation_order=order)


def cdf_series_coefficients_mixture(params, order):
    """Same coefficients from the mixture cdf: ``a_i = (-1)^{i+1}/i! sum_j w_j r_j^i``.

    Suffers cancellation (the weights are large and alternate in sign) and is
    kept as an independent check of :func:`cdf_series_coefficients`.
    """
    mix = mixture(params)
    a = np.zeros(order + 1)
    for i in range(1, order + 1):
        a[i] = (-1.0) ** (i + 1) / math.factorial(i) * float(np.sum(mix.weights * mix.rates ** i))
    return SeriesCoefficients(a=a, truncation_order=order)


def series_reciprocal(d, order=None):
    """Coefficients ``p`` (``p_0 = 1``) of ``d_0 / sum_i d_i x^i``."""
    d = np.asarray(d, dtype=float)
    order = len(d) - 1 if order is None else order
    if d[0] == 0.0:
        raise SeriesInapplicableError("series reciprocal needs a nonzero constant term")
    p = np.zeros(order + 1)
    p[0] = 1.0
    for i in range(1, order + 1):
        k = np.arange(1, min(i, len(d) - 1) + 1)
        p[i] = -np.dot(d[k], p[i - k]) / d[0]
    return p


def series_power(c, n, order=None):
    """Coefficients of ``(sum_i c_i x^i)^n`` for real ``n`` (``c_0 != 0``).

    Uses the recurrence
    ``b_0 = c_0^n``, ``b_m = (m c_0)^{-1} sum_{k=1}^m (k(n+1) - m) c_k b_{m-k}``.
    """
    c = np.asarray(c, dtype=float)
    order = len(c) - 1 if order is None else order
    if c[0] == 0.0:
        raise SeriesInapplicableError("series power needs a nonzero constant term")
    b = np.zeros(order + 1)
    b[0] = c[0] ** n
    for m in range(1, order + 1):
        k = np.arange(1, min(m, len(c) - 1) + 1)
        b[m] = np.dot((k * (n + 1) - m) * c[k], b[m - k]) / (m * c[0])
    return b


def lagrange_inversion(d, order=None):
    """Reversion of ``y = x sum_i d_i x^i`` into ``x = sum_{n>=1} b_n y^n``.

    ``b_n = q_{n,n-1} / (n d_0^n)`` with ``q_{n,.}`` the coefficients of
    ``(sum p_i x^i)^n`` and ``p`` the normalized reciprocal of ``d``.
    Returns an array with ``b[0] = 0``.
    """
    d = np.asarray(d, dtype=float)
    order = len(d) if order is None else order
    if d[0] == 0.0:
        raise SeriesInapplicableError(
            "leading coefficient d_0 vanishes; the reversion has no power series in u")
    p = series_reciprocal(d, order - 1)
    b = np.zeros(order + 1)
    for n in range(1, order + 1):
        q = series_power(p, n, n - 1)
        b[n] = q[n - 1] / (n * d[0] ** n)
    return b


def convergence_radius(coeffs):
    """Root-test estimate of the radius of convergence of ``sum c_n z^n``.

    Fits ``log|c_n| ~ a - n log R`` over the upper half of the available
    coefficients; returns ``inf`` when they vanish.
    """
    c = np.asarray(coeffs, dtype=float)
    n = np.arange(len(c))
    sel = (n >= len(c) // 2) & (c != 0.0)
    if sel.sum() < 2:
        return math.inf
    slope = np.polyfit(n[sel], np.log(np.abs(c[sel])), 1)[0]
    return math.exp(-slope)


def _evaluate_reversion(b, z, z_max, label):
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(z > z_max):
        raise SeriesDomainError(f"{label} outside validated domain [0, {z_max:.6g}]")
    return np.polynomial.polynomial.polyval(z, b)


def quantile_series_from_coefficients(d, u, order=DEFAULT_QUANTILE_ORDER):
    """Evaluate ``Q(u) = sum b_n u^n`` for a cdf ``F(x) = x sum d_i x^i``.

    The validated domain is half the estimated radius of convergence of ``b``.
    """
    b = lagrange_inversion(d, order)
    u_max = 0.5 * convergence_radius(b[1:])
    out = _evaluate_reversion(b, u, u_max, "u")
    return float(out) if np.ndim(out) == 0 else out


def quantile_series(params, u, order=DEFAULT_QUANTILE_ORDER):
    """Lagrange-series quantile in powers of ``u``.

    Raises
    ------
    SeriesInapplicableError
        Always for the GWED, whose cdf has ``d_0 = f(0) = 0``.
    """
    coeffs = cdf_series_coefficients(params, order + 1)
    if coeffs.d[0] == 0.0:
        raise SeriesInapplicableError(
            "GWED cdf is O(x^2) at the origin (d_0 = 0); the power series in u does not "
            "exist. Use gwed.quantile, or quantile_series_sqrt for a series in sqrt(u)."
        )
    return quantile_series_from_coefficients(coeffs.d, u, order)


@dataclass(frozen=True)
class SqrtReversion:
    """``Q(u) = sum_n b_n v^n`` with ``v = sqrt(u)``, valid for ``v <= v_max``."""

    b: np.ndarray
    v_max: float

    @property
    def u_max(self):
        return self.v_max ** 2

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = _evaluate_reversion(self.b, np.sqrt(np.maximum(u, 0.0)), self.v_max, "sqrt(u)")
        return float(out) if np.ndim(out) == 0 else out


def sqrt_reversion(params, order=DEFAULT_QUANTILE_ORDER):
    """Build the series of ``Q`` in ``sqrt(u)`` from ``sqrt(F(x)) = x sqrt(E(x))``.

    ``F(x) = x^2 E(x)`` with ``E(0) = K s (1+theta) / 2 > 0`` unless
    ``theta = -1``.
    """
    coeffs = cdf_series_coefficients(params, order + 2)
    e = coeffs.a[2:]
    if not e[0] > 0.0:
        raise SeriesInapplicableError("cdf is O(x^3) at the origin (theta = -1)")
    g = series_power(e, 0.5, order)
    b = lagrange_inversion(g, order)
    return SqrtReversion(b=b, v_max=0.5 * convergence_radius(b[1:]))


def quantile_series_sqrt(params, u, order=DEFAULT_QUANTILE_ORDER):
    return sqrt_reversion(params, order)(u)


def pwm_series(params, s, r, order=DEFAULT_PWM_ORDER, tol=1e-10):
    """Term-by-term PWM series ``sum_i c_{r,i} E[X^{s + m r + i}]``.

    ``m`` is the order of the leading nonzero cdf coefficient (2 for the
    GWED) and ``c_{r,i}`` the coefficients of ``(F(x)/x^m)^r``.

    Raises
    ------
    SeriesConvergenceError
        When the last terms are not below ``tol`` relative to the sum, which
        is the case for every ``r >= 1``.
    """
    if int(s) != s or s < 0 or int(r) != r or r < 0:
        raise ValueError("s and r must be nonnegative integers")
    s, r = int(s), int(r)
    mix = mixture(params)
    coeffs = cdf_series_coefficients(params, order + 4)
    m = coeffs.leading_order
    c = series_power(coeffs.a[m:], r, order)
    terms = np.zeros(order + 1)
    for i in range(order + 1):
        k = s + m * r + i
        if c[i] == 0.0:
            continue
        log_fact = math.lgamma(k + 1)
        moment = float(np.sum(mix.weights * np.exp(log_fact - k * np.log(mix.rates))))
        terms[i] = c[i] * moment
    total = float(terms.sum())
    tail = float(np.max(np.abs(terms[-5:])))
    if not math.isfinite(total) or tail > tol * max(abs(total), 1e-300):
        ratio = abs(terms[-1] / terms[-2]) if terms[-2] != 0 else math.inf
        raise SeriesConvergenceError(
            f"PWM series (s={s}, r={r}) not converged at order {order}: "
            f"last term {terms[-1]:.3g}, term ratio {ratio:.3g}"
        )
    return total
