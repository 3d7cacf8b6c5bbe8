"""Moments, generating functions and probability weighted moments."""
from dataclasses import dataclass
import math
from itertools import product

import numpy as np

from .core import as_gwed, mixture
from .errors import DomainError
from .numerics import DEFAULT_EPSABS, DEFAULT_EPSREL, integrate_adaptive, lower_incomplete_gamma

PWM_MAX_ORDER = 4


def raw_moment(params, n):
    """``E[X^n] = n! sum_j w_j / r_j^n`` from the mixture form."""
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    mix = mixture(params)
    return math.factorial(int(n)) * float(np.sum(mix.weights / mix.rates ** n))


def mgf(params, t):
    """Moment generating function, defined for ``t < lambda1``."""
    p = as_gwed(params)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr >= p.lambda1):
        raise DomainError(f"mgf requires t < lambda1 = {p.lambda1:g}")
    mix = mixture(p)
    vals = (mix.weights * mix.rates / (mix.rates - t_arr[..., None])).sum(axis=-1)
    return float(vals) if np.ndim(vals) == 0 else vals


@dataclass(frozen=True)
class MomentSummary:
    raw_moments: tuple       # mu'_1 .. mu'_4
    central_moments: tuple   # mu_2 .. mu_4
    cumulants: tuple         # kappa_1 .. kappa_4
    skewness: float
    kurtosis: float          # kappa_4 / kappa_2^2 (excess)

    def to_dict(self):
        return {
            "raw_moments": list(self.raw_moments),
            "central_moments": list(self.central_moments),
            "cumulants": list(self.cumulants),
            "skewness": self.skewness,
            "kurtosis": self.kurtosis,
        }


def central_from_raw(raw):
    """Central moments ``mu_r = sum_k (-1)^k C(r,k) mu'_1^k mu'_{r-k}``."""
    m = [1.0] + list(raw)
    mu1 = m[1]
    return tuple(
        sum((-1) ** k * math.comb(r, k) * mu1 ** k * m[r - k] for k in range(r + 1))
        for r in range(2, len(m))
    )


def cumulants_from_raw(raw):
    """``kappa_r = mu'_r - sum_{k<r} C(r-1,k-1) kappa_k mu'_{r-k}``."""
    m = [1.0] + list(raw)
    kappa = [0.0]
    for r in range(1, len(m)):
        kappa.append(m[r] - sum(math.comb(r - 1, k - 1) * kappa[k] * m[r - k] for k in range(1, r)))
    return tuple(kappa[1:])


def moment_summary(params):
    raw = tuple(raw_moment(params, n) for n in range(1, 5))
    kap = cumulants_from_raw(raw)
    return MomentSummary(
        raw_moments=raw,
        central_moments=central_from_raw(raw),
        cumulants=kap,
        skewness=kap[2] / kap[1] ** 1.5,
        kurtosis=kap[3] / kap[1] ** 2,
    )


def conditional_moment(params, n, x0):
    """``m_n(x0) = int_0^{x0} x^n f(x) dx`` via lower incomplete gamma functions."""
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    if not x0 > 0:
        raise ValueError("x0 must be positive")
    mix = mixture(params)
    return float(sum(
        w * lower_incomplete_gamma(n + 1, r * x0) / r ** n
        for w, r in zip(mix.weights, mix.rates)
    ))


def conditional_mgf(params, t, x0):
    """``int_0^{x0} e^{t x} f(x) dx``, for ``t < lambda1``."""
    p = as_gwed(params)
    if t >= p.lambda1:
        raise DomainError(f"conditional mgf requires t < lambda1 = {p.lambda1:g}")
    if not x0 > 0:
        raise ValueError("x0 must be positive")
    mix = mixture(p)
    d = mix.rates - t
    return float(np.sum(mix.weights * mix.rates * -np.expm1(-d * x0) / d))


def scalar_pdf_cdf(params):
    """Fast scalar closures ``(pdf, cdf)`` for use inside quadrature loops."""
    p = as_gwed(params)
    mix = mixture(p)
    terms = list(zip(mix.weights.tolist(), mix.rates.tolist()))
    l1, s_, th, K = p.lambda1, p.s, p.theta, mix.k_const
    exp, expm1 = math.exp, math.expm1

    def f(x):
        if x <= 0.0:
            return 0.0
        e = exp(-s_ * x)
        g = exp(-l1 * x)
        return K * g * -expm1(-s_ * x) * (1.0 - th * e * (1.0 - 2.0 * g))

    def F(x):
        if x <= 0.0:
            return 0.0
        lower = sum(w * -expm1(-r * x) for w, r in terms)
        if lower <= 0.5:
            return lower
        return 1.0 - sum(w * exp(-r * x) for w, r in terms)

    return f, F


def _check_pwm_orders(s, r):
    for name, v in (("s", s), ("r", r)):
        if int(v) != v or not 0 <= v <= PWM_MAX_ORDER:
            raise ValueError(f"{name} must be an integer in [0, {PWM_MAX_ORDER}], got {v!r}")


def pwm(params, s, r, *, epsabs=DEFAULT_EPSABS, epsrel=DEFAULT_EPSREL):
    """Probability weighted moment ``E[X^s F(X)^r]`` by adaptive quadrature."""
    _check_pwm_orders(s, r)
    p = as_gwed(params)
    f, F = scalar_pdf_cdf(p)

    def integrand(x):
        return x ** s * F(x) ** r * f(x)

    return integrate_adaptive(integrand, 0.0, math.inf, epsabs=epsabs, epsrel=epsrel,
                              scale=1.0 / p.lambda1)


def pwm_closed_form(params, s, r):
    """Exact ``E[X^s F(X)^r]`` for integer ``r`` by expanding into exponentials.

    With ``S(x) = sum_j w_j e^{-r_j x}``, ``F^r f = sum_k C(r,k) (-S)^k f`` is a
    finite sum of terms ``c e^{-mu x}``, each integrating to ``c s! / mu^{s+1}``.
    """
    _check_pwm_orders(s, r)
    mix = mixture(params)
    w = mix.weights
    rates = mix.rates
    total = 0.0
    fact = math.factorial(int(s))
    for k in range(int(r) + 1):
        outer = math.comb(int(r), k) * (-1.0) ** k
        # S^k f expanded over ordered index tuples
        for idx in product(range(5), repeat=k):
            coef = outer
            mu = 0.0
            for j in idx:
                coef *= w[j]
                mu += rates[j]
            tot = mu + rates
            total += coef * float(np.sum(w * rates * fact / tot ** (s + 1)))
    return total
