"""Weighted distributions built from two marginals and a polynomial copula.

A copula of the form ``C(u, v) = sum_i gamma_i u^{a_i} v^{b_i}`` coupling
``X1 ~ F1`` and ``X2 ~ F2`` gives ``X = X1 | alpha X1 > X2`` the density

    f_w(x) = f1(x) w(x) / E[w(X1)],
    w(x) = sum_i gamma_i a_i F1(x)^{a_i - 1} F2(alpha x)^{b_i}.

Only positive-support marginals are handled; integrals run over ``[0, inf)``.
"""
from dataclasses import dataclass
import math
from typing import Callable

import numpy as np

from .errors import DegenerateParameterError, ParameterError
from .numerics import DEFAULT_EPSABS, DEFAULT_EPSREL, integrate_adaptive

_DENSITY_GRID = (np.arange(101) + 0.5) / 101.0
_DENSITY_FLOOR = -1e-12


@dataclass(frozen=True)
class Marginal:
    """A continuous distribution on the positive half-line."""

    pdf: Callable
    cdf: Callable
    params: tuple
    scale: float = 1.0
    name: str = ""


def exponential_marginal(rate):
    if not rate > 0:
        raise ParameterError(f"rate must be positive, got {rate!r}")
    rate = float(rate)
    return Marginal(
        pdf=lambda x: rate * np.exp(-rate * np.asarray(x, dtype=float)),
        cdf=lambda x: -np.expm1(-rate * np.asarray(x, dtype=float)),
        params=(rate,),
        scale=1.0 / rate,
        name=f"exponential({rate:g})",
    )


@dataclass(frozen=True)
class FgmParams:
    theta: float

    def __post_init__(self):
        if not -1.0 <= self.theta <= 1.0:
            raise ParameterError(f"theta must lie in [-1,1], got {self.theta!r}")


@dataclass(frozen=True)
class CopulaExpansion:
    """Coefficient triples ``(gamma, a, b)`` of a polynomial copula.

    Zero-``gamma`` terms are dropped. Construction checks that ``C(1, 1) = 1``
    and that the copula density is nonnegative on a 101 x 101 interior grid.
    """

    terms: tuple

    def __post_init__(self):
        kept = []
        for g, a, b in self.terms:
            if not (a > 0 and b > 0):
                raise ParameterError(f"exponents must be positive, got a={a!r}, b={b!r}")
            if g != 0:
                kept.append((float(g), float(a), float(b)))
        if not kept:
            raise ParameterError("copula expansion has no nonzero terms")
        object.__setattr__(self, "terms", tuple(kept))
        corner = sum(g for g, _, _ in kept)
        if abs(corner - 1.0) > 1e-12:
            raise ParameterError(f"C(1,1) must equal 1, got {corner!r}")
        u, v = np.meshgrid(_DENSITY_GRID, _DENSITY_GRID, indexing="ij")
        dens = self.density(u, v)
        if dens.min() < _DENSITY_FLOOR:
            raise ParameterError(f"copula density is negative somewhere (min {dens.min():.3g})")

    @property
    def p(self):
        return len(self.terms)

    def cdf(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return sum(g * u ** a * v ** b for g, a, b in self.terms)

    def density(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return sum(g * a * b * u ** (a - 1.0) * v ** (b - 1.0) for g, a, b in self.terms)


def fgm_expansion(theta):
    """Four-term expansion of ``C(u,v) = uv[1 + theta(1-u)(1-v)]``."""
    if isinstance(theta, FgmParams):
        theta = theta.theta
    FgmParams(theta)
    t = float(theta)
    return CopulaExpansion(((1.0 + t, 1.0, 1.0), (-t, 1.0, 2.0), (-t, 2.0, 1.0), (t, 2.0, 2.0)))


def weight_function(expansion, m1, m2, alpha, x):
    """``w(x) = sum_i gamma_i a_i F1(x)^{a_i-1} F2(alpha x)^{b_i}``."""
    x = np.asarray(x, dtype=float)
    F1 = m1.cdf(x)
    F2 = m2.cdf(alpha * x)
    out = sum(g * a * F1 ** (a - 1.0) * F2 ** b for g, a, b in expansion.terms)
    return float(out) if np.ndim(out) == 0 else out


def normalizer(expansion, m1, m2, alpha, *, epsabs=DEFAULT_EPSABS, epsrel=DEFAULT_EPSREL):
    """Selection probability ``P(alpha X1 > X2) = E[w(X1)]`` by quadrature.

    Raises
    ------
    QuadratureError
        If the quadrature does not converge.
    DegenerateParameterError
        If the result is not strictly positive.
    """
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha!r}")

    def integrand(x):
        return float(weight_function(expansion, m1, m2, alpha, x) * m1.pdf(x))

    val = integrate_adaptive(integrand, 0.0, math.inf, epsabs=epsabs, epsrel=epsrel, scale=m1.scale)
    if not val > 0:
        raise DegenerateParameterError(f"normalizer is not positive ({val!r})")
    return min(val, 1.0)


def weighted_pdf(expansion, m1, m2, alpha, x, *, norm=None):
    """Weighted density ``f1(x) w(x) / E[w(X1)]``.

    ``norm`` may carry a precomputed :func:`normalizer` value to avoid
    repeating the quadrature for many evaluations.
    """
    if norm is None:
        norm = normalizer(expansion, m1, m2, alpha)
    x = np.asarray(x, dtype=float)
    xc = np.maximum(x, 0.0)
    vals = m1.pdf(xc) * weight_function(expansion, m1, m2, alpha, xc) / norm
    vals = np.where(x > 0, vals, 0.0)
    return float(vals) if np.ndim(vals) == 0 else vals
