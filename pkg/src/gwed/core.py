"""Closed-form generalized weighted exponential distribution (GWED).

The density is

    f(x) = K e^{-l1 x} (1 - e^{-s x}) [1 - theta e^{-s x} (1 - 2 e^{-l1 x})],

with ``s = lambda2 * alpha`` and ``K = lambda1 / B`` where ``B = P(alpha X1 > X2)``
is the selection probability of the underlying FGM-coupled exponential pair.
Note that ``lambda2`` and ``alpha`` enter only through their product ``s``.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import _kernels
from .errors import DegenerateParameterError, DomainError, ParameterError

#: Selection probabilities at or below this are rejected as degenerate.
MIN_SELECTION_PROB = 1e-12

PARAM_NAMES = ("lambda1", "lambda2", "alpha", "theta")


def selection_probability(lambda1, s, theta):
    """``B = P(alpha X1 > X2)`` as a function of ``lambda1``, ``s = lambda2*alpha``
    and ``theta``.

    Evaluated in the factored form ``rho/(1+rho) * [1 + theta (rho-1)/((2+rho)(1+2rho))]``
    with ``rho = s / lambda1``, which avoids the cancellation of the
    three-fraction bracket as ``rho -> 0``.
    """
    rho = s / lambda1
    return rho / (1.0 + rho) * (1.0 + theta * (rho - 1.0) / ((2.0 + rho) * (1.0 + 2.0 * rho)))


def _check_positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class GwedParams:
    """Validated parameter vector ``(lambda1, lambda2, alpha, theta)``."""

    lambda1: float
    lambda2: float
    alpha: float
    theta: float

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "alpha"):
            _check_positive(name, getattr(self, name))
            object.__setattr__(self, name, float(getattr(self, name)))
        th = self.theta
        if not (isinstance(th, (int, float, np.floating, np.integer)) and -1.0 <= th <= 1.0):
            raise ParameterError(f"theta must lie in [-1,1], got {th!r}")
        object.__setattr__(self, "theta", float(th))
        b = selection_probability(self.lambda1, self.lambda2 * self.alpha, self.theta)
        if not b > MIN_SELECTION_PROB:
            raise DegenerateParameterError(
                f"selection probability P(alpha X1 > X2) = {b:.3g} vanishes; "
                "lambda2*alpha is too small relative to lambda1"
            )

    @classmethod
    def from_sequence(cls, values):
        values = [float(v) for v in values]
        if len(values) != 4:
            raise ParameterError(f"expected 4 parameters (lambda1, lambda2, alpha, theta), got {len(values)}")
        return cls(*values)

    @property
    def s(self):
        """The identifiable product ``lambda2 * alpha``."""
        return self.lambda2 * self.alpha

    @property
    def rho(self):
        return self.s / self.lambda1

    @property
    def selection_probability(self):
        return selection_probability(self.lambda1, self.s, self.theta)

    def as_gwed(self):
        return self

    def as_array(self):
        return np.array([self.lambda1, self.lambda2, self.alpha, self.theta])

    def to_dict(self):
        return dict(zip(PARAM_NAMES, self.as_array().tolist()))


@dataclass(frozen=True)
class WedParams:
    """Two-parameter weighted exponential distribution ``(alpha, lam)``.

    ``f(x) = (alpha+1)/alpha * lam e^{-lam x} (1 - e^{-alpha lam x})``.
    """

    alpha: float
    lam: float

    def __post_init__(self):
        _check_positive("alpha", self.alpha)
        _check_positive("lambda", self.lam)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "lam", float(self.lam))

    def as_gwed(self):
        return GwedParams(self.lam, self.lam, self.alpha, 0.0)

    def as_array(self):
        return np.array([self.alpha, self.lam])

    def to_dict(self):
        return {"alpha": self.alpha, "lambda": self.lam}


def as_gwed(params):
    """Coerce GwedParams, WedParams or a 4-sequence to :class:`GwedParams`."""
    if isinstance(params, (GwedParams, WedParams)):
        return params.as_gwed()
    return GwedParams.from_sequence(params)


@dataclass(frozen=True)
class GradientAux:
    """Shared subexpressions ``A`` and ``B`` of the likelihood gradient.

    ``B`` is the selection probability and ``A = -dB/ds / lambda1``, so that
    ``dB/dlambda1 = s A`` and ``dB/ds = -lambda1 A``.
    """

    A: float
    B: float


def gradient_aux(params):
    p = as_gwed(params)
    l1, s, th = p.lambda1, p.s, p.theta
    A = -1.0 / (l1 + s) ** 2 + 2.0 * th * (
        1.0 / (2.0 * l1 + s) ** 2 + 1.0 / (l1 + 2.0 * s) ** 2 - 1.0 / (l1 + s) ** 2
    )
    return GradientAux(A=A, B=p.selection_probability)


def k_constant(params):
    """Normalizing constant ``K = lambda1 / B``."""
    p = as_gwed(params)
    return p.lambda1 / p.selection_probability


@dataclass(frozen=True)
class MixtureRepresentation:
    """Signed mixture of five exponentials: ``f = sum_j w_j r_j e^{-r_j x}``."""

    weights: np.ndarray
    rates: np.ndarray
    k_const: float

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        vals = (self.weights * self.rates * np.exp(-self.rates * x[..., None])).sum(axis=-1)
        return _shape_like(x, np.where(x >= 0, vals, 0.0))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        vals = (self.weights * -np.expm1(-self.rates * np.maximum(x, 0.0)[..., None])).sum(axis=-1)
        return _shape_like(x, vals)


def mixture(params):
    """Signed-mixture weights and rates of the GWED density.

    Rates are ``(l1, l1+s, 2 l1+s, l1+2s, 2(l1+s))``; weights sum to one.
    """
    p = as_gwed(params)
    l1, s, th = p.lambda1, p.s, p.theta
    B = p.selection_probability
    K = l1 / B
    rates = np.array([l1, l1 + s, 2.0 * l1 + s, l1 + 2.0 * s, 2.0 * (l1 + s)])
    weights = np.array([
        1.0 / B,
        -K * (1.0 + th) / (l1 + s),
        2.0 * K * th / (2.0 * l1 + s),
        K * th / (l1 + 2.0 * s),
        -K * th / (l1 + s),
    ])
    weights.setflags(write=False)
    rates.setflags(write=False)
    return MixtureRepresentation(weights=weights, rates=rates, k_const=K)


def _shape_like(x, vals):
    vals = np.asarray(vals, dtype=float)
    if np.ndim(x) == 0:
        return float(vals.reshape(-1)[0])
    return vals.reshape(np.shape(x))


def pdf(params, x):
    """GWED density, evaluated directly in product form."""
    p = as_gwed(params)
    x = np.asarray(x, dtype=float)
    xc = np.maximum(x, 0.0)
    K = k_constant(p)
    e = np.exp(-p.s * xc)
    vals = K * np.exp(-p.lambda1 * xc) * -np.expm1(-p.s * xc) * (
        1.0 - p.theta * e * (1.0 - 2.0 * np.exp(-p.lambda1 * xc))
    )
    return _shape_like(x, np.where(x > 0, vals, 0.0))


def logpdf(params, x):
    p = as_gwed(params)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        xc = np.maximum(x, 0.0)
        e = np.exp(-p.s * xc)
        vals = (np.log(k_constant(p)) - p.lambda1 * xc + np.log(-np.expm1(-p.s * xc))
                + np.log1p(-p.theta * e * (1.0 - 2.0 * np.exp(-p.lambda1 * xc))))
    return _shape_like(x, np.where(x > 0, vals, -np.inf))


def cdf_and_survival(params, x):
    """Return ``(cdf, survival)`` evaluated together.

    The lower-tail value is summed from one-minus-exponential terms, the
    upper tail from the exponentials directly; whichever is below one half is
    used and the other is its complement, so neither tail loses precision.
    """
    mix = mixture(params)
    x = np.asarray(x, dtype=float)
    c, s = _kernels.mixture_cdf_sf(x, mix.weights, mix.rates)
    return _shape_like(x, c), _shape_like(x, s)


def cdf(params, x):
    return cdf_and_survival(params, x)[0]


def survival(params, x):
    return cdf_and_survival(params, x)[1]


def hazard(params, x):
    """Hazard rate ``f / (1 - F)``.

    Numerator and denominator are both multiplied by ``e^{lambda1 x}`` before
    division, so the ratio stays accurate deep in the tail where the survival
    function itself underflows. The limit as ``x -> inf`` is ``lambda1``.
    """
    p = as_gwed(params)
    mix = mixture(p)
    x = np.asarray(x, dtype=float)
    xc = np.maximum(x, 0.0)
    e = np.exp(-p.s * xc)
    num = mix.k_const * -np.expm1(-p.s * xc) * (1.0 - p.theta * e * (1.0 - 2.0 * np.exp(-p.lambda1 * xc)))
    den = (mix.weights * np.exp(-(mix.rates - p.lambda1) * xc[..., None])).sum(axis=-1)
    return _shape_like(x, np.where(x > 0, num / den, 0.0))


def quantile(params, u):
    """Inverse cdf by safeguarded Newton iteration on a bracket.

    Lower quantiles solve ``F(x) = u``; upper quantiles solve
    ``log S(x) = log(1 - u)`` so the far tail is resolved to full precision.

    Raises
    ------
    DomainError
        If any ``u`` is outside ``[0, 1)``; ``u = 1`` has an infinite quantile.
    """
    u = np.asarray(u, dtype=float)
    if np.any(~(u >= 0.0)) or np.any(u >= 1.0):
        raise DomainError("quantile requires 0 <= u < 1 (u = 1 maps to an infinite quantile)")
    mix = mixture(params)
    return _shape_like(u, _kernels.mixture_quantile(u, mix.weights, mix.rates))


quantile_numeric = quantile


def wed_pdf(alpha, lam, x):
    """Gupta-Kundu weighted exponential density, written out independently."""
    x = np.asarray(x, dtype=float)
    xc = np.maximum(x, 0.0)
    vals = (alpha + 1.0) / alpha * lam * np.exp(-lam * xc) * -np.expm1(-alpha * lam * xc)
    return _shape_like(x, np.where(x > 0, vals, 0.0))


# ---------------------------------------------------------------------------
# hidden truncation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HiddenTruncationModel:
    """Joint model of ``(Z, Y)`` whose conditional law ``Z | Y <= alpha`` is the GWED."""

    params: GwedParams
    truncation_probability: float = field(init=False)

    def __post_init__(self):
        p = self.params
        object.__setattr__(self, "truncation_probability",
                           selection_probability(p.lambda1, p.s, p.theta))

    def joint_pdf(self, z, y):
        p = self.params
        l1, l2, th = p.lambda1, p.lambda2, p.theta
        z = np.asarray(z, dtype=float)
        y = np.asarray(y, dtype=float)
        val = l1 * l2 * z * np.exp(-(l1 + l2 * y) * z) * (
            1.0 + th * (1.0 - 2.0 * np.exp(-l1 * z)) * (1.0 - 2.0 * np.exp(-l2 * y * z))
        )
        return np.where((z > 0) & (y > 0), val, 0.0)

    def marginal_y_pdf(self, y):
        p = self.params
        l1, l2, th = p.lambda1, p.lambda2, p.theta
        y = np.asarray(y, dtype=float)
        val = l1 * l2 * (
            (1.0 + 2.0 * th) / (l1 + l2 * y) ** 2
            - 2.0 * th / (l1 + 2.0 * l2 * y) ** 2
            - 2.0 * th / (2.0 * l1 + l2 * y) ** 2
        )
        return np.where(y > 0, val, 0.0)

    def truncated_joint_integral(self, z):
        """``int_0^alpha f_{Z,Y}(z, y) dy`` in closed form."""
        p = self.params
        l1, s, th = p.lambda1, p.s, p.theta
        z = np.asarray(z, dtype=float)
        e1 = np.exp(-l1 * z)
        e2 = np.exp(-2.0 * l1 * z)
        om1 = -np.expm1(-s * z)
        om2 = -np.expm1(-2.0 * s * z)
        return l1 * ((1.0 + th) * e1 * om1 - th * e1 * om2 - 2.0 * th * e2 * om1 + 2.0 * th * e2 * om2)

    def conditional_pdf(self, x):
        """Density of ``Z`` given ``Y <= alpha``."""
        return self.truncated_joint_integral(x) / self.truncation_probability


def hidden_truncation(params):
    return HiddenTruncationModel(as_gwed(params))
