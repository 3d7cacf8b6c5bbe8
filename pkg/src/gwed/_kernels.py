"""Hot numeric kernels, each in two implementations.

``*_loop`` functions are written as explicit element loops and compiled with
numba when it is available; ``*_vec`` functions are the pure-numpy
equivalents. The public names at the bottom of the module are bound to one
or the other according to :mod:`gwed._accel`. Both paths are kept in sync by
``tests/test_kernels.py``.

Every mixture kernel takes ``weights`` and ``rates`` arrays of a signed
exponential mixture whose first rate is the smallest (the tail rate).
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

_MAX_BRACKET_DOUBLINGS = 2100
_MAX_NEWTON_ITER = 200


# ---------------------------------------------------------------------------
# mixture cdf / survival
# ---------------------------------------------------------------------------

# Below x * max(rate) < _SMALL_X the lower tail is summed from its Taylor
# series: the first-order terms cancel exactly, so the direct sum is noise there.
_SMALL_X = 1e-3
_SMALL_ORDER = 8


@njit
def _small_x_coefficients(weights, rates):
    # coef[k] multiplies x^k, k = 2 .. _SMALL_ORDER - 1
    coef = np.zeros(_SMALL_ORDER)
    fact = 1.0
    for k in range(1, _SMALL_ORDER):
        fact *= k
        acc = 0.0
        for j in range(weights.shape[0]):
            acc += weights[j] * rates[j] ** k
        coef[k] = (-1.0) ** (k + 1) * acc / fact
    coef[1] = 0.0
    return coef


@njit
def _cdf_sf_loop(x, weights, rates, cdf, sf):
    m = weights.shape[0]
    coef = _small_x_coefficients(weights, rates)
    x_small = _SMALL_X / rates.max()
    for i in range(x.shape[0]):
        xi = x[i]
        if not xi > 0.0:
            cdf[i] = 0.0
            sf[i] = 1.0
            continue
        if xi < x_small:
            acc = 0.0
            for k in range(_SMALL_ORDER - 1, 1, -1):
                acc = (acc + coef[k]) * xi
            c = acc * xi
            cdf[i] = min(max(c, 0.0), 1.0)
            sf[i] = 1.0 - cdf[i]
            continue
        lower = 0.0
        upper = 0.0
        for j in range(m):
            lower += weights[j] * (-math.expm1(-rates[j] * xi))
            upper += weights[j] * math.exp(-rates[j] * xi)
        if lower <= 0.5:
            c = lower
            s = 1.0 - lower
        else:
            c = 1.0 - upper
            s = upper
        cdf[i] = min(max(c, 0.0), 1.0)
        sf[i] = min(max(s, 0.0), 1.0)


def _small_x_coefficients_vec(weights, rates):
    k = np.arange(_SMALL_ORDER)
    fact = np.cumprod(np.maximum(k, 1)).astype(float)
    coef = (-1.0) ** (k + 1) * (weights[:, None] * rates[:, None] ** k).sum(axis=0) / fact
    coef[:2] = 0.0
    return coef


def _cdf_sf_vec(x, weights, rates, cdf, sf):
    xc = np.where(x > 0.0, x, 0.0)[:, None]
    lower = (weights * -np.expm1(-rates * xc)).sum(axis=1)
    upper = (weights * np.exp(-rates * xc)).sum(axis=1)
    use_lower = lower <= 0.5
    c = np.where(use_lower, lower, 1.0 - upper)
    s = np.where(use_lower, 1.0 - lower, upper)
    small = x < _SMALL_X / rates.max()
    if np.any(small):
        coef = _small_x_coefficients_vec(weights, rates)
        series = np.polynomial.polynomial.polyval(x[small], coef)
        c[small] = series
        s[small] = 1.0 - series
    pos = x > 0.0
    cdf[:] = np.where(pos, np.clip(c, 0.0, 1.0), 0.0)
    sf[:] = np.where(pos, np.clip(s, 0.0, 1.0), 1.0)


# ---------------------------------------------------------------------------
# quantile: safeguarded Newton on a bracket
# ---------------------------------------------------------------------------

@njit
def _root_fn(x, weights, rates, upper, target, coef, x_small):
    # upper=False: g = F(x) - u,            g' = f(x)
    # upper=True:  g = log q - log S(x),    g' = h(x); S computed scaled by e^{lam1 x}
    lam1 = rates[0]
    m = weights.shape[0]
    if upper:
        t = 0.0
        tf = 0.0
        for j in range(m):
            e = math.exp(-(rates[j] - lam1) * x)
            t += weights[j] * e
            tf += weights[j] * rates[j] * e
        if t <= 0.0:
            return math.inf, 0.0
        return target + lam1 * x - math.log(t), tf / t
    if x < x_small:
        F = 0.0
        f = 0.0
        for k in range(_SMALL_ORDER - 1, 1, -1):
            F = (F + coef[k]) * x
            f = f * x + k * coef[k]
        return F * x - target, f * x
    F = 0.0
    f = 0.0
    for j in range(m):
        F += weights[j] * (-math.expm1(-rates[j] * x))
        f += weights[j] * rates[j] * math.exp(-rates[j] * x)
    return F - target, f


@njit
def _leading_order_start(u, coef):
    for k in range(2, _SMALL_ORDER):
        if coef[k] > 0.0:
            return (u / coef[k]) ** (1.0 / k)
    return -1.0


@njit
def _quantile_one(u, weights, rates, coef, x_small):
    if not u > 0.0:
        return 0.0
    upper = u > 0.5
    if upper:
        target = math.log(1.0 - u)
    else:
        target = u
    lo = 0.0
    hi = 1.0 / rates[0]
    for _ in range(_MAX_BRACKET_DOUBLINGS):
        g, _d = _root_fn(hi, weights, rates, upper, target, coef, x_small)
        if g >= 0.0:
            break
        lo = hi
        hi *= 2.0
    x = 0.5 * (lo + hi)
    if not upper:
        # leading-order start; bisection alone cannot reach deep lower quantiles
        x0 = _leading_order_start(u, coef)
        if lo < x0 < hi:
            x = x0
    for _ in range(_MAX_NEWTON_ITER):
        g, dg = _root_fn(x, weights, rates, upper, target, coef, x_small)
        if g == 0.0:
            return x
        if g < 0.0:
            lo = x
        else:
            hi = x
        nxt = x - g / dg if dg > 0.0 else -1.0
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= 2.2e-16 * x or hi - lo <= 4.4e-16 * hi:
            return nxt
        x = nxt
    return x


@njit
def _quantile_loop(u, weights, rates, out):
    coef = _small_x_coefficients(weights, rates)
    x_small = _SMALL_X / rates.max()
    for i in range(u.shape[0]):
        out[i] = _quantile_one(u[i], weights, rates, coef, x_small)


def _root_fn_vec(x, weights, rates, upper, target, coef):
    lam1 = rates[0]
    xc = x[:, None]
    g = np.empty_like(x)
    dg = np.empty_like(x)
    if upper.any():
        e = np.exp(-(rates - lam1) * xc[upper])
        t = (weights * e).sum(axis=1)
        tf = (weights * rates * e).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            g[upper] = np.where(t > 0.0, target[upper] + lam1 * x[upper] - np.log(t), np.inf)
            dg[upper] = np.where(t > 0.0, tf / t, 0.0)
    low = ~upper
    if low.any():
        xl = xc[low]
        F = (weights * -np.expm1(-rates * xl)).sum(axis=1)
        f = (weights * rates * np.exp(-rates * xl)).sum(axis=1)
        small = xl[:, 0] < _SMALL_X / rates.max()
        if small.any():
            xs = xl[small, 0]
            F[small] = np.polynomial.polynomial.polyval(xs, coef)
            f[small] = np.polynomial.polynomial.polyval(xs, np.polynomial.polynomial.polyder(coef))
        g[low] = F - target[low]
        dg[low] = f
    return g, dg


def _quantile_vec(u, weights, rates, out):
    active = u > 0.0
    out[:] = 0.0
    if not active.any():
        return
    ua = u[active]
    coef = _small_x_coefficients_vec(weights, rates)
    upper = ua > 0.5
    with np.errstate(divide="ignore"):
        target = np.where(upper, np.log(np.where(upper, 1.0 - ua, 1.0)), ua)
    lo = np.zeros_like(ua)
    hi = np.full_like(ua, 1.0 / rates[0])
    for _ in range(_MAX_BRACKET_DOUBLINGS):
        g, _d = _root_fn_vec(hi, weights, rates, upper, target, coef)
        grow = g < 0.0
        if not grow.any():
            break
        lo = np.where(grow, hi, lo)
        hi = np.where(grow, 2.0 * hi, hi)
    x = 0.5 * (lo + hi)
    k0 = int(np.argmax(coef > 0.0))
    if coef[k0] > 0.0:
        x0 = (ua / coef[k0]) ** (1.0 / k0)
        x = np.where(~upper & (lo < x0) & (x0 < hi), x0, x)
    done = np.zeros(ua.shape, dtype=bool)
    for _ in range(_MAX_NEWTON_ITER):
        g, dg = _root_fn_vec(x, weights, rates, upper, target, coef)
        exact = (g == 0.0) & ~done
        done |= exact
        lo = np.where(~done & (g < 0.0), x, lo)
        hi = np.where(~done & (g > 0.0), x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            nxt = np.where(dg > 0.0, x - g / dg, -1.0)
        bad = ~((lo < nxt) & (nxt < hi))
        nxt = np.where(bad, 0.5 * (lo + hi), nxt)
        fin = (np.abs(nxt - x) <= 2.2e-16 * x) | (hi - lo <= 4.4e-16 * hi)
        x = np.where(done, x, nxt)
        done |= fin
        if done.all():
            break
    out[active] = x


# ---------------------------------------------------------------------------
# FGM conditional inverse: solve dC/du(u, v) = w for v
# ---------------------------------------------------------------------------

@njit
def _fgm_conditional_loop(u, w, theta, out):
    for i in range(u.shape[0]):
        a = theta * (1.0 - 2.0 * u[i])
        b = 1.0 + a
        disc = b * b - 4.0 * a * w[i]
        if disc < 0.0:
            disc = 0.0
        # conjugate form of the root in [0, 1]; no cancellation as a -> 0
        out[i] = 2.0 * w[i] / (b + math.sqrt(disc))


def _fgm_conditional_vec(u, w, theta, out):
    a = theta * (1.0 - 2.0 * u)
    b = 1.0 + a
    disc = np.maximum(b * b - 4.0 * a * w, 0.0)
    out[:] = 2.0 * w / (b + np.sqrt(disc))


# ---------------------------------------------------------------------------
# log-likelihood data sums and their derivatives
# ---------------------------------------------------------------------------

@njit
def _loglik_sums_loop(x, lam1, s, theta):
    sum_log = 0.0
    sum_x = 0.0
    d_lam1 = 0.0
    d_s = 0.0
    d_theta = 0.0
    for i in range(x.shape[0]):
        xi = x[i]
        # one expm1 gives 1 - e^{-sx}, e^{-sx} and 1/expm1(sx) = e/(1-e)
        om = -math.expm1(-s * xi)
        e = 1.0 - om
        gl = math.exp(-lam1 * xi)
        g = 1.0 - 2.0 * gl
        teg = theta * e * g
        inv = 1.0 / (1.0 - teg)
        sum_log += math.log(om) + math.log1p(-teg)
        sum_x += xi
        d_lam1 -= 2.0 * theta * xi * e * gl * inv
        d_s += xi * e / om + theta * xi * e * g * inv
        d_theta -= e * g * inv
    return sum_log, sum_x, d_lam1, d_s, d_theta


def _loglik_sums_vec(x, lam1, s, theta):
    om = -np.expm1(-s * x)
    e = 1.0 - om
    gl = np.exp(-lam1 * x)
    g = 1.0 - 2.0 * gl
    teg = theta * e * g
    inv = 1.0 / (1.0 - teg)
    with np.errstate(divide="ignore", invalid="ignore"):
        sum_log = np.sum(np.log(om) + np.log1p(-teg))
        d_s = np.sum(x * e / om + theta * x * e * g * inv)
    return (
        float(sum_log),
        float(np.sum(x)),
        float(np.sum(-2.0 * theta * x * e * gl * inv)),
        float(d_s),
        float(np.sum(-e * g * inv)),
    )


# ---------------------------------------------------------------------------
# public wrappers (backend chosen at import time)
# ---------------------------------------------------------------------------

_IMPLS = {
    "numba": (_cdf_sf_loop, _quantile_loop, _fgm_conditional_loop, _loglik_sums_loop),
    "numpy": (_cdf_sf_vec, _quantile_vec, _fgm_conditional_vec, _loglik_sums_vec),
}


# Kernels where the compiled loop wins (benchmarks/bench_kernels.py). The
# log-likelihood sums are transcendental-bound and numpy's vectorized
# exp/log beat numba's scalar libm calls, so automatic dispatch keeps numpy.
NUMBA_PREFERRED = frozenset({0, 1, 2})


def _pick(backend, kernel=None):
    if backend is None:
        auto = USE_NUMBA and (kernel is None or kernel in NUMBA_PREFERRED)
        return _IMPLS["numba" if auto else "numpy"]
    if backend not in _IMPLS:
        raise ValueError(f"backend must be 'numba' or 'numpy', got {backend!r}")
    return _IMPLS[backend]


def mixture_cdf_sf(x, weights, rates, backend=None):
    """Return ``(cdf, survival)`` arrays of a signed exponential mixture."""
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdf = np.empty_like(x)
    sf = np.empty_like(x)
    _pick(backend)[0](x, weights, rates, cdf, sf)
    return cdf, sf


def mixture_quantile(u, weights, rates, backend=None):
    """Invert the mixture cdf elementwise; ``u`` must lie in [0, 1)."""
    u = np.ascontiguousarray(u, dtype=np.float64).ravel()
    out = np.empty_like(u)
    _pick(backend)[1](u, weights, rates, out)
    return out


def fgm_conditional(u, w, theta, backend=None):
    """Second FGM coordinate ``v`` with ``dC/du(u, v) = w``."""
    u = np.ascontiguousarray(u, dtype=np.float64).ravel()
    w = np.ascontiguousarray(w, dtype=np.float64).ravel()
    out = np.empty_like(u)
    _pick(backend)[2](u, w, float(theta), out)
    return out


def loglik_sums(x, lam1, s, theta, backend=None):
    """Data-dependent sums of the GWED log-likelihood and its gradient.

    Returns ``(sum_log, sum_x, d_lam1, d_s, d_theta)`` where ``sum_log`` is
    ``sum(log(1 - e^{-s x}) + log(1 - theta e^{-s x}(1 - 2 e^{-lam1 x})))``
    and the ``d_*`` entries are its partial derivatives in ``lam1``,
    ``s = lambda2 * alpha`` and ``theta``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    return _pick(backend, 3)[3](x, float(lam1), float(s), float(theta))
