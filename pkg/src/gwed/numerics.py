"""Shared numerical plumbing: adaptive quadrature, the lower incomplete gamma
function and central finite differences."""
import math
import warnings

import numpy as np
from scipy import integrate, special

from .errors import QuadratureError

DEFAULT_EPSABS = 1e-10
DEFAULT_EPSREL = 1e-10
TAIL_FRACTION = 1e-16


def _scan_tail(f, a, scale):
    """Find a cutoff ``T`` past the integrand's bulk.

    Evaluates ``f`` on ``a + scale * 2**k`` and returns the first point after
    the running peak where ``|f|`` has dropped below ``TAIL_FRACTION * peak``
    for three consecutive samples, together with the sampled abscissae that
    precede it (used as quadrature breakpoints).
    """
    pts = a + scale * np.exp2(np.arange(-30, 64))
    peak = 0.0
    quiet = 0
    for i, x in enumerate(pts):
        v = abs(float(f(x)))
        if not math.isfinite(v):
            raise QuadratureError(f"integrand is not finite at x={x!r}")
        peak = max(peak, v)
        if peak > 0.0 and v <= TAIL_FRACTION * peak:
            quiet += 1
            if quiet == 3:
                cut = i - 2
                return float(pts[cut]), pts[:cut]
        else:
            quiet = 0
    raise QuadratureError("integrand does not decay on [a, inf)")


def _exponential_tail(f, T, width):
    """Tail mass beyond ``T`` assuming locally exponential decay."""
    fT = float(f(T))
    if fT == 0.0:
        return 0.0
    f2 = float(f(T + width))
    if f2 == 0.0 or abs(f2) >= abs(fT) or np.sign(f2) != np.sign(fT):
        return 0.0
    rate = math.log(fT / f2) / width
    return fT / rate


def integrate_adaptive(f, a=0.0, b=math.inf, *, epsabs=DEFAULT_EPSABS,
                       epsrel=DEFAULT_EPSREL, scale=1.0, limit=2000):
    """Integrate a scalar function on ``[a, b]`` (``b`` may be infinite).

    Finite ranges go straight to QUADPACK. For ``b = inf`` the range is cut
    at the point ``T`` where the integrand falls below 1e-16 of its peak,
    ``[a, T]`` is integrated adaptively with the scan points as breakpoints,
    and an exponential tail estimate is added for ``[T, inf)``.

    Parameters
    ----------
    f : callable
        Scalar integrand.
    a, b : float
        Limits, ``a`` finite.
    epsabs, epsrel : float
        Absolute and relative tolerances.
    scale : float
        Characteristic length of the integrand, used to seed the tail scan.

    Returns
    -------
    float

    Raises
    ------
    QuadratureError
        When QUADPACK reports non-convergence or the integrand never decays.
    """
    if not math.isfinite(a):
        raise ValueError("lower limit must be finite")
    if b == a:
        return 0.0
    tail = 0.0
    points = None
    if math.isinf(b):
        b, pts = _scan_tail(f, a, scale)
        pts = pts[(pts > a) & (pts < b)]
        points = pts[-60:] if pts.size else None
        tail = _exponential_tail(f, b, 0.1 * (b - a))
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel,
                                        limit=limit, points=points)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc).strip()) from exc
    if not math.isfinite(value):
        raise QuadratureError("quadrature produced a non-finite value")
    return value + tail


def lower_incomplete_gamma(a, x):
    """Unregularized lower incomplete gamma ``gamma(a, x) = int_0^x t^{a-1} e^{-t} dt``.

    Integer orders use the finite sum
    ``gamma(n+1, x) = n! (1 - e^{-x} sum_{k<=n} x^k/k!)`` when ``x`` is past
    the mode, and the ascending series otherwise (the finite sum cancels badly
    for small ``x``). Non-integer orders defer to :func:`scipy.special.gammainc`.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return math.gamma(a)
    if float(a).is_integer():
        n = int(a) - 1
        if x > a:
            term = 1.0
            acc = 1.0
            for k in range(1, n + 1):
                term *= x / k
                acc += term
            return math.factorial(n) * -math.expm1(math.log(acc) - x)
        return _ascending(a, x)
    return float(special.gammainc(a, x) * special.gamma(a))


def _ascending(a, x):
    # gamma(a, x) = x^a e^{-x} sum_k x^k / (a (a+1) ... (a+k))
    term = 1.0 / a
    acc = term
    k = 0
    while True:
        k += 1
        term *= x / (a + k)
        acc += term
        if term < 1e-17 * acc or k > 10000:
            break
    return math.exp(a * math.log(x) - x) * acc


def central_gradient(f, x, steps):
    """Central-difference gradient of scalar ``f`` with per-coordinate steps."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i, h in enumerate(steps):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def hessian_from_gradient(grad, x, steps):
    """Symmetrized central-difference Jacobian of a gradient function."""
    x = np.asarray(x, dtype=float)
    k = x.size
    H = np.empty((k, k))
    for i, h in enumerate(steps):
        e = np.zeros_like(x)
        e[i] = h
        H[:, i] = (np.asarray(grad(x + e)) - np.asarray(grad(x - e))) / (2.0 * h)
    return 0.5 * (H + H.T)
