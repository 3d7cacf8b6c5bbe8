"""Maximum-likelihood fitting of the GWED and its WED submodel.

Identifiability
---------------
The GWED density depends on ``lambda2`` and ``alpha`` only through
``s = lambda2 * alpha``. The likelihood is therefore flat along
``lambda2 * alpha = const`` and the 4 x 4 information matrix is singular.
The optimizer works in the identifiable coordinates
``(log lambda1, log s, atanh theta)``. A fitted ``s`` is split back into
``(lambda2, alpha)`` keeping the ``lambda2 / alpha`` ratio of the winning
start, which is where a four-coordinate quasi-Newton run would also
stop. Standard errors for ``lambda1`` and ``theta`` (and ``s``) come from
the 3 x 3 reduced information. ``lambda2`` and ``alpha`` get infinite
standard errors and the full covariance is reported as unavailable.
"""
from dataclasses import dataclass, field
from itertools import product
import math
from typing import NamedTuple, Optional

import numpy as np
from scipy import optimize

from ._kernels import loglik_sums
from .core import PARAM_NAMES, GwedParams, WedParams, as_gwed, gradient_aux, mixture
from .errors import DomainError, ParameterError
from .numerics import hessian_from_gradient

MIN_FIT_SIZE = 5
GRAD_TOL = 1e-7
MAX_ITER = 500
BOUNDARY_THETA = 1.0 - 1e-4
BOUNDARY_RHO = 1e-6
HESSIAN_STEP = 1e-4
GRADIENT_CHECK_STEP = 1e-5
SINGULAR_RTOL = 1e-8
MOMENT_SOLVE_TOL = 1e-6

_ATANH_BOUND = 12.0
_LOG_SPAN = 30.0
_GRID_RATES = (0.5, 1.0, 2.0)
_GRID_ALPHAS = (0.25, 1.0, 4.0)
_GRID_THETAS = (-0.5, 0.0, 0.5)

WED_PARAM_NAMES = ("alpha", "lambda")


def as_data(data, min_size=1):
    """Validate observations: a 1-D array of finite positive reals."""
    x = np.ascontiguousarray(data, dtype=np.float64).reshape(-1)
    if x.size < min_size:
        raise DomainError(f"need at least {min_size} observations, got {x.size}")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("observations must be finite and strictly positive")
    return x


# ---------------------------------------------------------------------------
# likelihood and gradient
# ---------------------------------------------------------------------------

def _reduced_loglik_and_grad(lam1, s, theta, x):
    """``l`` and ``(dl/dlambda1, dl/ds, dl/dtheta)`` at ``s = lambda2 * alpha``."""
    n = x.size
    B = GwedParams(lam1, s, 1.0, theta).selection_probability
    aux = gradient_aux((lam1, s, 1.0, theta))
    rho = s / lam1
    # dB/dtheta = 2/(2+rho) + 1/(1+2rho) - 2/(1+rho), combined to avoid
    # cancellation as rho -> 0
    dB_dtheta = rho * (rho - 1.0) / ((1.0 + rho) * (2.0 + rho) * (1.0 + 2.0 * rho))
    sum_log, sum_x, d_l1, d_s, d_th = loglik_sums(x, lam1, s, theta)
    ll = n * (math.log(lam1) - math.log(B)) - lam1 * sum_x + sum_log
    grad = np.array([
        n / lam1 - n * s * aux.A / B - sum_x + d_l1,
        n * lam1 * aux.A / B + d_s,
        -n * dB_dtheta / B + d_th,
    ])
    return (ll if not math.isnan(ll) else -math.inf), grad


def loglik(params, data):
    """Log-likelihood of GWED or WED parameters.

    Computed from the expanded form
    ``n (log lambda1 - log B) - lambda1 sum x + sum log(1 - e^{-s x}) + sum log(1 - theta e^{-s x} g)``
    with ``g = 1 - 2 e^{-lambda1 x}``. Returns ``-inf`` rather than raising
    when an observation has zero density.
    """
    p = as_gwed(params)
    x = as_data(data)
    return _reduced_loglik_and_grad(p.lambda1, p.s, p.theta, x)[0]


def loglik_gradient(params, data):
    """Analytic gradient of :func:`loglik`.

    For :class:`GwedParams` the order is ``(lambda1, lambda2, alpha, theta)``;
    for :class:`WedParams` it is ``(alpha, lambda)``.
    """
    x = as_data(data)
    if isinstance(params, WedParams):
        lam, a = params.lam, params.alpha
        _, (g1, gs, _) = _reduced_loglik_and_grad(lam, lam * a, 0.0, x)
        return np.array([lam * gs, g1 + a * gs])
    p = as_gwed(params)
    _, (g1, gs, gt) = _reduced_loglik_and_grad(p.lambda1, p.s, p.theta, x)
    return np.array([g1, p.alpha * gs, p.lambda2 * gs, gt])


def gradient_check(params, data, rel_step=GRADIENT_CHECK_STEP):
    """Return ``(analytic, finite_difference)`` gradients of the log-likelihood.

    Central differences use a relative step in the transformed coordinates
    (log for positive parameters, atanh for theta).
    """
    x = as_data(data)
    if isinstance(params, WedParams):
        v = params.as_array()
        scale = v.copy()

        def f(z):
            return loglik(WedParams(*z), x)
    else:
        p = as_gwed(params)
        v = p.as_array()
        scale = np.array([p.lambda1, p.lambda2, p.alpha, max(1.0 - p.theta ** 2, 1e-8)])

        def f(z):
            return loglik(GwedParams(*z), x)
    h = rel_step * scale
    fd = np.empty_like(v)
    for i in range(v.size):
        e = np.zeros_like(v)
        e[i] = h[i]
        hi, lo = v + e, v - e
        if i == 3 and not isinstance(params, WedParams):
            hi[3], lo[3] = min(hi[3], 1.0), max(lo[3], -1.0)
        fd[i] = (f(hi) - f(lo)) / (hi[i] - lo[i])
    return loglik_gradient(params, x), fd


# ---------------------------------------------------------------------------
# information
# ---------------------------------------------------------------------------

def _fd_information(grad_fn, v, steps, lower, upper):
    """Negative symmetrized Jacobian of ``grad_fn``, clamping steps into bounds."""
    k = v.size
    H = np.empty((k, k))
    for i in range(k):
        hi = v.copy()
        lo = v.copy()
        hi[i] = min(v[i] + steps[i], upper[i])
        lo[i] = max(v[i] - steps[i], lower[i])
        H[:, i] = (grad_fn(hi) - grad_fn(lo)) / (hi[i] - lo[i])
    return -0.5 * (H + H.T)


def observed_information(params, data, rel_step=HESSIAN_STEP):
    """Observed information (negative Hessian of ``l``) in natural parameters.

    Central differences of the analytic gradient with relative step
    ``rel_step`` in the transformed coordinates; the result is symmetrized.
    For the GWED the matrix is singular (see module docstring); use
    :func:`information_status` to classify it.
    """
    x = as_data(data)
    if isinstance(params, WedParams):
        v = params.as_array()
        return _fd_information(lambda z: loglik_gradient(WedParams(*z), x), v,
                               rel_step * v, [0, 0], [np.inf, np.inf])
    p = as_gwed(params)
    v = p.as_array()
    steps = rel_step * np.array([p.lambda1, p.lambda2, p.alpha, max(1.0 - p.theta ** 2, 1e-8)])
    return _fd_information(lambda z: loglik_gradient(GwedParams(*z), x), v, steps,
                           [0, 0, 0, -1.0], [np.inf, np.inf, np.inf, 1.0])


def reduced_information(params, data, rel_step=HESSIAN_STEP):
    """Observed information in the identifiable parameters ``(lambda1, s, theta)``."""
    x = as_data(data)
    p = as_gwed(params)
    v = np.array([p.lambda1, p.s, p.theta])
    steps = rel_step * np.array([p.lambda1, p.s, max(1.0 - p.theta ** 2, 1e-8)])

    def grad(z):
        return _reduced_loglik_and_grad(z[0], z[1], z[2], x)[1]

    return _fd_information(grad, v, steps, [0, 0, -1.0], [np.inf, np.inf, 1.0])


def information_status(info, scale=None):
    """Classify an information matrix as ``positive_definite``, ``singular``
    or ``indefinite``.

    ``scale`` (the parameter magnitudes) puts the matrix in log coordinates
    before the eigenvalue test so that units do not matter.
    """
    J = np.asarray(info, dtype=float)
    if scale is not None:
        d = np.asarray(scale, dtype=float)
        J = J * np.outer(d, d)
    eig = np.linalg.eigvalsh(J)
    top = np.max(np.abs(eig))
    if not np.all(np.isfinite(eig)) or top == 0:
        return "singular"
    if eig[0] < -SINGULAR_RTOL * top:
        return "indefinite"
    if eig[0] <= SINGULAR_RTOL * top:
        return "singular"
    return "positive_definite"


def _covariance(info, scale):
    status = information_status(info, scale)
    if status != "positive_definite":
        return None, status
    cov = np.linalg.inv(info)
    return 0.5 * (cov + cov.T), status


# ---------------------------------------------------------------------------
# starting values
# ---------------------------------------------------------------------------

def _sample_moments(x, k=4):
    return np.array([np.mean(x ** r) for r in range(1, k + 1)])


def _model_moments(lam1, s, theta, k=4):
    mix = mixture((lam1, s, 1.0, theta))
    return np.array([math.factorial(r) * np.sum(mix.weights / mix.rates ** r) for r in range(1, k + 1)])


def start_grid(data, mean=None):
    """Fixed 3 x 3 x 3 x 3 grid scaled by the sample mean."""
    m = float(np.mean(data)) if mean is None else float(mean)
    return [GwedParams(a / m, b / m, al, th)
            for a, b, al, th in product(_GRID_RATES, _GRID_RATES, _GRID_ALPHAS, _GRID_THETAS)]


class MomentsStart(NamedTuple):
    """``params`` is the moment solution, or the best grid point when
    ``fallback`` is set. ``least_squares`` keeps the least-squares point
    (``None`` if the solver failed) even when it did not solve the system."""

    params: GwedParams
    fallback: bool
    residual: float
    least_squares: Optional[GwedParams] = None


def moments_start(data, *, sample_moments=None):
    """Method-of-moments starting values.

    Solves ``E[X^r] = m_r`` (r = 1..4) by least squares on the relative
    residuals ``E[X^r]/m_r - 1`` in ``(log lambda1, log s, atanh theta)``,
    started from the best grid points. If the residual vector is not driven
    below ``1e-6`` the grid point with the smallest residual is returned with
    ``fallback=True``.

    ``sample_moments`` overrides the four moments computed from ``data``
    (which then only sets the grid scale).
    """
    x = as_data(data, 4)
    m = _sample_moments(x) if sample_moments is None else np.asarray(sample_moments, dtype=float)
    if not np.all(np.isfinite(m)):
        raise DomainError("sample moments are not finite")

    def resid(z):
        try:
            mm = _model_moments(math.exp(z[0]), math.exp(z[1]), math.tanh(z[2]))
        except ParameterError:
            return np.full(4, 1e6)
        r = mm / m - 1.0
        return np.where(np.isfinite(r), r, 1e6)

    grid = start_grid(x, m[0])
    scored = []
    for i, g in enumerate(grid):
        try:
            r = resid(_to_z(g))
        except (OverflowError, ValueError):
            continue
        scored.append((float(r @ r), i, g))
    scored.sort(key=lambda t: (t[0], t[1]))
    best_grid = scored[0]
    shift = np.array([-math.log(m[0])] * 2 + [0])
    lo = np.array([-_LOG_SPAN, -_LOG_SPAN, -_ATANH_BOUND]) + shift
    hi = np.array([_LOG_SPAN, _LOG_SPAN, _ATANH_BOUND]) + shift
    best = None
    for cost, i, g in scored[:5]:
        z0 = np.clip(_to_z(g), lo, hi)
        try:
            sol = optimize.least_squares(resid, z0, bounds=(lo, hi), xtol=1e-15, ftol=1e-15,
                                         gtol=1e-15, max_nfev=400)
        except (ValueError, FloatingPointError):
            continue
        worst = float(np.max(np.abs(sol.fun)))
        if best is None or worst < best[0]:
            best = (worst, sol.x, g)
    lsq = None
    if best is not None:
        try:
            lsq = _from_z(best[1], best[2].lambda2 / best[2].alpha)
        except ParameterError:
            lsq = None
    if lsq is not None and best[0] <= MOMENT_SOLVE_TOL:
        return MomentsStart(lsq, False, best[0], lsq)
    g = best_grid[2]
    return MomentsStart(g, True, float(np.max(np.abs(resid(_to_z(g))))), lsq)


def _wed_moments_start(x):
    """WED start matching mean and variance on a coarse alpha scan."""
    mean, var = float(np.mean(x)), float(np.var(x))
    if not var > 0:
        return WedParams(1.0, 1.5 / mean)
    best = None
    for a in np.geomspace(0.01, 100.0, 81):
        # E X = (1/lam)(1 + 1/(1+a)), Var X = (1/lam^2)(1 + 1/(1+a)^2)
        c1 = 1.0 + 1.0 / (1.0 + a)
        c2 = 1.0 + 1.0 / (1.0 + a) ** 2
        lam = c1 / mean
        err = abs(c2 / lam ** 2 / var - 1.0)
        if best is None or err < best[0]:
            best = (err, WedParams(a, lam))
    return best[1]


# ---------------------------------------------------------------------------
# coordinates
# ---------------------------------------------------------------------------

def _to_z(p):
    return np.array([math.log(p.lambda1), math.log(p.s), math.atanh(np.clip(p.theta, -math.tanh(_ATANH_BOUND),
                                                                            math.tanh(_ATANH_BOUND)))])


def _from_z(z, ratio=1.0):
    lam1, s, th = math.exp(z[0]), math.exp(z[1]), math.tanh(z[2])
    lam2 = math.sqrt(s * ratio)
    return GwedParams(lam1, lam2, s / lam2, th)


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

@dataclass
class FitResult:
    """Outcome of :func:`fit_mle`.

    ``std_errors`` follow ``param_names``. An infinite entry marks a
    parameter that is not identified; NaN marks a suppressed value
    (boundary solution or non-invertible information). ``covariance`` is
    ``None`` unless the full information matrix is positive definite.
    ``reduced_covariance`` is over ``(lambda1, lambda2*alpha, theta)``.
    """

    model: str
    estimates: object
    std_errors: np.ndarray
    covariance: Optional[np.ndarray]
    loglik: float
    converged: bool
    n_evals: int
    start_used: np.ndarray
    grad_norm: float
    boundary: bool = False
    singular_information: bool = False
    reduced_covariance: Optional[np.ndarray] = None
    message: str = ""
    n_obs: int = 0
    start_index: int = 0
    start_label: str = ""
    param_names: tuple = field(default=PARAM_NAMES)

    @property
    def k(self):
        return len(self.param_names)

    @property
    def aic(self):
        return 2.0 * self.k - 2.0 * self.loglik


class _Objective:
    """Negative log-likelihood in transformed coordinates with an eval counter."""

    def __init__(self, x, model):
        self.x = x
        self.model = model
        self.n_evals = 0

    def params(self, z):
        if self.model == "wed":
            return math.exp(z[1]), math.exp(z[1]) * math.exp(z[0]), 0.0
        return math.exp(z[0]), math.exp(z[1]), math.tanh(z[2])

    def value_and_grad(self, z):
        """``(l, dl/dz)``; ``(-inf, 0)`` outside the valid parameter region."""
        self.n_evals += 1
        try:
            lam1, s, th = self.params(z)
            ll, g = _reduced_loglik_and_grad(lam1, s, th, self.x)
        except (ParameterError, OverflowError, ZeroDivisionError):
            return -math.inf, np.zeros(len(z))
        if not math.isfinite(ll) or not np.all(np.isfinite(g)):
            return -math.inf, np.zeros(len(z))
        if self.model == "wed":
            # z = (log alpha, log lambda); lambda1 = lambda, s = alpha * lambda
            return ll, np.array([s * g[1], lam1 * g[0] + s * g[1]])
        return ll, np.array([lam1 * g[0], s * g[1], (1.0 - th * th) * g[2]])

    def neg(self, z):
        ll, g = self.value_and_grad(z)
        if not math.isfinite(ll):
            return 1e300, np.zeros(len(z))
        return -ll, -g


def _polish(obj, z, lo, hi, tol, max_steps=30):
    """Newton refinement with a finite-difference Hessian of the analytic gradient."""
    ll, g = obj.value_and_grad(z)
    for _ in range(max_steps):
        if not math.isfinite(ll) or np.max(np.abs(g)) <= tol:
            break
        steps = HESSIAN_STEP * np.maximum(np.abs(z), 1.0)
        H = hessian_from_gradient(lambda t: obj.value_and_grad(t)[1], z, steps)
        try:
            eig, vec = np.linalg.eigh(H)
        except np.linalg.LinAlgError:
            break
        # Newton step restricted to strictly concave directions; flat or
        # convex directions (a parameter running off to a limit) are left alone
        keep = eig < -1e-10 * max(np.max(np.abs(eig)), 1e-300)
        if not keep.any():
            break
        gp = vec.T @ g
        dz = -(vec[:, keep] @ (gp[keep] / eig[keep]))
        t = 1.0
        improved = False
        while t > 1e-6:
            zn = np.clip(z + t * dz, lo, hi)
            lln, gn = obj.value_and_grad(zn)
            if math.isfinite(lln) and lln >= ll - 1e-12 * abs(ll):
                z, ll, g = zn, lln, gn
                improved = True
                break
            t *= 0.5
        if not improved:
            break
    return z, ll, g


def _run_start(obj, z0, lo, hi, tol):
    z0 = np.clip(z0, lo, hi)
    res = optimize.minimize(obj.neg, z0, jac=True, method="L-BFGS-B", bounds=list(zip(lo, hi)),
                            options={"maxiter": MAX_ITER, "ftol": 1e-15, "gtol": tol * 1e-2,
                                     "maxfun": 4 * MAX_ITER})
    return _polish(obj, res.x, lo, hi, tol)


def _resolve_starts(x, model, start):
    """List of ``(label, GwedParams-or-WedParams)`` starts."""
    if model == "wed":
        m = float(np.mean(x))
        if isinstance(start, WedParams):
            return [("explicit", start)]
        if start not in ("multi", "grid", "moments"):
            return [("explicit", WedParams(*start))]
        starts = []
        if start in ("multi", "moments"):
            starts.append(("moments", _wed_moments_start(x)))
        if start in ("multi", "grid"):
            starts += [(f"grid[{i}]", WedParams(a, r / m))
                       for i, (r, a) in enumerate(product(_GRID_RATES, _GRID_ALPHAS))]
        return starts
    if isinstance(start, (GwedParams, WedParams)):
        return [("explicit", as_gwed(start))]
    if start not in ("multi", "grid", "moments"):
        return [("explicit", GwedParams.from_sequence(start))]
    starts = []
    if start in ("multi", "moments"):
        ms = moments_start(x)
        starts.append(("moments", ms.params))
        if start == "multi" and ms.least_squares is not None:
            starts.append(("moments-lsq", ms.least_squares))
    if start in ("multi", "grid"):
        starts += [(f"grid[{i}]", g) for i, g in enumerate(start_grid(x))]
    if start == "multi":
        wed = fit_mle(x, model="wed", start="multi")
        starts.append(("wed", wed.estimates.as_gwed()))
    return starts


def fit_mle(data, model="gwed", start="multi", tol=GRAD_TOL):
    """Maximum-likelihood fit.

    Parameters
    ----------
    data : array_like
        Positive observations, at least 5.
    model : {"gwed", "wed"}
    start : {"multi", "moments", "grid"} or parameters
        ``multi`` runs the method-of-moments start, the 81-point grid and
        (for the GWED) the WED optimum. The largest maximum wins; ties go to
        the earliest start.
    tol : float
        Convergence threshold on the infinity norm of the log-likelihood
        gradient in transformed coordinates.

    Returns
    -------
    FitResult
    """
    if model not in ("gwed", "wed"):
        raise ValueError(f"model must be 'gwed' or 'wed', got {model!r}")
    x = as_data(data, MIN_FIT_SIZE)
    obj = _Objective(x, model)
    log_scale = -math.log(float(np.mean(x)))
    if model == "wed":
        lo = np.array([-_LOG_SPAN, log_scale - _LOG_SPAN])
        hi = np.array([_LOG_SPAN, log_scale + _LOG_SPAN])
    else:
        lo = np.array([log_scale - _LOG_SPAN, log_scale - _LOG_SPAN, -_ATANH_BOUND])
        hi = np.array([log_scale + _LOG_SPAN, log_scale + _LOG_SPAN, _ATANH_BOUND])

    seen = set()
    best = None
    for idx, (label, p0) in enumerate(_resolve_starts(x, model, start)):
        if model == "wed":
            z0 = np.array([math.log(p0.alpha), math.log(p0.lam)])
        else:
            z0 = _to_z(p0)
        key = tuple(np.round(z0, 9))
        if key in seen:
            continue
        seen.add(key)
        z, ll, g = _run_start(obj, z0, lo, hi, tol)
        if best is None or ll > best[1]:
            best = (z, ll, g, idx, label, p0)
    z, ll, g, idx, label, p0 = best
    return _build_result(x, model, obj, z, ll, g, idx, label, p0, tol)


def _build_result(x, model, obj, z, ll, g, idx, label, p0, tol):
    if not math.isfinite(ll):
        raise DomainError("no start produced a finite log-likelihood")
    if model == "wed":
        est = WedParams(math.exp(z[0]), math.exp(z[1]))
        grad_t = np.asarray(g)
        names = WED_PARAM_NAMES
        info = observed_information(est, x)
        cov, status = _covariance(info, est.as_array())
        if cov is not None:
            se = np.sqrt(np.maximum(np.diag(cov), 0.0))
        else:
            se = np.full(2, np.nan)
        boundary = not BOUNDARY_RHO < est.alpha < 1.0 / BOUNDARY_RHO
        reduced_cov = None
        if boundary:
            se = np.full(2, np.nan)
        singular = status != "positive_definite"
    else:
        est = _from_z(z, p0.lambda2 / p0.alpha)
        # transformed 4-coordinate gradient: the lambda2 and alpha components
        # both equal the log-s component
        grad_t = np.array([g[0], g[1], g[1], g[2]])
        names = PARAM_NAMES
        boundary = abs(est.theta) > BOUNDARY_THETA or not BOUNDARY_RHO < est.rho < 1.0 / BOUNDARY_RHO
        singular = True
        cov = None
        se = np.array([np.nan, np.inf, np.inf, np.nan])
        reduced_cov = None
        if not boundary:
            rinfo = reduced_information(est, x)
            rcov, status = _covariance(rinfo, [est.lambda1, est.s, 1.0])
            if rcov is not None:
                reduced_cov = rcov
                rse = np.sqrt(np.maximum(np.diag(rcov), 0.0))
                se[0], se[3] = rse[0], rse[2]
    grad_norm = float(np.max(np.abs(grad_t)))
    converged = grad_norm <= tol
    msgs = []
    if not converged:
        msgs.append(f"gradient norm {grad_norm:.3g} above tolerance {tol:g}")
    if boundary:
        msgs.append("estimate on the parameter boundary (|theta| near 1 or degenerate "
                    "rate ratio); standard errors suppressed")
    if model == "gwed":
        msgs.append("lambda2 and alpha are identified only through their product")
    start_vec = p0.as_array() if model == "wed" else as_gwed(p0).as_array()
    return FitResult(
        model=model, estimates=est, std_errors=se, covariance=cov, loglik=float(ll),
        converged=converged, n_evals=obj.n_evals, start_used=start_vec, grad_norm=grad_norm,
        boundary=boundary, singular_information=singular, reduced_covariance=reduced_cov,
        message="; ".join(msgs) if msgs else "converged", n_obs=int(x.size),
        start_index=idx, start_label=label, param_names=names,
    )
