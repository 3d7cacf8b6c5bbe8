import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gwed.core import GwedParams, WedParams, logpdf, pdf
from gwed.errors import DomainError
from gwed.estimation import (GRAD_TOL, fit_mle, gradient_check, information_status, loglik,
                             loglik_gradient, moments_start, observed_information,
                             reduced_information)
from gwed.gof import aic
from gwed.moments import raw_moment
from gwed.sampling import RngStream, sample_inverse


def _data(p, n, seed):
    return sample_inverse(p, n, RngStream(seed)).values


def test_loglik_single_observation():
    assert loglik((1, 1, 1, 0), [1.0]) == pytest.approx(math.log(0.4650883), abs=1e-6)
    # the quoted value is rounded to six decimals
    assert loglik((1, 1, 1, 0), [1.0]) == pytest.approx(-0.765529, abs=2e-6)


def test_loglik_aic_back_out():
    assert aic(-283.42, 4) == pytest.approx(574.84, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(l1=st.floats(0.1, 10), l2=st.floats(0.1, 10), a=st.floats(0.05, 20), th=st.floats(-1, 1),
       seed=st.integers(0, 2 ** 32 - 1))
def test_loglik_equals_sum_log_pdf(l1, l2, a, th, seed):
    p = GwedParams(l1, l2, a, th)
    x = np.random.default_rng(seed).exponential(1 / l1, 50) + 1e-6
    ref = float(np.sum(logpdf(p, x)))
    assert loglik(p, x) == pytest.approx(ref, abs=1e-10 * max(1.0, abs(ref)))


def test_loglik_minus_inf_on_zero_density():
    # s x underflows to zero, so the density is exactly zero there
    x = np.array([1.0, 5e-324])
    assert pdf((1, 1, 0.1, 0), x)[1] == 0.0
    assert loglik((1, 1, 0.1, 0), x) == -math.inf


def test_loglik_wed_nesting():
    x = _data((1.3, 1.3, 2.0, 0.0), 200, 1)
    w = WedParams(2.0, 1.3)
    assert loglik(w, x) == pytest.approx(loglik((1.3, 1.3, 2.0, 0.0), x), abs=1e-10)


def test_as_data_validation():
    with pytest.raises(DomainError):
        loglik((1, 1, 1, 0), [1.0, -2.0])
    with pytest.raises(DomainError):
        loglik((1, 1, 1, 0), [1.0, float("nan")])
    with pytest.raises(DomainError, match="at least 5"):
        fit_mle([1.0, 2.0, 3.0])


def test_theta_derivative_at_zero_matches_normal_equation():
    p = GwedParams(1.2, 0.7, 1.5, 0.0)
    x = _data(p, 300, 2)
    l1, s, B = p.lambda1, p.s, p.selection_probability
    n = x.size
    ref = (-n * l1 * (2 / (2 * l1 + s) + 1 / (l1 + 2 * s) - 2 / (l1 + s)) / B
           - np.sum(np.exp(-s * x) * (1 - 2 * np.exp(-l1 * x))))
    assert loglik_gradient(p, x)[3] == pytest.approx(ref, rel=1e-12)


def test_gradient_matches_finite_differences_random_probes():
    g = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        p = GwedParams(*np.exp(g.uniform(-1.5, 1.5, 3)), g.uniform(-0.98, 0.98))
        x = g.exponential(1 / p.lambda1, 100) + 1e-3
        an, fd = gradient_check(p, x)
        worst = max(worst, float(np.max(np.abs(an - fd)) / np.max(np.abs(an))))
    assert worst <= 1e-6


def test_wed_gradient_matches_finite_differences():
    x = _data((0.8, 0.8, 3.0, 0.0), 100, 3)
    an, fd = gradient_check(WedParams(2.5, 0.9), x)
    assert np.allclose(an, fd, rtol=1e-6)


def test_observed_information_symmetric_and_singular():
    x = _data(GwedParams(1.0, 1.0, 0.5, -0.35), 2000, 8)
    p = fit_mle(x).estimates
    J = observed_information(p, x)
    assert np.array_equal(J, J.T)
    # lambda2 and alpha enter only through their product
    assert information_status(J, p.as_array()) in ("singular", "indefinite")
    R = reduced_information(p, x)
    assert np.array_equal(R, R.T)
    assert information_status(R, [p.lambda1, p.s, 1.0]) == "positive_definite"


def test_information_status_classifies():
    assert information_status(np.eye(2)) == "positive_definite"
    assert information_status(np.diag([1.0, 0.0])) == "singular"
    assert information_status(np.diag([1.0, -1.0])) == "indefinite"


def test_information_shrinks_like_one_over_n():
    # evaluated at the truth on large samples: the GWED is weakly identified,
    # so fitted covariances at n = 2000 are still far from their asymptotic rate
    p = GwedParams(1.0, 1.0, 0.5, -0.35)
    g = np.random.default_rng(5)
    ratios = []
    for _ in range(3):
        small = sample_inverse(p, 50_000, RngStream(int(g.integers(2 ** 32)))).values
        big = sample_inverse(p, 200_000, RngStream(int(g.integers(2 ** 32)))).values
        cs = np.linalg.inv(reduced_information(p, small))
        cb = np.linalg.inv(reduced_information(p, big))
        ratios.append(np.diag(cb) / np.diag(cs))
    r = np.mean(ratios, axis=0)
    assert np.all((r >= 0.15) & (r <= 0.4))


def test_moments_start_exact_moments():
    target = np.array([raw_moment((1, 1, 1, 0), r) for r in range(1, 5)])
    x = _data((1, 1, 1, 0), 500, 6)
    ms = moments_start(x, sample_moments=target)
    assert not ms.fallback
    got = np.array([raw_moment(ms.params, r) for r in range(1, 5)])
    assert np.allclose(got / target, 1.0, atol=1e-4)


def test_moments_start_tiny_sample_falls_back():
    ms = moments_start([0.3, 1.7, 0.9, 2.4, 1.1])
    assert ms.fallback
    assert isinstance(ms.params, GwedParams)


@pytest.mark.slow
def test_moments_start_feeds_a_converging_fit():
    x = _data((0.5, 2.0, 1.0, 0.8), 5000, 7)
    ms = moments_start(x)
    fit = fit_mle(x, start=ms.params)
    assert fit.converged or fit.boundary


def test_fit_result_contract():
    p = GwedParams(1.0, 1.0, 0.5, -0.35)
    x = _data(p, 2000, 8)
    fit = fit_mle(x)
    assert fit.converged
    assert fit.grad_norm <= GRAD_TOL
    assert fit.model == "gwed" and fit.k == 4 and fit.n_obs == 2000
    assert fit.aic == pytest.approx(8 - 2 * fit.loglik)
    assert fit.singular_information and fit.covariance is None
    assert np.isinf(fit.std_errors[1]) and np.isinf(fit.std_errors[2])
    assert np.all(np.isfinite(fit.std_errors[[0, 3]])) and np.all(fit.std_errors[[0, 3]] > 0)
    rc = fit.reduced_covariance
    assert np.allclose(rc, rc.T) and np.all(np.linalg.eigvalsh(rc) > 0)
    assert np.allclose(np.sqrt(np.diag(rc))[[0, 2]], fit.std_errors[[0, 3]])
    assert fit.loglik == pytest.approx(loglik(fit.estimates, x), abs=1e-9)


def test_fit_determinism():
    x = _data((0.7, 0.9, 0.8, 0.8), 400, 9)
    a = fit_mle(x)
    b = fit_mle(x)
    assert a.estimates == b.estimates
    assert a.loglik == b.loglik
    assert np.array_equal(a.std_errors, b.std_errors, equal_nan=True)
    assert a.start_index == b.start_index


@pytest.mark.parametrize("seed", [10, 11])
def test_gwed_nests_wed(seed):
    x = _data((1.0, 1.0, 2.0, 0.0), 500, seed)
    gw = fit_mle(x, model="gwed")
    we = fit_mle(x, model="wed")
    assert we.k == 2 and we.converged
    assert gw.loglik >= we.loglik - 1e-6


def test_wed_fit_recovers_truth():
    x = _data((1.5, 1.5, 2.0, 0.0), 3000, 12)
    we = fit_mle(x, model="wed")
    assert we.converged and not we.singular_information
    truth = np.array([2.0, 1.5])
    assert np.all(np.abs(we.estimates.as_array() - truth) <= 4 * we.std_errors)
    assert np.allclose(np.sqrt(np.diag(we.covariance)), we.std_errors)


def test_scale_invariance():
    x = _data((1.0, 2.0, 0.5, 0.6), 800, 13)
    c = 3.0
    a = fit_mle(x)
    b = fit_mle(x * c)
    pa, pb = a.estimates, b.estimates
    assert pb.lambda1 == pytest.approx(pa.lambda1 / c, rel=1e-4)
    assert pb.s == pytest.approx(pa.s / c, rel=1e-4)
    assert pb.theta == pytest.approx(pa.theta, abs=1e-4)
    assert b.loglik == pytest.approx(a.loglik - x.size * math.log(c), abs=1e-6)


def test_degenerate_data_no_crash():
    fit = fit_mle(np.full(20, 1.7))
    assert (not fit.converged) or fit.boundary
    assert math.isfinite(fit.loglik)


def test_explicit_start_and_bad_model():
    x = _data((1, 1, 1, 0), 300, 14)
    fit = fit_mle(x, start=(1.0, 1.0, 1.0, 0.0))
    assert fit.start_label == "explicit" and fit.start_index == 0
    with pytest.raises(ValueError, match="model"):
        fit_mle(x, model="weibull")
