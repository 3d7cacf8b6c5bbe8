import os
import subprocess
import sys

import numpy as np
import pytest

from gwed import _kernels
from gwed._accel import HAVE_NUMBA
from gwed.core import mixture

from conftest import SMALL_GRID

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("p", SMALL_GRID, ids=str)
def test_cdf_sf_backends_agree(p):
    m = mixture(p)
    x = np.concatenate([[0.0, -1.0, 1e-12, 1e-5], np.linspace(0.001, 40.0, 500) / p.lambda1])
    c1, s1 = _kernels.mixture_cdf_sf(x, m.weights, m.rates, backend="numba")
    c2, s2 = _kernels.mixture_cdf_sf(x, m.weights, m.rates, backend="numpy")
    assert np.allclose(c1, c2, rtol=1e-13, atol=1e-16)
    assert np.allclose(s1, s2, rtol=1e-13, atol=1e-300)


@needs_numba
@pytest.mark.parametrize("p", SMALL_GRID, ids=str)
def test_quantile_backends_agree(p):
    m = mixture(p)
    u = np.concatenate([[0.0, 1e-14], np.linspace(0.001, 0.999, 200), [1 - 1e-12]])
    q1 = _kernels.mixture_quantile(u, m.weights, m.rates, backend="numba")
    q2 = _kernels.mixture_quantile(u, m.weights, m.rates, backend="numpy")
    assert np.allclose(q1, q2, rtol=1e-11, atol=0)


@needs_numba
@pytest.mark.parametrize("theta", [-1.0, -0.3, 0.0, 1e-9, 0.7, 1.0])
def test_fgm_conditional_backends_agree(theta):
    g = np.random.default_rng(1)
    u, w = g.random(1000), g.random(1000)
    v1 = _kernels.fgm_conditional(u, w, theta, backend="numba")
    v2 = _kernels.fgm_conditional(u, w, theta, backend="numpy")
    assert np.allclose(v1, v2, rtol=1e-13, atol=1e-15)


@needs_numba
@pytest.mark.parametrize("p", SMALL_GRID, ids=str)
def test_loglik_sums_backends_agree(p):
    x = np.random.default_rng(2).exponential(1.0 / p.lambda1, 2000) + 1e-9
    a = np.array(_kernels.loglik_sums(x, p.lambda1, p.s, p.theta, backend="numba"))
    b = np.array(_kernels.loglik_sums(x, p.lambda1, p.s, p.theta, backend="numpy"))
    assert np.allclose(a, b, rtol=1e-11)


def test_unknown_backend_rejected():
    with pytest.raises(ValueError, match="backend"):
        _kernels.mixture_cdf_sf(np.ones(2), np.ones(1), np.ones(1), backend="cuda")


def test_fgm_conditional_residual():
    # dC/du(u, v) = v [1 + theta (1 - 2u)(1 - v)] must reproduce w
    g = np.random.default_rng(3)
    for theta in (-1.0, -0.5, 0.25, 1.0):
        u, w = g.random(10000), g.random(10000)
        v = _kernels.fgm_conditional(u, w, theta)
        assert np.all((v >= 0) & (v <= 1))
        resid = v * (1 + theta * (1 - 2 * u) * (1 - v)) - w
        assert np.max(np.abs(resid)) <= 1e-12


def test_env_flag_disables_numba():
    env = dict(os.environ, GWED_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import gwed; print(gwed.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
