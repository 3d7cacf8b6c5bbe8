from itertools import product

import numpy as np
import pytest

from gwed.core import GwedParams

THETAS = (-0.99, -0.5, 0.0, 0.5, 0.99)
ALPHAS = (0.5, 1.0, 2.0, 5.0)
RATES = (0.5, 1.0, 2.0)

#: The 5 x 4 x 3 x 3 validation grid over (theta, alpha, lambda1, lambda2).
PARAM_GRID = [GwedParams(l1, l2, a, th) for th, a, l1, l2 in product(THETAS, ALPHAS, RATES, RATES)]

#: A small spread of parameter sets for the slower per-set checks.
SMALL_GRID = [
    GwedParams(1.0, 1.0, 1.0, 0.0),
    GwedParams(1.0, 2.0, 0.5, 0.5),
    GwedParams(0.5, 2.0, 5.0, -0.99),
    GwedParams(2.0, 0.5, 0.5, 0.99),
    GwedParams(1.0, 1.0, 0.5, -0.35),
    GwedParams(0.7, 0.9, 0.8, 0.8),
]


def grid_id(p):
    return f"l1={p.lambda1:g},l2={p.lambda2:g},a={p.alpha:g},th={p.theta:g}"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
