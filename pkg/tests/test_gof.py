import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from gwed.core import GwedParams, cdf, hazard, quantile
from gwed.estimation import fit_mle
from gwed.gof import (CurveTable, GridSpec, KsResult, aic, ecdf, empirical_curves, gof_summary,
                      histogram_density, kolmogorov_sf, ks_statistic, ks_test)
from gwed.sampling import RngStream, sample_inverse


def test_aic_examples():
    assert aic(-283.42, 4) == pytest.approx(574.84, abs=1e-9)
    assert aic(0.0, 1) == 2.0
    assert aic(-464.505, 2) == pytest.approx(933.01, abs=1e-9)
    with pytest.raises(ValueError):
        aic(0.0, 0)


def test_kolmogorov_series_value():
    x = 1.36
    ref = 2 * sum((-1) ** (k - 1) * math.exp(-2 * k * k * x * x) for k in range(1, 100))
    assert kolmogorov_sf(x) == pytest.approx(ref, abs=1e-12)
    assert kolmogorov_sf(x) == pytest.approx(0.049, abs=1e-3)


@pytest.mark.parametrize("x", [0.0, 0.1, 0.3, 0.5, 0.8, 0.99, 1.0, 1.5, 2.5, 6.0])
def test_kolmogorov_matches_scipy(x):
    assert kolmogorov_sf(x) == pytest.approx(stats.kstwobign.sf(x), abs=1e-12)


def test_perfect_fit_quantile_data():
    p = GwedParams(1, 2, 0.5, 0.5)
    n = 2000
    data = quantile(p, (np.arange(1, n + 1) - 0.5) / n)
    res = ks_test(data, lambda t: cdf(p, t))
    assert res.statistic == pytest.approx(0.5 / n, abs=1e-10)
    assert res.pvalue == pytest.approx(1.0, abs=1e-12)
    d, pv = res
    assert (d, pv) == (res.statistic, res.pvalue)


def test_ks_matches_scipy_statistic():
    x = np.random.default_rng(1).exponential(1.0, 300)
    ours = ks_test(x, lambda t: 1 - np.exp(-t))
    ref = stats.kstest(x, "expon")
    assert ours.statistic == pytest.approx(ref.statistic, abs=1e-15)
    assert not ours.asymptotic_only
    assert KsResult(0.1, 0.5, 10).asymptotic_only


def test_ks_rejects_misspecified_exponential():
    x = sample_inverse((1.0, 1.0, 0.5, 0.99), 100_000, RngStream(3)).values
    rate = 1.0 / x.mean()
    assert ks_test(x, lambda t: -np.expm1(-rate * t)).pvalue < 1e-6


def test_ks_statistic_needs_data():
    with pytest.raises(ValueError):
        ks_statistic([], lambda t: t)


def test_ks_pvalues_at_true_parameters_are_uniform():
    truth = GwedParams(1.0, 2.0, 1.0, 0.5)
    pv = [ks_test(sample_inverse(truth, 200, s).values, lambda t: cdf(truth, t)).pvalue
          for s in RngStream(2024).spawn(200)]
    assert 0.01 <= np.mean(np.array(pv) < 0.05) <= 0.12
    assert stats.kstest(pv, "uniform").pvalue > 0.01


@pytest.mark.slow
def test_ks_pvalues_of_fitted_model_are_roughly_uniform():
    truth = GwedParams(1.0, 2.0, 1.0, 0.5)
    streams = RngStream(2024).spawn(200)
    pv = []
    for s in streams:
        x = sample_inverse(truth, 200, s).values
        fit = fit_mle(x, start="moments")
        pv.append(ks_test(x, lambda t: cdf(fit.estimates, t)).pvalue)
    frac = np.mean(np.array(pv) < 0.05)
    assert 0.01 <= frac <= 0.12


def test_gof_summary_fields():
    p = GwedParams(1, 1, 1, 0)
    x = sample_inverse(p, 30, RngStream(4)).values
    g = gof_summary(x, p, -40.0, 4, "GWED")
    assert g.aic == 88.0
    assert g.ks_asymptotic_only
    d = g.to_dict()
    assert d["model"] == "GWED" and d["n"] == 30 and 0 <= d["ks_statistic"] <= 1


def test_grid_spec_parse():
    g = GridSpec.parse("0:8:801")
    assert g.points()[1] == pytest.approx(0.01)
    for bad in ("0:8", "a:b:c", "5:1:10", "0:1:1", "0:inf:5"):
        with pytest.raises(ValueError):
            GridSpec.parse(bad)


def test_empirical_curves_columns():
    p = GwedParams(0.7, 0.9, 0.8, 0.8)
    x = sample_inverse(p, 500, RngStream(5)).values
    tab = empirical_curves(x, p, "0:12:241")
    assert tab.names == ("x", "pdf", "cdf", "survival", "hazard", "ecdf", "hist_density")
    assert np.all(np.diff(tab.grid) > 0)
    assert np.all(np.diff(tab.columns["cdf"]) >= 0)
    assert np.array_equal(tab.columns["cdf"], cdf(p, tab.grid))
    assert np.max(np.abs(tab.columns["cdf"] + tab.columns["survival"] - 1)) <= 1e-12
    assert np.allclose(tab.columns["hazard"], hazard(p, tab.grid))
    assert ecdf(x, x.max()) == 1.0
    assert ecdf(x, 0.0) == 0.0


def test_default_grid_spans_data():
    x = np.array([0.5, 1.0, 2.0, 4.0, 3.0])
    tab = empirical_curves(x, (1, 1, 1, 0))
    assert tab.grid[0] == 0.0 and tab.grid[-1] == pytest.approx(4.2)
    assert tab.columns["ecdf"][-1] == 1.0
    model_only = empirical_curves(None, (2, 1, 1, 0))
    assert model_only.grid[-1] == pytest.approx(4.0)
    assert "ecdf" not in model_only.columns


def test_histogram_density_integrates_to_one():
    x = np.random.default_rng(6).gamma(2.0, 1.0, 5000)
    edges = np.histogram_bin_edges(x, bins="fd")
    mids = 0.5 * (edges[1:] + edges[:-1])
    assert np.sum(histogram_density(x, mids) * np.diff(edges)) == pytest.approx(1.0, abs=1e-12)
    assert histogram_density(x, -1.0) == 0.0


def test_curve_table_tsv():
    tab = CurveTable(np.array([0.0, 1.0]), {"pdf": np.array([0.0, 0.4650883127])})
    text = tab.to_tsv()
    assert text.splitlines()[0] == "#x\tpdf"
    assert text.splitlines()[2] == "1\t0.4650883127"
    buf = io.StringIO()
    tab.to_tsv(buf)
    assert buf.getvalue() == text


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 100.0), min_size=1, max_size=60))
def test_ks_statistic_bounds(data):
    d = ks_statistic(data, lambda t: -np.expm1(-np.asarray(t)))
    assert 1.0 / (2 * len(data)) - 1e-15 <= d <= 1.0
