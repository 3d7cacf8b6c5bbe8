"""Goodness of fit: AIC, one-sample Kolmogorov-Smirnov test and curve tables.

KS p-values are the plain asymptotic Kolmogorov values. They do not account
for parameters estimated from the same data (no Lilliefors correction), so
they are conservative for fitted models.
"""
from dataclasses import dataclass
import math
from typing import Optional

import numpy as np

from .core import as_gwed, cdf_and_survival, hazard, pdf

KS_TERM_CUTOFF = 1e-12
KS_MIN_ASYMPTOTIC_N = 35


def aic(loglik, k):
    """Akaike information criterion ``2k - 2 loglik``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 2.0 * k - 2.0 * loglik


def kolmogorov_sf(x):
    """Survival function of the Kolmogorov distribution, ``P(K > x)``.

    Uses ``2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`` for ``x >= 1`` and the
    Jacobi-theta form ``1 - sqrt(2 pi)/x sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2))``
    below, truncating each series once a term falls under 1e-12.
    """
    x = float(x)
    if x <= 0.0:
        return 1.0
    if x >= 1.0:
        total = 0.0
        k = 1
        while True:
            term = math.exp(-2.0 * k * k * x * x)
            total += term if k % 2 else -term
            if term < KS_TERM_CUTOFF:
                break
            k += 1
        return min(max(2.0 * total, 0.0), 1.0)
    c = -math.pi ** 2 / (8.0 * x * x)
    total = 0.0
    k = 1
    while True:
        term = math.exp(c * (2 * k - 1) ** 2)
        total += term
        if term < KS_TERM_CUTOFF:
            break
        k += 1
    return min(max(1.0 - math.sqrt(2.0 * math.pi) / x * total, 0.0), 1.0)


@dataclass(frozen=True)
class KsResult:
    """KS statistic and asymptotic p-value; unpacks as ``(statistic, pvalue)``."""

    statistic: float
    pvalue: float
    n: int

    @property
    def asymptotic_only(self):
        """True when ``n`` is too small for the asymptotic p-value to be reliable."""
        return self.n < KS_MIN_ASYMPTOTIC_N

    def __iter__(self):
        yield self.statistic
        yield self.pvalue


def ks_statistic(data, cdf_fn):
    x = np.sort(np.asarray(data, dtype=float).reshape(-1))
    n = x.size
    if n < 1:
        raise ValueError("need at least one observation")
    F = np.asarray(cdf_fn(x), dtype=float).reshape(-1)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_test(data, cdf_fn):
    """One-sample KS test of ``data`` against the continuous cdf ``cdf_fn``."""
    n = int(np.size(data))
    d = ks_statistic(data, cdf_fn)
    return KsResult(statistic=d, pvalue=kolmogorov_sf(math.sqrt(n) * d), n=n)


@dataclass(frozen=True)
class GofSummary:
    aic: float
    ks_statistic: float
    ks_pvalue: float
    n: int
    model_label: str
    loglik: float
    k: int

    @property
    def ks_asymptotic_only(self):
        return self.n < KS_MIN_ASYMPTOTIC_N

    def to_dict(self):
        return {
            "model": self.model_label,
            "n": self.n,
            "k": self.k,
            "loglik": self.loglik,
            "aic": self.aic,
            "ks_statistic": self.ks_statistic,
            "ks_pvalue": self.ks_pvalue,
            "ks_asymptotic_only": self.ks_asymptotic_only,
        }


def gof_summary(data, params, loglik, k, model_label):
    """AIC and KS summary of fitted ``params`` (GWED or WED) on ``data``."""
    p = as_gwed(params)
    ks = ks_test(data, lambda t: cdf_and_survival(p, t)[0])
    return GofSummary(aic=aic(loglik, k), ks_statistic=ks.statistic, ks_pvalue=ks.pvalue,
                      n=ks.n, model_label=model_label, loglik=float(loglik), k=int(k))


# ---------------------------------------------------------------------------
# curve tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    steps: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid limits must be finite")
        if not self.x_max > self.x_min:
            raise ValueError("grid needs x_max > x_min")
        if self.steps < 2:
            raise ValueError("grid needs at least 2 points")

    @classmethod
    def parse(cls, text):
        """Parse ``x_min:x_max:steps``."""
        parts = str(text).split(":")
        if len(parts) != 3:
            raise ValueError(f"grid spec must look like x_min:x_max:steps, got {text!r}")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ValueError(f"grid spec must look like x_min:x_max:steps, got {text!r}") from None
        return cls(lo, hi, n)

    def points(self):
        return np.linspace(self.x_min, self.x_max, self.steps)


@dataclass(frozen=True)
class CurveTable:
    grid: np.ndarray
    columns: dict

    @property
    def names(self):
        return ("x",) + tuple(self.columns)

    def to_tsv(self, path_or_file=None):
        """Tab-separated text with a ``#``-prefixed header; returns the text."""
        cols = [self.grid] + [self.columns[k] for k in self.columns]
        lines = ["#" + "\t".join(self.names)]
        for row in zip(*(c.tolist() for c in cols)):
            lines.append("\t".join(f"{v:.10g}" for v in row))
        text = "\n".join(lines) + "\n"
        if path_or_file is None:
            return text
        if hasattr(path_or_file, "write"):
            path_or_file.write(text)
        else:
            with open(path_or_file, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return text


def ecdf(data, x):
    """Right-continuous empirical cdf of ``data`` at ``x``."""
    d = np.sort(np.asarray(data, dtype=float).reshape(-1))
    return np.searchsorted(d, np.asarray(x, dtype=float), side="right") / d.size


def histogram_density(data, x):
    """Freedman-Diaconis histogram density evaluated at ``x`` (0 outside the bins)."""
    d = np.asarray(data, dtype=float).reshape(-1)
    edges = np.histogram_bin_edges(d, bins="fd")
    dens, edges = np.histogram(d, bins=edges, density=True)
    x = np.asarray(x, dtype=float)
    idx = np.searchsorted(edges, x, side="right") - 1
    idx = np.where(x == edges[-1], len(dens) - 1, idx)
    inside = (idx >= 0) & (idx < len(dens))
    return np.where(inside, dens[np.clip(idx, 0, len(dens) - 1)], 0.0)


def empirical_curves(data, params, grid_spec=None):
    """Fitted pdf/cdf/survival/hazard on a grid, plus empirical columns.

    ``data`` may be ``None`` to produce model curves only. Without a grid
    spec the grid spans ``[0, 1.05 max(data)]`` (or ``[0, 8/lambda1]``) in
    201 points.
    """
    p = as_gwed(params)
    if grid_spec is None:
        top = 1.05 * float(np.max(data)) if data is not None else 8.0 / p.lambda1
        grid_spec = GridSpec(0.0, top, 201)
    elif isinstance(grid_spec, str):
        grid_spec = GridSpec.parse(grid_spec)
    x = grid_spec.points()
    c, s = cdf_and_survival(p, x)
    cols = {
        "pdf": np.asarray(pdf(p, x)),
        "cdf": np.asarray(c),
        "survival": np.asarray(s),
        "hazard": np.asarray(hazard(p, x)),
    }
    if data is not None:
        cols["ecdf"] = ecdf(data, x)
        cols["hist_density"] = histogram_density(data, x)
    return CurveTable(grid=x, columns=cols)
