"""Generalized weighted exponential distribution (GWED).

A four-parameter lifetime model obtained by selecting ``X1 | alpha X1 > X2``
from a pair of exponentials coupled by a Farlie-Gumbel-Morgenstern copula.
The package covers evaluation, moments, series expansions, sampling,
maximum-likelihood fitting and goodness of fit, plus the two-parameter
weighted exponential (WED) submodel.
"""
from importlib import metadata as _metadata

try:
    __version__ = _metadata.version("artifact")
except _metadata.PackageNotFoundError:  # pragma: no cover - source checkout
    __version__ = "0.1.0"

from ._accel import BACKEND
from .core import (GwedParams, HiddenTruncationModel, MixtureRepresentation, WedParams, as_gwed,
                   cdf, cdf_and_survival, gradient_aux, hazard, hidden_truncation, k_constant,
                   logpdf, mixture, pdf, quantile, quantile_numeric, selection_probability,
                   survival, wed_pdf)
from .errors import (DegenerateParameterError, DomainError, GwedError, ParameterError,
                     QuadratureError, SamplingError, SeriesConvergenceError, SeriesDomainError,
                     SeriesError, SeriesInapplicableError)
from .estimation import (FitResult, fit_mle, loglik, loglik_gradient, moments_start,
                         observed_information)
from .framework import CopulaExpansion, FgmParams, fgm_expansion, normalizer, weighted_pdf
from .gof import CurveTable, GofSummary, aic, empirical_curves, ks_test
from .moments import (conditional_mgf, conditional_moment, mgf, moment_summary, pwm,
                      raw_moment)
from .sampling import RngStream, SampleBatch, sample_fgm_pair, sample_inverse, sample_rejection
from .series import (SeriesCoefficients, cdf_series_coefficients, pwm_series, quantile_series,
                     quantile_series_sqrt)

__all__ = [
    "BACKEND", "CopulaExpansion", "CurveTable", "DegenerateParameterError", "DomainError",
    "FgmParams", "FitResult", "GofSummary", "GwedError", "GwedParams", "HiddenTruncationModel",
    "MixtureRepresentation", "ParameterError", "QuadratureError", "RngStream", "SampleBatch",
    "SamplingError", "SeriesCoefficients", "SeriesConvergenceError", "SeriesDomainError",
    "SeriesError", "SeriesInapplicableError", "WedParams", "aic", "as_gwed", "cdf",
    "cdf_and_survival", "cdf_series_coefficients", "conditional_mgf", "conditional_moment",
    "empirical_curves", "fgm_expansion", "fit_mle", "gradient_aux", "hazard",
    "hidden_truncation", "k_constant", "ks_test", "loglik", "loglik_gradient", "logpdf", "mgf",
    "mixture", "moment_summary", "moments_start", "normalizer", "observed_information", "pdf",
    "pwm", "pwm_series", "quantile", "quantile_numeric", "quantile_series",
    "quantile_series_sqrt", "raw_moment",
    "sample_fgm_pair", "sample_inverse", "sample_rejection", "selection_probability",
    "survival", "weighted_pdf", "wed_pdf",
]
