"""Exception hierarchy for the gwed package."""


class GwedError(Exception):
    """Base class for all package errors."""


class ParameterError(GwedError, ValueError):
    """A parameter lies outside the model's valid region."""


class DegenerateParameterError(ParameterError):
    """Parameters for which the selection probability vanishes."""


class DomainError(GwedError, ValueError):
    """An argument lies outside the domain of a function (e.g. an MGF pole)."""


class QuadratureError(GwedError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class SeriesError(GwedError, ArithmeticError):
    """Base class for power-series failures."""


class SeriesInapplicableError(SeriesError):
    """The series construction does not apply to the given coefficients."""


class SeriesConvergenceError(SeriesError):
    """A truncated series did not converge at the requested order."""


class SeriesDomainError(SeriesError, DomainError):
    """The evaluation point lies outside the validated convergence domain."""


class SamplingError(GwedError, RuntimeError):
    """Sampling cannot proceed (e.g. vanishing acceptance probability)."""
