"""Exception types raised across the package."""


class NoisyICAError(Exception):
    """Base class for all errors raised by noisy_ica_kit."""


class InvalidParameterError(NoisyICAError, ValueError):
    """A parameter is outside its admissible range."""


class InvalidInputError(NoisyICAError, ValueError):
    """Input array is malformed (non-finite, wrong shape)."""


class InsufficientDataError(NoisyICAError, ValueError):
    """Too few observations for the requested statistic."""


class DegenerateDirectionError(NoisyICAError, ArithmeticError):
    """The empirical characteristic function vanishes along the direction."""


class ContrastOverflowError(NoisyICAError, OverflowError):
    """The exponential moment of a projection is numerically unusable."""


class DegenerateGradientError(NoisyICAError, ArithmeticError):
    """Power iteration produced a (numerically) zero gradient."""


class EstimationError(NoisyICAError, RuntimeError):
    """Every probe direction failed while estimating a statistic."""


class RankError(NoisyICAError, ValueError):
    """A matrix that must be invertible is rank deficient."""


class MetaFailure(NoisyICAError, RuntimeError):
    """Every candidate of a Meta run failed."""


class ConfigError(NoisyICAError, ValueError):
    """An experiment or model configuration is invalid."""
