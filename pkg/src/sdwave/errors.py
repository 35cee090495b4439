"""Exception types shared across the package."""


class SdwaveError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SdwaveError):
    """Invalid run configuration; the message names the offending field."""


class NotPositiveSemidefinite(SdwaveError):
    """A covariance matrix failed Cholesky factorization beyond tolerance.

    This signals a bug in a covariance formula, not a user error.
    """


class NonFiniteValue(SdwaveError):
    """A computation produced NaN or Inf."""


class RatioMismatch(SdwaveError):
    """A fine time grid does not subdivide the coarse grid exactly."""


class DimensionMismatch(SdwaveError):
    """Coefficient vectors of incompatible lengths were combined."""


class DegenerateFit(SdwaveError):
    """Not enough usable points for a log-log slope fit."""
