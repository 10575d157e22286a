"""Exception hierarchy shared by all segpower modules.

Every error raised by the library derives from :class:`SegpowerError`, so
callers (including the CLI and the HTTP service) can convert any library
failure into a diagnostic without catching bare exceptions.
"""


class SegpowerError(Exception):
    """Base class for all segpower errors."""


class DimensionError(SegpowerError):
    """Input vectors or matrices have incompatible shapes."""


class RankError(SegpowerError):
    """Design matrix is rank deficient at fit time."""


class DegreesOfFreedomError(SegpowerError):
    """Too few observations for the requested fit (n <= p)."""


class ConvergenceError(SegpowerError):
    """Iterative fit failed to converge; carries the last iterate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class BoundaryError(SegpowerError):
    """Maximum likelihood estimate lies on the parameter boundary."""


class SizeError(SegpowerError):
    """Series too short for the requested statistic."""


class DegenerateSeriesError(SegpowerError):
    """Response series is constant (or has zero dispersion)."""


class DegenerateCovariateError(SegpowerError):
    """Segmented covariate is constant or leaves no interior candidates."""


class UnsupportedAlphaError(SegpowerError):
    """Significance level not covered by the critical-value table."""


class DomainError(SegpowerError):
    """A parameter (typically psi) lies outside its legal domain."""


class NonIdentifiableError(SegpowerError):
    """Averaged segmented term lies in the null column space."""


class ParseError(SegpowerError):
    """Covariate-specification text could not be parsed.

    Attributes
    ----------
    position : int
        0-based offset into the original text where parsing failed.
    """

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnreachableTargetError(SegpowerError):
    """No sample size below the search cap reaches the target power."""


class FlatFitError(SegpowerError):
    """Estimated slope difference is ~0; changepoint variance undefined."""


class ConfigurationError(SegpowerError):
    """Invalid combination of options (e.g. a test/scenario mismatch)."""


class IngestionError(SegpowerError):
    """Input data file is malformed."""
