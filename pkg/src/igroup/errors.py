"""Exception types shared across the package.

Two broad classes matter for exit-code mapping in the CLI: usage/schema
problems (bad flags, malformed files) and numerical failures discovered
while processing well-formed inputs (empty neighborhoods, degenerate
groups, infeasible resampling).
"""


class IGroupError(Exception):
    """Base class for all library-specific errors."""


class InvalidInputError(IGroupError, ValueError):
    """Malformed value-level input (non-finite number, dimension mismatch)."""


class InvalidBandwidthError(InvalidInputError):
    """Bandwidth or scale factor that is not strictly positive."""


class ConfigurationError(IGroupError):
    """A configuration that cannot be satisfied by the supplied data."""


class SchemaError(IGroupError):
    """CSV input missing required columns or entirely unreadable."""


class EmptyNeighborhoodError(IGroupError):
    """All candidate weights vanished for a target individual."""


class SchemeMismatchError(IGroupError):
    """Weighting scheme requires fields the records do not carry."""


class DegenerateGroupError(IGroupError):
    """A formed group has no usable dispersion (zero spread)."""


class RegressionError(IGroupError):
    """Singular design matrix in a rolling regression window."""


class ObjectiveEvaluationError(IGroupError):
    """Objective returned a non-finite value during minimization."""
