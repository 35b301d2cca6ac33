"""Exception types shared across the package.

The CLI maps these onto exit codes: ParseError/SchemaError/ConfigError -> 3,
DataMismatchError -> 4, everything else unexpected -> 5.
"""


class ToolTrackError(Exception):
    """Base class for all package errors."""


class ParseError(ToolTrackError):
    """A file could not be parsed; message carries the line number."""


class SchemaError(ToolTrackError):
    """Parsed content violates the declared schema (e.g. embedding length)."""


class ValidationError(ToolTrackError):
    """An argument violates a precondition."""


class ConfigError(ToolTrackError):
    """Bad or unknown configuration key/value."""


class SequenceError(ToolTrackError):
    """Frames presented out of order to the tracker."""


class EstimationError(ToolTrackError):
    """Numerically degenerate filter configuration."""


class InsufficientDataError(ToolTrackError):
    """Not enough samples to compute the requested quantity."""


class StratificationError(ToolTrackError):
    """A cross-validation fold ended up with a single class."""


class DataMismatchError(ToolTrackError):
    """Inconsistent inputs, e.g. feature/label video ids that do not line up."""
