"""Exception and warning types shared across the package."""


class TemporecError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(TemporecError):
    """A record in an input file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyLogError(TemporecError):
    """An operation produced or received an event log with no events."""


class ConfigurationError(TemporecError, ValueError):
    """A parameter or parameter combination is invalid for the given data."""


class UndefinedMetricError(TemporecError):
    """A metric has no defined value (typically: the probe is empty)."""


class ExperimentError(TemporecError):
    """An experiment cannot proceed (e.g. every sampled probe is empty)."""


class EmptyProbeWarning(UserWarning):
    """A constructed probe contains no events; metrics on it are undefined."""
