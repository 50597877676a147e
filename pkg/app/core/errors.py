"""
Exception hierarchy for the toolkit.

Every error carries the process exit code the CLI reports for it:
2 configuration, 3 data, 4 infeasible selection, 1 anything else.
"""

from typing import Optional


class PerfOracleError(Exception):
    """Base class of all toolkit errors."""

    exit_code = 1

    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message


class ConfigurationError(PerfOracleError):
    """Invalid run configuration, scenario or flag combination."""

    exit_code = 2

    def __init__(self, message: str, field_path: Optional[str] = None) -> None:
        if field_path:
            message = f"{field_path}: {message}"
        super().__init__(message)
        self.field_path = field_path


class DataError(PerfOracleError):
    """Input data that cannot be used as given."""

    exit_code = 3


class InvalidInputError(DataError):
    """Arguments violate an operation's preconditions (shapes, ranges, ids)."""


class EmptyWindowError(DataError):
    """A task's monitoring window contains no samples."""


class InsufficientDataError(DataError):
    """Too few rows or samples for the requested operation."""


class ParseError(DataError):
    """A JSON Lines record could not be parsed."""

    def __init__(self, message: str, line_number: int) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class DataIntegrityError(DataError):
    """Records are individually valid but contradict each other."""


class UnknownKeyError(DataError):
    """Lookup of an application, node or metric that is not present."""


class TransportError(PerfOracleError):
    """The monitoring endpoint could not be reached after all retries."""


class RemoteError(PerfOracleError):
    """The monitoring endpoint answered with a non-success status."""


class TrainingDivergedError(PerfOracleError):
    """Training loss became non-finite."""

    def __init__(self, message: str, epoch: int) -> None:
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch


class SearchFailedError(PerfOracleError):
    """Every hyperparameter trial failed."""


class UnsupportedOperationError(PerfOracleError):
    """The model family does not support the requested operation."""


class NotTrainedError(PerfOracleError):
    """A prediction was requested but no suitable model or history exists."""


class InfeasibleSelectionError(PerfOracleError):
    """No candidate meets the inference-time budget."""

    exit_code = 4
