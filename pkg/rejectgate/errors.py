"""Exceptions raised by rejectgate; each carries the CLI exit code it maps to."""


class RejectGateError(Exception):
    exit_code = 1


class UsageError(RejectGateError):
    """Invalid flags or arguments."""

    exit_code = 1


class DataValidationError(RejectGateError, ValueError):
    """Input data that does not satisfy the record contracts."""

    exit_code = 2


class ConfigError(DataValidationError):
    """Invalid generator or runtime configuration."""


class SplitError(DataValidationError):
    """A seasonal split that cannot be built from the given images."""


class DegenerateComputationError(RejectGateError):
    """A statistic that is undefined on the given selection (e.g. an empty mean)."""

    exit_code = 3


class DegeneratePartitionError(DegenerateComputationError):
    """An accepted/rejected partition with an empty side."""


class CalibrationError(DegenerateComputationError):
    """Every point of a median sweep was degenerate."""
