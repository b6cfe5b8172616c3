"""Error types with a fixed mapping to CLI exit codes."""


class IncbmError(Exception):
    """Base class for package errors. Maps to exit code 1 unless refined."""

    exit_code = 1


class ConfigError(IncbmError):
    """Invalid run configuration or command usage."""

    exit_code = 2


class DataError(IncbmError):
    """Invalid or inconsistent input data."""

    exit_code = 3


class FormatError(DataError):
    """Malformed blob, manifest, or checkpoint file on disk."""


class ConsistencyError(DataError):
    """Files parse individually but disagree with each other or with declared shapes."""
