"""
Error types raised across the toolkit
Only main.py turns them into messages and exit codes
"""

from config.settings import EXIT_DATA, EXIT_INTERNAL, EXIT_USAGE


class NoahError(Exception):
    """Base class for every error the toolkit raises on purpose"""

    exit_code = EXIT_INTERNAL


class ConfigurationError(NoahError, ValueError):
    exit_code = EXIT_USAGE


class UsageError(NoahError):
    exit_code = EXIT_USAGE


class DimensionError(NoahError, ValueError):
    """Shape mismatch between operands"""

    exit_code = EXIT_INTERNAL

    @classmethod
    def mismatch(cls, what: str, left, right) -> "DimensionError":
        return cls(f"{what}: shape {tuple(left)} does not match {tuple(right)}")


class ContractError(NoahError):
    """A cache or argument that does not belong to the call it is passed to"""

    exit_code = EXIT_INTERNAL


class InvariantViolation(NoahError, AssertionError):
    exit_code = EXIT_INTERNAL


class DataError(NoahError):
    exit_code = EXIT_DATA


class DataFormatError(DataError, ValueError):
    pass


class ConsistencyError(DataError, ValueError):
    pass


class TruncatedDataError(DataError, OSError):
    pass


class LabelRangeError(DataError, ValueError):
    pass


class CheckpointError(NoahError):
    exit_code = EXIT_DATA


class CheckpointFormatError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointTruncatedError(CheckpointError):
    pass


class CheckpointCorruptError(CheckpointError):
    pass


class UnsupportedHeadError(NoahError):
    exit_code = EXIT_USAGE


class IndexRangeError(NoahError, IndexError):
    exit_code = EXIT_USAGE


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit code"""
    if isinstance(error, NoahError):
        return error.exit_code
    if isinstance(error, FileNotFoundError):
        return EXIT_USAGE
    return EXIT_INTERNAL
