"""Exception hierarchy for temporal-spotting.

Library code raises these; only the CLI turns them into exit codes.
"""


class SpottingError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(SpottingError, ValueError):
    """An array, vector or parameter set has the wrong shape or length."""


class NumericError(SpottingError, ArithmeticError):
    """Non-finite values, diverging losses, or a failed gradient check."""


class StaleCacheError(SpottingError):
    """A backward pass received a cache from before the last parameter update."""


class ConfigError(SpottingError, ValueError):
    """Invalid or unknown configuration keys."""


class DataFormatError(SpottingError):
    """A feature, label, checkpoint or prediction file is malformed."""


class BadMagicError(DataFormatError):
    """The file does not start with the expected magic bytes."""


class UnsupportedVersionError(DataFormatError):
    """The file declares a format version this package cannot read."""


class TruncatedPayloadError(DataFormatError):
    """The file ends before the payload its header announces."""

    def __init__(self, path: str, expected: int, actual: int) -> None:
        super().__init__(
            f"truncated payload in {path}: expected {expected} bytes, got {actual}"
        )
        self.expected = expected
        self.actual = actual


class LabelError(DataFormatError):
    """A label or prediction references an unknown class or is badly shaped."""


class SyntheticDatasetError(SpottingError):
    """Synthetic action placement ran out of retries."""
