"""Exception types shared across the toolkit."""


class TokscaleError(Exception):
    """Base class for all toolkit errors."""


class IngestError(TokscaleError):
    """Raised for unreadable files, invalid UTF-8 or malformed records."""


class InsufficientDataError(TokscaleError):
    """Raised when a corpus is too small for a requested slice or split."""


class CountOverflowError(TokscaleError):
    """Raised when a pre-token count would exceed the 64-bit range."""


class TrainingError(TokscaleError):
    """Raised when a trainer cannot reach the requested vocabulary size.

    Carries the vocabulary size actually achieved in ``achieved``.
    """

    def __init__(self, message: str, achieved: int | None = None):
        super().__init__(message)
        self.achieved = achieved


class VocabularyError(TokscaleError):
    """Raised for vocabulary/algorithm mismatches and invalid token ids."""


class MetricError(TokscaleError):
    """Raised when a metric is undefined for the given inputs."""


class FormatError(TokscaleError):
    """Raised when a serialized artifact cannot be parsed."""
