"""Exception types shared across the package."""


class MvembedError(Exception):
    """Base class for all errors raised by mvembed."""


class DimensionError(MvembedError):
    """Operand shapes are incompatible."""


class DegenerateVectorError(MvembedError):
    """A zero (or effectively zero) vector where a direction is required."""


class DegenerateMatrixError(MvembedError):
    """Power iteration hit a vector in the matrix null space."""


class NumericError(MvembedError):
    """A computation produced or received non-finite values."""


class FormatError(MvembedError):
    """Malformed input file. Carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class InsufficientDataError(MvembedError):
    """Not enough sentences/pairs/columns to perform the operation."""


class UsageError(MvembedError):
    """Invalid argument or configuration value."""


class EmptySentenceError(MvembedError):
    """A sentence with no tokens where at least one is required."""


class EmptyEvaluationError(MvembedError):
    """Every pair of an evaluation dataset was skipped."""


class UndefinedCorrelationError(MvembedError):
    """Correlation undefined (zero variance or constant input)."""


class CorruptCheckpointError(MvembedError):
    """Checkpoint manifest and payload disagree."""


class MissingViewError(MvembedError):
    """The loaded model lacks a view required by the requested operation."""
