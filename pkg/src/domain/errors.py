from __future__ import annotations

from typing import Optional


class GrodLabError(Exception):
    """Base class for every error raised on purpose by grodlab."""


class NumericsError(GrodLabError):
    """Raised when a linear-algebra primitive cannot produce a finite answer."""


class NotPositiveDefinite(NumericsError):
    """Cholesky factorization failed even after regularization."""

    def __init__(self, message: str, batch_index: Optional[int] = None) -> None:
        super().__init__(message)
        self.batch_index = batch_index

    def with_batch(self, batch_index: int) -> "NotPositiveDefinite":
        return NotPositiveDefinite(f"{self} (batch {batch_index})", batch_index=batch_index)


class DimensionMismatch(NumericsError):
    pass


class TooFewSamples(NumericsError):
    pass


class DegenerateScatter(NumericsError):
    pass


class DegenerateFeatures(NumericsError):
    pass


class ShapeMismatch(GrodLabError):
    pass


class EmptyInput(GrodLabError):
    pass


class EmptyClass(GrodLabError):
    """A metric needs both ID and OOD scores."""


class LengthMismatch(GrodLabError):
    pass


class UninitializedState(GrodLabError):
    """GROD statistics were queried before the warmup initialized them."""


class AllFiltered(GrodLabError):
    """Every fake-OOD candidate was deleted; the batch continues ID-only."""


class UsageError(GrodLabError):
    """Command line that the parser rejected."""


class ConfigError(GrodLabError):
    pass


class FormatError(GrodLabError):
    """Malformed feature file; ``line_number`` is 1-based."""

    def __init__(self, message: str, line_number: Optional[int] = None) -> None:
        text = f"line {line_number}: {message}" if line_number is not None else message
        super().__init__(text)
        self.line_number = line_number


class IoError(GrodLabError):
    pass


class CheckpointError(GrodLabError):
    pass


__all__ = [
    "GrodLabError",
    "UsageError",
    "NumericsError",
    "NotPositiveDefinite",
    "DimensionMismatch",
    "TooFewSamples",
    "DegenerateScatter",
    "DegenerateFeatures",
    "ShapeMismatch",
    "EmptyInput",
    "EmptyClass",
    "LengthMismatch",
    "UninitializedState",
    "AllFiltered",
    "ConfigError",
    "FormatError",
    "IoError",
    "CheckpointError",
]
