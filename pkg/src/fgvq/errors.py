"""Exception hierarchy for the quality engine.

Parsing and validation failures raise subclasses of :class:`EngineError` so
callers (notably the CLI) can map them onto exit codes: missing inputs are
distinguished from malformed ones.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(EngineError):
    """Input bytes or structure do not match the expected format."""


class TruncationError(FormatError):
    """Input ended before a complete record; carries the failing index."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class UnsupportedColorspaceError(FormatError):
    """Y4M colorspace tag outside the supported subset."""


class UnsupportedFormatError(FormatError):
    """Recognized container but unsupported version or element type."""


class BoundsError(FormatError):
    """Declared sizes exceed the format's limits; raised before allocation."""


class InputNotFoundError(EngineError):
    """No file matched the requested input path or pattern."""


class DimensionMismatchError(EngineError):
    """Frames or grids with inconsistent dimensions."""


class InvalidWindowError(EngineError):
    """Temporal window too short for frequency analysis."""


class InvalidWeightsError(EngineError):
    """Pooling weights violate their contract (e.g. negative values)."""


class InvalidInputError(EngineError):
    """Operation inputs violate a precondition."""


class InvalidModelError(EngineError):
    """Model bundle is missing entries or has inconsistent shapes."""


class InsufficientDataError(EngineError):
    """Too few samples for the requested statistic."""


class UnmatchedIdsError(EngineError):
    """Score CSV files do not cover the same ids; carries the offenders."""

    def __init__(self, message: str, ids: list[str]):
        super().__init__(message)
        self.ids = ids
