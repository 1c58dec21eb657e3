"""Extractor error types."""

from __future__ import annotations


class ExtractorError(Exception):
    """Base class for extractor failures."""


class VideoFormatError(ExtractorError):
    """Input clip could not be decoded."""


class EncoderEnvironmentError(ExtractorError):
    """Encoder weights could not be loaded in this environment."""


class ExportError(ExtractorError):
    """Checkpoint is missing a required parameter; message names it."""
