"""Palmprint ROI extraction, stub matching and evaluation metrics."""

from ._core import *  # noqa: F401,F403
from ._core import (
    DataError,
    PalmAnnotation,
    PalmroiError,
    PipelineError,
    StubEmbedder,
)

__all__ = [name for name in dir() if not name.startswith("_")]
