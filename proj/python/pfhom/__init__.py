"""Power flow solution space exploration via polynomial homotopy continuation."""

from ._core import (
    ParseError,
    StartCache,
    System,
    TrackOptions,
    ValidationError,
)

__all__ = [
    "ParseError",
    "StartCache",
    "System",
    "TrackOptions",
    "ValidationError",
]
