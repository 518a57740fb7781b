"""Semi-streaming maximum matching: construction, estimation, and their building blocks."""

from .construct import ConstructConfig, MatchResult, stream_match
from .estimate import EstimateConfig, EstimateResult, estimate_mcm, estimate_mwm
from .graph import EdgeStream, ResourceLedger, open_stream

__all__ = [
    "ConstructConfig",
    "EdgeStream",
    "EstimateConfig",
    "EstimateResult",
    "MatchResult",
    "ResourceLedger",
    "estimate_mcm",
    "estimate_mwm",
    "open_stream",
    "stream_match",
]
