"""Language-model gateway and the scripted stub provider."""

from .gateway import (
    LOOSE,
    STRICT,
    FilterLevel,
    ParsedInsight,
    SimilarityAssessment,
    assess_similarity,
    filter_by_level,
    parse_filter_level,
    parse_insight_note,
)
from .stub import ExternalLlm, LlmProvider, ScriptedStub, request_digest

__all__ = [
    "LOOSE",
    "STRICT",
    "FilterLevel",
    "ParsedInsight",
    "SimilarityAssessment",
    "assess_similarity",
    "filter_by_level",
    "parse_filter_level",
    "parse_insight_note",
    "ExternalLlm",
    "LlmProvider",
    "ScriptedStub",
    "request_digest",
]
