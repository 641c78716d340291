"""Queryable skill library."""

from .store import (
    EXACT_MATCH_THRESHOLD,
    LibraryConfig,
    LibraryError,
    MatchResult,
    SkillLibrary,
    SkillRecord,
)
from .text_embed import TrigramTextEmbedder

__all__ = [
    "EXACT_MATCH_THRESHOLD",
    "LibraryConfig",
    "LibraryError",
    "MatchResult",
    "SkillLibrary",
    "SkillRecord",
    "TrigramTextEmbedder",
]
