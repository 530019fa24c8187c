"""Text analysis shared by the sparse index and the hashing embedder.

One analyzer configuration must be applied identically at index time and
query time, so it is a small, serializable value object.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

# Unicode letters and digits, underscore excluded.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

# Minimal English function-word list; selected by id so the choice is
# recorded in persisted indexes.
_ENGLISH_STOPWORDS = frozenset(
    """a an and are as at be but by for if in into is it no not of on or
    such that the their then there these they this to was will with""".split()
)

STOPWORD_LISTS: dict[str, frozenset[str]] = {
    "none": frozenset(),
    "english": _ENGLISH_STOPWORDS,
}


@dataclass(frozen=True)
class AnalyzerConfig:
    lowercase: bool = True
    stopwords: str = "none"

    def __post_init__(self):
        if self.stopwords not in STOPWORD_LISTS:
            raise ValueError(f"unknown stop-word list id: {self.stopwords!r}")


def analyze(text: str, config: AnalyzerConfig = AnalyzerConfig()) -> list[str]:
    """Split on non-alphanumeric runs, optionally lowercase, drop stop words."""
    tokens = _TOKEN_RE.findall(text)
    if config.lowercase:
        tokens = [t.lower() for t in tokens]
    stop = STOPWORD_LISTS[config.stopwords]
    if stop:
        tokens = [t for t in tokens if t not in stop]
    return tokens
