"""The Ranking value type shared by every retrieval stage."""

from __future__ import annotations

import math
from collections.abc import Iterator
from dataclasses import dataclass


@dataclass(frozen=True)
class Ranking:
    """An ordered list of (passage_id, score), best first.

    Invariants checked at construction: scores finite and non-increasing,
    passage ids unique.
    """

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        prev = math.inf
        seen: set[str] = set()
        for pid, score in self.entries:
            if not math.isfinite(score):
                raise ValueError(f"non-finite score for {pid!r}")
            if score > prev:
                raise ValueError("scores must be non-increasing")
            if pid in seen:
                raise ValueError(f"duplicate passage id {pid!r}")
            seen.add(pid)
            prev = score

    @classmethod
    def from_pairs(cls, pairs) -> Ranking:
        return cls(tuple((pid, float(score)) for pid, score in pairs))

    def ids(self) -> list[str]:
        return [pid for pid, _ in self.entries]

    def top(self, k: int) -> Ranking:
        return Ranking(self.entries[:k])

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[str, float]]:
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]
