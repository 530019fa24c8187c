"""Hybrid score fusion: normalize sparse and dense scores, combine convexly.

Each side's scores are L2-normalized over the union candidate set for the
query, then mixed as w * sparse + (1 - w) * dense. Candidates seen by only
one retriever are exactly rescored under the other rather than zero-filled,
which keeps the normalization honest; zero-fill remains the fallback when a
rescorer is unavailable (opaque rankings).
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from . import dense as dense_mod
from . import sparse as sparse_mod
from .errors import DataError
from .rankings import Ranking

__all__ = [
    "Ranking",
    "FusionConfig",
    "l2_normalize",
    "combine",
    "hybrid_search",
    "overlap_at_k",
]

DEFAULT_SPARSE_WEIGHT = 0.3
DEFAULT_CANDIDATE_DEPTH = 100


@dataclass(frozen=True)
class FusionConfig:
    sparse_weight: float = DEFAULT_SPARSE_WEIGHT
    candidate_depth: int = DEFAULT_CANDIDATE_DEPTH

    def __post_init__(self):
        if not 0.0 <= self.sparse_weight <= 1.0:
            raise ValueError(f"sparse_weight must be in [0, 1], got {self.sparse_weight}")
        if self.candidate_depth < 1:
            raise ValueError(f"candidate_depth must be >= 1, got {self.candidate_depth}")


def l2_normalize(scores: list[float]) -> list[float]:
    """Divide by the L2 norm of the score vector; zero norm leaves it alone."""
    norm = math.sqrt(math.fsum(s * s for s in scores))
    if norm == 0.0:
        return list(scores)
    return [s / norm for s in scores]


def combine(
    rank_a: Ranking,
    rank_b: Ranking,
    weight_a: float,
    rescore_a: Callable[[str], float] | None = None,
    rescore_b: Callable[[str], float] | None = None,
) -> Ranking:
    """Convex combination of two rankings over their union candidate set.

    A passage missing from one side is rescored by that side's callback when
    given, otherwise assigned 0 before normalization. Ties in the combined
    score break by passage id.
    """
    if not 0.0 <= weight_a <= 1.0:
        raise ValueError(f"weight_a must be in [0, 1], got {weight_a}")
    a = dict(rank_a.entries)
    b = dict(rank_b.entries)
    union = sorted(set(a) | set(b))
    raw_a = [a[pid] if pid in a else (rescore_a(pid) if rescore_a else 0.0) for pid in union]
    raw_b = [b[pid] if pid in b else (rescore_b(pid) if rescore_b else 0.0) for pid in union]
    norm_a = l2_normalize(raw_a)
    norm_b = l2_normalize(raw_b)
    combined = [
        (pid, weight_a * na + (1.0 - weight_a) * nb)
        for pid, na, nb in zip(union, norm_a, norm_b)
    ]
    combined.sort(key=lambda e: (-e[1], e[0]))
    return Ranking.from_pairs(combined)


def hybrid_search(
    sparse_index: sparse_mod.SparseIndex,
    dense_index: dense_mod.DenseIndex,
    provider: dense_mod.EmbeddingProvider,
    query: str,
    k: int,
    config: FusionConfig = FusionConfig(),
) -> Ranking:
    """Fuse BM25 and inner-product retrieval into one top-k ranking.

    Pulls candidate_depth candidates from each retriever, exactly rescores
    each side's missing candidates, combines, and truncates to k.
    """
    if sparse_index.passage_ids != dense_index.passage_ids:
        raise DataError("sparse and dense indexes cover different passage id spaces")
    ordinal = {pid: i for i, pid in enumerate(sparse_index.passage_ids)}

    sparse_rank = sparse_mod.sparse_search(sparse_index, query, config.candidate_depth)
    dense_rank = dense_mod.dense_search(dense_index, query, config.candidate_depth, provider)
    query_vector = np.asarray(provider.embed_query(query), dtype=np.float32)

    def rescore_sparse(pid: str) -> float:
        return sparse_mod.bm25_score(sparse_index, query, ordinal[pid])

    def rescore_dense(pid: str) -> float:
        return float(dense_mod.inner_products(dense_index, query_vector, [ordinal[pid]])[0])

    fused = combine(
        sparse_rank,
        dense_rank,
        config.sparse_weight,
        rescore_a=rescore_sparse,
        rescore_b=rescore_dense,
    )
    return fused.top(k)


def overlap_at_k(rank_a: Ranking, rank_b: Ranking, k: int) -> int:
    """How many passage ids the two top-k lists share."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return len(set(rank_a.top(k).ids()) & set(rank_b.top(k).ids()))
