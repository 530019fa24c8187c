"""End-to-end answering: retrieve top-K, read each passage, combine scores.

Per question, the K retrieval scores and the K reader scores are each
L2-normalized, then mixed as ir_weight * ir + (1 - ir_weight) * mrc; the
top answers come back sorted by the combined score. Grid-search tuning of
(K, ir_weight) against a dev set lives here too.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Protocol

from . import dense as dense_mod
from . import sparse as sparse_mod
from .corpus import Passage
from .datasets import OpenQAExample
from .errors import UnknownPassageError
from .fusion import FusionConfig, hybrid_search, l2_normalize
from .metrics import top_n_f1
from .rankings import Ranking
from .reader import AnswerCandidate, ReaderProvider

DEFAULT_IR_WEIGHT = 0.7
# Tuned retrieval depths: sparse-only works best wide, hybrid narrower.
DEFAULT_K_SPARSE = 100
DEFAULT_K_HYBRID = 40
DEFAULT_K_DENSE = 100


class Retriever(Protocol):
    def search(self, query: str, k: int) -> Ranking: ...

    def passage(self, passage_id: str) -> Passage: ...


class _PassageStore:
    def __init__(self, passages: Sequence[Passage]):
        self._by_id = {p.id: p for p in passages}

    def passage(self, passage_id: str) -> Passage:
        try:
            return self._by_id[passage_id]
        except KeyError:
            raise UnknownPassageError(f"unknown passage id {passage_id!r}") from None


class SparseRetriever(_PassageStore):
    mode = "sparse"

    def __init__(self, index: sparse_mod.SparseIndex, passages: Sequence[Passage]):
        super().__init__(passages)
        self.index = index

    def search(self, query: str, k: int) -> Ranking:
        return sparse_mod.sparse_search(self.index, query, k)


class DenseRetriever(_PassageStore):
    mode = "dense"

    def __init__(
        self,
        index: dense_mod.DenseIndex,
        provider: dense_mod.EmbeddingProvider,
        passages: Sequence[Passage],
    ):
        super().__init__(passages)
        self.index = index
        self.provider = provider

    def search(self, query: str, k: int) -> Ranking:
        return dense_mod.dense_search(self.index, query, k, self.provider)


class HybridRetriever(_PassageStore):
    mode = "hybrid"

    def __init__(
        self,
        sparse_index: sparse_mod.SparseIndex,
        dense_index: dense_mod.DenseIndex,
        provider: dense_mod.EmbeddingProvider,
        passages: Sequence[Passage],
        fusion: FusionConfig = FusionConfig(),
    ):
        super().__init__(passages)
        self.sparse_index = sparse_index
        self.dense_index = dense_index
        self.provider = provider
        self.fusion = fusion

    def search(self, query: str, k: int) -> Ranking:
        return hybrid_search(
            self.sparse_index, self.dense_index, self.provider, query, k, self.fusion
        )


def default_k(mode: str) -> int:
    return {"sparse": DEFAULT_K_SPARSE, "dense": DEFAULT_K_DENSE, "hybrid": DEFAULT_K_HYBRID}[mode]


@dataclass(frozen=True)
class OrqaConfig:
    k: int = DEFAULT_K_HYBRID
    ir_weight: float = DEFAULT_IR_WEIGHT
    mode: str = "hybrid"
    fusion: FusionConfig = field(default_factory=FusionConfig)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.ir_weight <= 1.0:
            raise ValueError(f"ir_weight must be in [0, 1], got {self.ir_weight}")
        if self.mode not in ("sparse", "dense", "hybrid"):
            raise ValueError(f"unknown retriever mode {self.mode!r}")

    @classmethod
    def for_mode(cls, mode: str, **kwargs) -> OrqaConfig:
        kwargs.setdefault("k", default_k(mode))
        return cls(mode=mode, **kwargs)


@dataclass(frozen=True)
class RankedAnswer:
    answer: AnswerCandidate
    ir_score_norm: float
    mrc_score_norm: float
    combined: float


def answer(
    question: str,
    retriever: Retriever,
    reader: ReaderProvider,
    config: OrqaConfig = OrqaConfig(),
    executor: Executor | None = None,
) -> list[RankedAnswer]:
    """Answer a question: retrieve, read, normalize, combine, sort.

    Returns one answer per retrieved passage, best combined score first,
    ties broken by passage id. Empty retrieval yields an empty list.
    """
    ranking = retriever.search(question, config.k)
    if len(ranking) == 0:
        return []
    passages = [retriever.passage(pid) for pid, _ in ranking]
    if executor is not None:
        candidates = list(executor.map(lambda p: reader.read(question, p), passages))
    else:
        candidates = [reader.read(question, p) for p in passages]
    ir_norm = l2_normalize([score for _, score in ranking])
    mrc_norm = l2_normalize([c.reader_score for c in candidates])
    ranked = [
        RankedAnswer(
            answer=c,
            ir_score_norm=ir,
            mrc_score_norm=mrc,
            combined=config.ir_weight * ir + (1.0 - config.ir_weight) * mrc,
        )
        for c, ir, mrc in zip(candidates, ir_norm, mrc_norm)
    ]
    ranked.sort(key=lambda r: (-r.combined, r.answer.passage_id))
    return ranked


PipelineFn = Callable[[str], list[RankedAnswer]]


def tune(
    dev_set: Sequence[OpenQAExample],
    pipeline_factory: Callable[[int, float], PipelineFn],
    weight_grid: Sequence[float],
    k_grid: Sequence[int],
    objective: Callable[[PipelineFn, Sequence[OpenQAExample]], float] | None = None,
    mode: str = "hybrid",
) -> tuple[OrqaConfig, float]:
    """Exhaustive grid search over (K, ir_weight); default objective Top-1 F1.

    Returns the winning config and its objective value; ties prefer the
    smaller K, then the smaller weight.
    """
    if not dev_set:
        raise ValueError("dev set is empty")
    if not weight_grid or not k_grid:
        raise ValueError("grids must be non-empty")
    score_fn = objective or _mean_top1_f1
    best: tuple[int, float, float] | None = None
    for k in sorted(k_grid):
        for weight in sorted(weight_grid):
            score = score_fn(pipeline_factory(k, weight), dev_set)
            if best is None or score > best[2]:
                best = (k, weight, score)
    assert best is not None
    return OrqaConfig(k=best[0], ir_weight=best[1], mode=mode), best[2]


def _mean_top1_f1(pipeline: PipelineFn, dev_set: Sequence[OpenQAExample]) -> float:
    total = math.fsum(
        top_n_f1([r.answer.text for r in pipeline(ex.question)], ex.answers, 1)
        for ex in dev_set
    )
    return total / len(dev_set)
