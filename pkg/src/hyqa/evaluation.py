"""Dataset-level evaluation reports for retrieval and end-to-end answering."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

from .datasets import OpenQAExample
from .metrics import match_at_k, top_n_f1
from .pipeline import PipelineFn, Retriever


@dataclass(frozen=True)
class EvalReport:
    """Per-query scores plus their means, keyed by metric name."""

    task: str
    system: str
    metric_names: tuple[str, ...]
    per_query: tuple[tuple[str, dict[str, float]], ...]

    @property
    def aggregates(self) -> dict[str, float]:
        n = len(self.per_query)
        return {
            name: (math.fsum(scores[name] for _, scores in self.per_query) / n if n else 0.0)
            for name in self.metric_names
        }

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "system": self.system,
            "metrics": {k: round(v, 6) for k, v in self.aggregates.items()},
            "num_queries": len(self.per_query),
            "per_query": [
                {"question_id": qid, **{k: round(v, 6) for k, v in scores.items()}}
                for qid, scores in self.per_query
            ],
        }

    def render_table(self) -> str:
        """Aligned text table: one row per system, one column per metric."""
        agg = self.aggregates
        headers = ["System"] + list(self.metric_names)
        row = [self.system] + [f"{agg[name] * 100:.1f}" for name in self.metric_names]
        widths = [max(len(h), len(v)) for h, v in zip(headers, row)]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
            "  ".join("-" * w for w in widths),
            "  ".join(v.ljust(w) for v, w in zip(row, widths)),
        ]
        return "\n".join(lines) + "\n"


def evaluate_retrieval(
    dataset: Sequence[OpenQAExample],
    retriever: Retriever,
    ks: Sequence[int] = (20, 40, 100),
) -> EvalReport:
    """Match@k over a dataset: does any top-k passage contain a gold answer."""
    if not dataset:
        raise ValueError("dataset is empty")
    ks = sorted(ks)
    per_query = []
    for example in dataset:
        ranking = retriever.search(example.question, max(ks))
        scores = {
            f"M@{k}": float(match_at_k(ranking, example.answers, k, retriever.passage))
            for k in ks
        }
        per_query.append((example.question_id, scores))
    names = tuple(f"M@{k}" for k in ks)
    return EvalReport("retrieval", _system_name(retriever), names, tuple(per_query))


def evaluate_orqa(
    dataset: Sequence[OpenQAExample],
    pipeline: PipelineFn,
    ns: Sequence[int] = (1, 5),
    system: str = "orqa",
) -> EvalReport:
    """Top-n F1 of an answering pipeline over an open dataset."""
    if not dataset:
        raise ValueError("dataset is empty")
    ns = sorted(ns)
    per_query = []
    for example in dataset:
        texts = [ranked.answer.text for ranked in pipeline(example.question)]
        scores = {f"Top-{n}": top_n_f1(texts, example.answers, n) for n in ns}
        per_query.append((example.question_id, scores))
    names = tuple(f"Top-{n}" for n in ns)
    return EvalReport("orqa", system, names, tuple(per_query))


def _system_name(retriever: Retriever) -> str:
    return getattr(retriever, "mode", type(retriever).__name__)
