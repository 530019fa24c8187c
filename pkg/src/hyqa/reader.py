"""Reading comprehension interface and roundtrip-consistency filtering.

The neural reader lives behind ReaderProvider; the built-in LexicalReader
is a deterministic unigram-overlap baseline good enough to exercise every
downstream stage. Roundtrip filtering drops synthetic examples whose
candidate answer scores below a threshold under an independent reader.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Protocol

from .analysis import AnalyzerConfig, analyze
from .corpus import Passage, segment_sentences
from .metrics import normalize_answer
from .synthgen import SyntheticExample

DEFAULT_THRESHOLD = 7.0


@dataclass(frozen=True)
class AnswerCandidate:
    """An extracted answer span with its reader score."""

    text: str
    start: int
    end: int
    reader_score: float
    passage_id: str

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError("answer span must be non-empty")


class ReaderProvider(Protocol):
    def read(self, question: str, passage: Passage) -> AnswerCandidate: ...

    def score_span(self, question: str, passage: Passage, start: int, end: int) -> float: ...


class LexicalReader:
    """Answers with the sentence sharing the most distinct unigrams.

    score_span counts shared distinct unigrams between the question and the
    span, so scoring read()'s own span reproduces read()'s score.
    """

    def __init__(self, analyzer: AnalyzerConfig = AnalyzerConfig()):
        self.analyzer = analyzer
        self.fingerprint = (
            f"lexical-reader/v1 lowercase={analyzer.lowercase} stopwords={analyzer.stopwords}"
        )

    def _overlap(self, question: str, text: str) -> int:
        return len(set(analyze(question, self.analyzer)) & set(analyze(text, self.analyzer)))

    def read(self, question: str, passage: Passage) -> AnswerCandidate:
        if not passage.text:
            raise ValueError(f"passage {passage.id!r} is empty")
        sentences = segment_sentences(passage.text)
        best = sentences[0]
        best_score = self._overlap(question, best.text)
        for sentence in sentences[1:]:
            score = self._overlap(question, sentence.text)
            if score > best_score:
                best, best_score = sentence, score
        return AnswerCandidate(
            text=best.text,
            start=best.start,
            end=best.end,
            reader_score=float(best_score),
            passage_id=passage.id,
        )

    def score_span(self, question: str, passage: Passage, start: int, end: int) -> float:
        return float(self._overlap(question, passage.text[start:end]))


@dataclass(frozen=True)
class DroppedExample:
    example: SyntheticExample
    reason: str


@dataclass(frozen=True)
class FilterResult:
    kept: list[SyntheticExample]
    dropped: list[DroppedExample]


def roundtrip_filter(
    examples: list[SyntheticExample],
    reader: ReaderProvider,
    passages: dict[str, Passage],
    t: float = DEFAULT_THRESHOLD,
    strict: bool = False,
) -> FilterResult:
    """Keep examples whose candidate answer scores at least t.

    The score is the reader's score for the *generated* span, not for the
    reader's own best answer; strict additionally requires the reader's top
    answer to match the candidate after normalization. Input order is
    preserved in both partitions; reader failures route to dropped with an
    error tag.
    """
    kept: list[SyntheticExample] = []
    dropped: list[DroppedExample] = []
    for example in examples:
        passage = passages.get(example.passage_id)
        if passage is None:
            dropped.append(DroppedExample(example, "missing_passage"))
            continue
        span = (example.answer_start, example.answer_start + len(example.answer_text))
        try:
            score = float(reader.score_span(example.question, passage, *span))
            if strict:
                predicted = reader.read(example.question, passage)
                if normalize_answer(predicted.text) != normalize_answer(example.answer_text):
                    dropped.append(
                        DroppedExample(replace(example, roundtrip_score=score), "strict_mismatch")
                    )
                    continue
        except Exception as exc:
            dropped.append(DroppedExample(example, f"reader_error: {exc}"))
            continue
        scored = replace(example, roundtrip_score=score)
        if score >= t:
            kept.append(scored)
        else:
            dropped.append(DroppedExample(scored, "below_threshold"))
    return FilterResult(kept, dropped)
