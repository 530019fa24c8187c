"""Synthetic QA example construction.

A generator emits raw sequences of the form

    <first word> <last word> [SEP] <answer text> [SEP] <question>

where the two words identify the answer's sentence inside the source
passage. Parsing and localization turn such sequences into aligned
(passage, question, answer span) examples; a template-based mock generator
ships so the full pipeline runs without any neural dependency. Inverse
cloze pairs for retriever supervision are built here too.
"""

from __future__ import annotations

import hashlib
import random
import re
import string
from dataclasses import dataclass
from typing import Protocol

from .corpus import Passage, segment_sentences
from .errors import LocalizationError, ParseError, ProviderError

SEPARATOR = "[SEP]"

DEFAULT_N_PER_PASSAGE = 5
DEFAULT_TOP_K = 10
DEFAULT_TOP_P = 0.95

_EDGE_PUNCT = string.punctuation + "‘’“”"


@dataclass(frozen=True)
class ParsedTriple:
    s_first: str
    s_last: str
    answer_text: str
    question: str


@dataclass(frozen=True)
class SyntheticExample:
    """A localized (passage, question, answer span) triple.

    answer_start is a character offset into the passage text; the answer
    always lies inside sentence_span. ambiguous marks answers that occur
    more than once within their sentence (first occurrence taken).
    """

    passage_id: str
    question: str
    answer_text: str
    answer_start: int
    sentence_span: tuple[int, int]
    roundtrip_score: float | None = None
    ambiguous: bool = False


class GeneratorProvider(Protocol):
    def generate(self, passage_text: str, n: int, k: int, p: float) -> list[str]: ...


def format_sequence(s_first: str, s_last: str, answer: str, question: str) -> str:
    return f"{s_first} {s_last} {SEPARATOR} {answer} {SEPARATOR} {question}"


def parse_generated(raw: str) -> ParsedTriple:
    """Split a generated sequence on its separators; reject anything malformed."""
    parts = raw.split(SEPARATOR)
    if len(parts) != 3:
        raise ParseError(f"expected exactly 2 separators, found {len(parts) - 1}: {raw!r}")
    anchor, answer, question = (part.strip() for part in parts)
    anchor_words = anchor.split()
    if len(anchor_words) != 2:
        raise ParseError(
            f"sentence anchor must be exactly two words, got {len(anchor_words)}: {anchor!r}"
        )
    if not answer:
        raise ParseError(f"empty answer text: {raw!r}")
    if not question:
        raise ParseError(f"empty question: {raw!r}")
    return ParsedTriple(anchor_words[0], anchor_words[1], answer, question)


def _norm_word(word: str) -> str:
    return word.strip(_EDGE_PUNCT).lower()


def locate_answer(passage: Passage, triple: ParsedTriple) -> SyntheticExample:
    """Anchor the answer inside its passage via the sentence's edge words.

    The first sentence whose first and last words match (case-insensitive,
    edge punctuation stripped) wins; within it the answer is matched exactly
    first, then case-insensitively, in which case the answer text is
    canonicalized to the passage's spelling so the span invariant holds.
    """
    first = _norm_word(triple.s_first)
    last = _norm_word(triple.s_last)
    for sentence in segment_sentences(passage.text):
        words = sentence.text.split()
        if not words or _norm_word(words[0]) != first or _norm_word(words[-1]) != last:
            continue
        answer = triple.answer_text
        offset = sentence.text.find(answer)
        if offset < 0:
            offset = sentence.text.lower().find(answer.lower())
            if offset < 0:
                raise LocalizationError(
                    f"answer {triple.answer_text!r} not found in matched sentence "
                    f"of passage {passage.id!r}"
                )
            answer = sentence.text[offset : offset + len(answer)]
        return SyntheticExample(
            passage_id=passage.id,
            question=triple.question,
            answer_text=answer,
            answer_start=sentence.start + offset,
            sentence_span=(sentence.start, sentence.end),
            ambiguous=sentence.text.count(answer) > 1,
        )
    raise LocalizationError(
        f"no sentence in passage {passage.id!r} starts with {triple.s_first!r} "
        f"and ends with {triple.s_last!r}"
    )


@dataclass
class GenerationStats:
    requested: int = 0
    generated: int = 0
    kept: int = 0
    parse_errors: int = 0
    localization_errors: int = 0
    ambiguous_answers: int = 0
    provider_retries: int = 0


def generate_examples(
    passages: list[Passage],
    provider: GeneratorProvider,
    n_per_passage: int = DEFAULT_N_PER_PASSAGE,
    k: int = DEFAULT_TOP_K,
    p: float = DEFAULT_TOP_P,
    max_retries: int = 2,
) -> tuple[list[SyntheticExample], GenerationStats]:
    """Run the generator over every passage; parse and localize its output.

    Malformed or unlocalizable sequences are counted and skipped. Provider
    failures are retried up to max_retries times, then raised. Output order
    is canonical: passage id, then generation index.
    """
    stats = GenerationStats()
    examples: list[SyntheticExample] = []
    for passage in sorted(passages, key=lambda pp: pp.id):
        stats.requested += n_per_passage
        sequences = _generate_with_retry(provider, passage, n_per_passage, k, p, max_retries, stats)
        stats.generated += len(sequences)
        for raw in sequences:
            try:
                example = locate_answer(passage, parse_generated(raw))
            except ParseError:
                stats.parse_errors += 1
                continue
            except LocalizationError:
                stats.localization_errors += 1
                continue
            if example.ambiguous:
                stats.ambiguous_answers += 1
            examples.append(example)
            stats.kept += 1
    return examples, stats


def _generate_with_retry(provider, passage, n, k, p, max_retries, stats) -> list[str]:
    attempts = 0
    while True:
        try:
            return provider.generate(passage.text, n, k, p)
        except Exception as exc:
            attempts += 1
            if attempts > max_retries:
                raise ProviderError(
                    f"generator failed on passage {passage.id!r} "
                    f"after {attempts} attempts: {exc}"
                ) from exc
            stats.provider_retries += 1


def make_ict_pair(passage: Passage, sentence_index: int) -> tuple[str, str]:
    """Mask one sentence out of a passage: (masked sentence, remaining text)."""
    sentences = segment_sentences(passage.text)
    if len(sentences) < 2:
        raise ValueError(
            f"passage {passage.id!r} has {len(sentences)} sentence(s); "
            "need at least 2 to form a pair"
        )
    if not 0 <= sentence_index < len(sentences):
        raise IndexError(f"sentence index {sentence_index} out of range")
    query = sentences[sentence_index].text
    context = " ".join(s.text for i, s in enumerate(sentences) if i != sentence_index)
    return query, context


def sample_ict_pairs(
    passages: list[Passage], rng: random.Random
) -> list[tuple[str, str, str]]:
    """Seeded ICT pairs (passage_id, query, context); short passages skipped."""
    pairs = []
    for passage in passages:
        count = len(segment_sentences(passage.text))
        if count < 2:
            continue
        query, context = make_ict_pair(passage, rng.randrange(count))
        pairs.append((passage.id, query, context))
    return pairs


# ---------------------------------------------------------------------------
# Mock generator: clozes a pseudo-randomly chosen sentence into a wh-question
# so end-to-end runs need no neural sampler. Deterministic in (seed, passage
# text, n, k, p).
# ---------------------------------------------------------------------------

_NUMBER_RE = re.compile(r"\d")


class MockGenerator:
    def __init__(self, seed: int = 0, malformed_rate: float = 0.0):
        self.seed = seed
        self.malformed_rate = malformed_rate

    def _rng(self, passage_text: str, k: int, p: float) -> random.Random:
        key = f"{self.seed}|{k}|{p}|{passage_text}".encode("utf-8")
        digest = hashlib.blake2b(key, digest_size=8).digest()
        return random.Random(int.from_bytes(digest, "big"))

    def generate(self, passage_text: str, n: int, k: int, p: float) -> list[str]:
        sentences = segment_sentences(passage_text)
        if not sentences:
            return []
        rng = self._rng(passage_text, k, p)
        out: list[str] = []
        for _ in range(n):
            sentence = sentences[rng.randrange(len(sentences))]
            seq = self._cloze(sentence.text, rng)
            if seq is None:
                continue
            if self.malformed_rate and rng.random() < self.malformed_rate:
                seq = seq.replace(SEPARATOR, "", 1)
            out.append(seq)
        return out

    def _cloze(self, sentence: str, rng: random.Random) -> str | None:
        matches = list(re.finditer(r"\S+", sentence))
        if len(matches) < 2:
            return None
        start_tok = rng.randrange(len(matches))
        span_len = rng.randint(1, min(4, len(matches) - start_tok))
        span = matches[start_tok : start_tok + span_len]
        answer = sentence[span[0].start() : span[-1].end()]
        if not answer.strip(_EDGE_PUNCT):
            answer = matches[0].group()
        answer_tokens = answer.split()
        if any(_NUMBER_RE.search(t) for t in answer_tokens):
            wh = "How many"
        elif all(t[:1].isupper() for t in answer_tokens):
            wh = "Who"
        else:
            wh = "What"
        rest = [m.group().strip(_EDGE_PUNCT) for m in matches if m not in span]
        rest = [w for w in rest if w]
        body = " ".join(rest) if rest else matches[0].group().strip(_EDGE_PUNCT)
        question = f"{wh} {body}?"
        return format_sequence(matches[0].group(), matches[-1].group(), answer, question)
