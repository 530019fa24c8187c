"""Document ingestion: sentence segmentation and passage chunking.

Documents are split into retrieval passages that stay under a word budget
and align with sentence boundaries. The sentence splitter is rule-based so
the whole corpus pipeline stays deterministic and model-free.
"""

from __future__ import annotations

import json
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusError

DEFAULT_MAX_WORDS = 120
DEFAULT_MAX_GENERATION_TOKENS = 288

_TERMINATORS = frozenset(".!?")

# Tokens that end with '.' but do not end a sentence. Lowercased; leading
# quotes/brackets are stripped before lookup. Single letters followed by a
# period ("J." in "J. Smith") are treated as initials by rule, not listed.
ABBREVIATIONS = frozenset(
    (
        "dr. mr. mrs. ms. prof. rev. hon. st. jr. sr. "
        "fig. figs. eq. eqs. sec. secs. ref. refs. tab. tabs. ch. "
        "no. nos. vol. vols. pp. al. etc. e.g. i.e. cf. ca. approx. vs. "
        "dept. univ. inc. ltd. co. corp. ed. eds."
    ).split()
)

_OPENERS = "\"'([{“‘"


@dataclass(frozen=True)
class Document:
    """A raw source article: the unit the corpus file stores."""

    id: str
    title: str
    text: str

    def __post_init__(self):
        if not self.id:
            raise CorpusError("document id must be non-empty")
        if not self.text:
            raise CorpusError(f"document {self.id!r}: text must be non-empty")


@dataclass(frozen=True)
class Sentence:
    """A sentence with character offsets into its parent text."""

    text: str
    start: int
    end: int


@dataclass(frozen=True)
class Passage:
    """A chunk of a document; the unit of retrieval.

    hard_split marks pieces of a single sentence that exceeded the word
    budget on its own and was cut at the limit.
    """

    id: str
    doc_id: str
    title: str
    text: str
    position: int
    word_count: int
    hard_split: bool = False


def _is_abbreviation(token: str) -> bool:
    token = token.lstrip(_OPENERS).lower()
    if token in ABBREVIATIONS:
        return True
    # Single-letter initials: "J." / "(A."
    return len(token) == 2 and token[0].isalpha() and token[1] == "."


def segment_sentences(text: str) -> list[Sentence]:
    """Split text into sentences using a deterministic rule set.

    A sentence ends at '.', '!' or '?' when the terminator is followed by
    whitespace and the next non-space character is an uppercase letter or a
    digit. A '.' does not end a sentence when the word containing it is a
    known abbreviation or a single-letter initial. Text after the last
    terminator forms a final sentence. Offsets satisfy
    ``text[s.start:s.end] == s.text`` and the gaps between consecutive
    sentences contain only whitespace.
    """
    sentences: list[Sentence] = []
    n = len(text)
    start = _skip_ws(text, 0)
    i = start
    while i < n:
        ch = text[i]
        if ch in _TERMINATORS and i + 1 < n and text[i + 1].isspace():
            nxt = _skip_ws(text, i + 1)
            if nxt < n and (text[nxt].isupper() or text[nxt].isdigit()):
                if ch != "." or not _is_abbreviation(_word_ending_at(text, i)):
                    sentences.append(Sentence(text[start : i + 1], start, i + 1))
                    start = nxt
                    i = nxt
                    continue
        i += 1
    if start < n:
        end = n
        while end > start and text[end - 1].isspace():
            end -= 1
        if end > start:
            sentences.append(Sentence(text[start:end], start, end))
    return sentences


def _skip_ws(text: str, i: int) -> int:
    while i < len(text) and text[i].isspace():
        i += 1
    return i


def _word_ending_at(text: str, i: int) -> str:
    j = i
    while j > 0 and not text[j - 1].isspace():
        j -= 1
    return text[j : i + 1]


def _count_words(text: str) -> int:
    return len(text.split())


def chunk_document(doc: Document, max_words: int = DEFAULT_MAX_WORDS) -> list[Passage]:
    """Greedily pack sentences into passages of at most max_words words.

    A single sentence longer than max_words is hard-split at the word limit
    and every resulting piece is flagged.
    """
    return _pack(doc, max_words, _count_words)


def chunk_for_generation(
    doc: Document,
    max_tokens: int = DEFAULT_MAX_GENERATION_TOKENS,
    count_tokens: Callable[[str], int] | None = None,
) -> list[Passage]:
    """Same packing as chunk_document, measured in pluggable tokenizer units.

    The default counter is whitespace words, a stand-in for subword counts;
    attach a real tokenizer's counter for exact budgets.
    """
    return _pack(doc, max_tokens, count_tokens or _count_words)


def _pack(doc: Document, limit: int, count: Callable[[str], int]) -> list[Passage]:
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    pieces: list[tuple[str, bool]] = []  # (text, hard_split)
    current: list[str] = []
    current_size = 0

    def flush():
        nonlocal current_size
        if current:
            pieces.append((" ".join(current), False))
            current.clear()
            current_size = 0

    for sentence in segment_sentences(doc.text):
        size = count(sentence.text)
        if size > limit:
            flush()
            pieces.extend((p, True) for p in _hard_split(sentence.text, limit, count))
            continue
        if current and current_size + size > limit:
            flush()
        current.append(sentence.text)
        current_size += size
    flush()

    return [
        Passage(
            id=f"{doc.id}#{pos}",
            doc_id=doc.id,
            title=doc.title,
            text=text,
            position=pos,
            word_count=_count_words(text),
            hard_split=flagged,
        )
        for pos, (text, flagged) in enumerate(pieces)
    ]


def _hard_split(text: str, limit: int, count: Callable[[str], int]) -> list[str]:
    words = text.split()
    out: list[str] = []
    group: list[str] = []
    for word in words:
        if group and count(" ".join(group + [word])) > limit:
            out.append(" ".join(group))
            group = []
        group.append(word)
    if group:
        out.append(" ".join(group))
    return out


def load_corpus(path: str | Path) -> list[Document]:
    """Load a line-delimited JSON corpus: one {id, title, text} per line."""
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                doc = Document(
                    id=record["id"],
                    title=record.get("title", ""),
                    text=record["text"],
                )
            except CorpusError as exc:
                raise CorpusError(f"line {lineno}: {exc}") from exc
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusError(f"line {lineno}: malformed record ({exc})") from exc
            if doc.id in seen:
                raise CorpusError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)
            docs.append(doc)
    return docs
