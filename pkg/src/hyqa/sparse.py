"""BM25 inverted-index retrieval.

Scoring follows the Okapi form with the non-negative idf variant
ln(1 + (N - df + 0.5) / (df + 0.5)). Postings are kept as numpy arrays so
query scoring runs through the compiled kernel (or its numpy fallback).
"""

from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from ._kernels.select import top_k_positive
from .analysis import AnalyzerConfig, analyze
from .corpus import Passage
from .errors import IndexFormatError
from .rankings import Ranking

MAGIC = b"SPIX"
FORMAT_VERSION = 1

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75


@dataclass(frozen=True)
class BM25Params:
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if not 0 <= self.b <= 1:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


class SparseIndex:
    """Immutable BM25 index over a fixed passage list."""

    def __init__(
        self,
        postings: dict[str, tuple[np.ndarray, np.ndarray]],
        doc_lengths: np.ndarray,
        passage_ids: list[str],
        params: BM25Params,
        analyzer: AnalyzerConfig,
    ):
        self.postings = postings  # term -> (ordinals int32 asc, tfs float64)
        self.doc_lengths = doc_lengths
        self.passage_ids = passage_ids
        self.params = params
        self.analyzer = analyzer
        self.avg_doc_length = float(doc_lengths.mean())
        # Per-passage denominator constant: k1 * (1 - b + b * len/avg).
        self.length_norm = params.k1 * (
            1.0 - params.b + params.b * (doc_lengths.astype(np.float64) / self.avg_doc_length)
        )

    def __len__(self) -> int:
        return len(self.passage_ids)

    def idf(self, term: str) -> float:
        entry = self.postings.get(term)
        if entry is None:
            return 0.0
        df = len(entry[0])
        n = len(self.passage_ids)
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))


def build_sparse_index(
    passages: list[Passage],
    params: BM25Params = BM25Params(),
    analyzer: AnalyzerConfig = AnalyzerConfig(),
) -> SparseIndex:
    """Tokenize passages and build postings; same analyzer serves queries."""
    if not passages:
        raise ValueError("cannot build an index over an empty passage list")
    by_term: dict[str, list[tuple[int, int]]] = {}
    doc_lengths = np.zeros(len(passages), dtype=np.int32)
    for ordinal, passage in enumerate(passages):
        tokens = analyze(passage.text, analyzer)
        doc_lengths[ordinal] = len(tokens)
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        for term, tf in counts.items():
            by_term.setdefault(term, []).append((ordinal, tf))
    postings = {
        term: (
            np.array([o for o, _ in plist], dtype=np.int32),
            np.array([tf for _, tf in plist], dtype=np.float64),
        )
        for term, plist in by_term.items()
    }
    ids = [p.id for p in passages]
    return SparseIndex(postings, doc_lengths, ids, params, analyzer)


def _accumulate(index: SparseIndex, query: str, scores: np.ndarray) -> None:
    k1_plus_one = index.params.k1 + 1.0
    for term in analyze(query, index.analyzer):
        entry = index.postings.get(term)
        if entry is None:
            continue
        ordinals, tfs = entry
        _kernels.bm25_accumulate(
            ordinals, tfs, index.length_norm, index.idf(term), k1_plus_one, scores
        )


def bm25_score(index: SparseIndex, query: str, passage_ordinal: int) -> float:
    """Score one passage against a query; repeated query terms add up."""
    if not 0 <= passage_ordinal < len(index):
        raise IndexError(f"passage ordinal {passage_ordinal} out of range")
    k1 = index.params.k1
    ln = index.length_norm[passage_ordinal]
    score = 0.0
    for term in analyze(query, index.analyzer):
        entry = index.postings.get(term)
        if entry is None:
            continue
        ordinals, tfs = entry
        pos = int(np.searchsorted(ordinals, passage_ordinal))
        if pos == len(ordinals) or ordinals[pos] != passage_ordinal:
            continue
        tf = tfs[pos]
        score += index.idf(term) * ((tf * (k1 + 1.0)) / (tf + ln))
    return score


def sparse_search(index: SparseIndex, query: str, k: int) -> Ranking:
    """Top-k by BM25, descending; ties by ordinal; zero scores excluded."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores = np.zeros(len(index), dtype=np.float64)
    _accumulate(index, query, scores)
    top = top_k_positive(scores, k)
    return Ranking.from_pairs((index.passage_ids[o], s) for o, s in top)


# ---------------------------------------------------------------------------
# Persistence: versioned binary format, layout documented in
# docs/file-formats.md. Varints are unsigned LEB128; ordinals are
# delta-encoded within each postings list; terms are written sorted so the
# same index always serializes to the same bytes.
# ---------------------------------------------------------------------------


def _write_uvarint(out: io.BufferedIOBase, value: int) -> None:
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.write(bytes((byte | 0x80,)))
        else:
            out.write(bytes((byte,)))
            return


def _read_uvarint(data: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise IndexFormatError("truncated varint")
        byte = data[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7


def save_sparse_index(index: SparseIndex, path: str | Path) -> None:
    header = json.dumps(
        {
            "k1": index.params.k1,
            "b": index.params.b,
            "lowercase": index.analyzer.lowercase,
            "stopwords": index.analyzer.stopwords,
            "passage_ids": index.passage_ids,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes((FORMAT_VERSION,)))
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        buf = io.BytesIO()
        for length in index.doc_lengths:
            _write_uvarint(buf, int(length))
        _write_uvarint(buf, len(index.postings))
        for term in sorted(index.postings):
            ordinals, tfs = index.postings[term]
            raw = term.encode("utf-8")
            _write_uvarint(buf, len(raw))
            buf.write(raw)
            _write_uvarint(buf, len(ordinals))
            prev = 0
            for o, tf in zip(ordinals.tolist(), tfs.tolist()):
                _write_uvarint(buf, o - prev)
                prev = o
                _write_uvarint(buf, int(tf))
        fh.write(buf.getvalue())


def load_sparse_index(path: str | Path) -> SparseIndex:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise IndexFormatError(f"{path}: not a sparse index (bad magic)")
    if blob[4] != FORMAT_VERSION:
        raise IndexFormatError(f"{path}: unsupported format version {blob[4]}")
    (header_len,) = struct.unpack_from("<I", blob, 5)
    pos = 9
    header = json.loads(blob[pos : pos + header_len].decode("utf-8"))
    pos += header_len
    passage_ids = header["passage_ids"]
    doc_lengths = np.zeros(len(passage_ids), dtype=np.int32)
    for i in range(len(passage_ids)):
        doc_lengths[i], pos = _read_uvarint(blob, pos)
    nterms, pos = _read_uvarint(blob, pos)
    postings: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for _ in range(nterms):
        raw_len, pos = _read_uvarint(blob, pos)
        term = blob[pos : pos + raw_len].decode("utf-8")
        pos += raw_len
        df, pos = _read_uvarint(blob, pos)
        ordinals = np.zeros(df, dtype=np.int32)
        tfs = np.zeros(df, dtype=np.float64)
        prev = 0
        for i in range(df):
            delta, pos = _read_uvarint(blob, pos)
            prev += delta
            ordinals[i] = prev
            tf, pos = _read_uvarint(blob, pos)
            tfs[i] = tf
        postings[term] = (ordinals, tfs)
    params = BM25Params(k1=header["k1"], b=header["b"])
    analyzer = AnalyzerConfig(lowercase=header["lowercase"], stopwords=header["stopwords"])
    return SparseIndex(postings, doc_lengths, passage_ids, params, analyzer)
