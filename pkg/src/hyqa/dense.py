"""Dense passage retrieval: pluggable embedders, exact inner-product search.

Neural encoders stay outside the engine; anything that satisfies the
EmbeddingProvider protocol can back the index. The built-in provider is a
signed feature-hashing embedder, deterministic across platforms, which
makes exact-search behavior fully testable without models.
"""

from __future__ import annotations

import hashlib
import json
import struct
from functools import lru_cache
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from ._kernels.select import top_k_all
from .analysis import AnalyzerConfig, analyze
from .corpus import Passage
from .errors import (
    DataError,
    DimensionMismatchError,
    FingerprintMismatchError,
    IndexFormatError,
    ProviderError,
)
from .rankings import Ranking

MAGIC = b"DIDX"
FORMAT_VERSION = 1
_ALIGNMENT = 64

# Fixed seed for the signed hash; part of the on-disk contract, never change.
HASH_PERSON = b"hyqa.hashembed.1"


@runtime_checkable
class EmbeddingProvider(Protocol):
    dim: int
    fingerprint: str

    def embed_query(self, text: str) -> np.ndarray: ...

    def embed_passage(self, title: str, text: str) -> np.ndarray: ...


@lru_cache(maxsize=1 << 20)
def _token_hash(token: str) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, person=HASH_PERSON).digest()
    return int.from_bytes(digest, "big")


def hash_embed(text: str, dim: int, analyzer: AnalyzerConfig = AnalyzerConfig()) -> np.ndarray:
    """Signed feature-hashed bag of words, L2-normalized.

    Each analyzed token lands in bucket hash % dim with sign taken from the
    hash's top bit; empty-after-analysis text gives the zero vector.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    for token in analyze(text, analyzer):
        h = _token_hash(token)
        sign = -1.0 if h >> 63 & 1 else 1.0
        vec[h % dim] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


class HashingEmbedder:
    """Deterministic test-double embedder over analyzed tokens.

    Titles are ignored by default so a query equal to a passage's text
    scores exactly 1.0 against it (both vectors are unit length).
    """

    def __init__(
        self,
        dim: int = 256,
        analyzer: AnalyzerConfig = AnalyzerConfig(),
        include_title: bool = False,
    ):
        self.dim = dim
        self.analyzer = analyzer
        self.include_title = include_title
        self.fingerprint = (
            f"hash-embed/v1 dim={dim} lowercase={analyzer.lowercase} "
            f"stopwords={analyzer.stopwords} title={include_title}"
        )

    def embed_query(self, text: str) -> np.ndarray:
        return hash_embed(text, self.dim, self.analyzer)

    def embed_passage(self, title: str, text: str) -> np.ndarray:
        if self.include_title and title:
            text = f"{title} {text}"
        return hash_embed(text, self.dim, self.analyzer)


def verify_provider(provider: EmbeddingProvider, probe: str = "determinism probe 42") -> None:
    """Reject providers that are not reproducible call-to-call."""
    a = provider.embed_query(probe)
    b = provider.embed_query(probe)
    if len(a) != provider.dim or len(b) != provider.dim:
        raise DimensionMismatchError(
            f"provider returned {len(a)} values, declared dim {provider.dim}"
        )
    if not np.array_equal(np.asarray(a), np.asarray(b)):
        raise ProviderError("provider is not deterministic: repeated embed_query differs")


class DenseIndex:
    """Row-per-passage embedding matrix with exact inner-product search."""

    def __init__(self, matrix: np.ndarray, passage_ids: list[str], provider_fingerprint: str):
        if matrix.shape[0] != len(passage_ids):
            raise ValueError("matrix row count does not match passage id count")
        self.matrix = matrix  # float32, row-major
        self.passage_ids = passage_ids
        self.provider_fingerprint = provider_fingerprint

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return len(self.passage_ids)


def build_dense_index(passages: list[Passage], provider: EmbeddingProvider) -> DenseIndex:
    if not passages:
        raise ValueError("cannot build an index over an empty passage list")
    verify_provider(provider)
    matrix = np.zeros((len(passages), provider.dim), dtype=np.float32)
    for i, passage in enumerate(passages):
        try:
            vec = np.asarray(provider.embed_passage(passage.title, passage.text))
        except Exception as exc:
            raise ProviderError(f"embedding passage {passage.id!r} failed: {exc}") from exc
        if vec.shape != (provider.dim,):
            raise DimensionMismatchError(
                f"passage {passage.id!r}: got vector of length {vec.shape}, "
                f"expected {provider.dim}"
            )
        if not np.all(np.isfinite(vec)):
            raise ProviderError(f"passage {passage.id!r}: non-finite embedding values")
        matrix[i] = vec.astype(np.float32)
    return DenseIndex(matrix, [p.id for p in passages], provider.fingerprint)


def dense_search(index: DenseIndex, query: str, k: int, provider: EmbeddingProvider) -> Ranking:
    """Top-k by inner product, descending; ties by ascending ordinal."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if provider.fingerprint != index.provider_fingerprint:
        raise FingerprintMismatchError(
            f"index built with {index.provider_fingerprint!r}, "
            f"query provider is {provider.fingerprint!r}"
        )
    q = np.asarray(provider.embed_query(query), dtype=np.float32)
    if q.shape != (index.dim,):
        raise DimensionMismatchError(f"query vector length {q.shape} != index dim {index.dim}")
    scores = index.matrix @ q
    return Ranking.from_pairs((index.passage_ids[o], s) for o, s in top_k_all(scores, k))


def inner_products(index: DenseIndex, query_vector: np.ndarray, ordinals) -> np.ndarray:
    """Exact scores for selected ordinals; used for hybrid rescoring."""
    q = np.asarray(query_vector, dtype=np.float32)
    return index.matrix[np.asarray(ordinals, dtype=np.int64)] @ q


# ---------------------------------------------------------------------------
# Persistence: small JSON header then the raw float32 matrix, padded so the
# matrix can be memory-mapped. Layout in docs/file-formats.md.
# ---------------------------------------------------------------------------


def save_dense_index(index: DenseIndex, path: str | Path) -> None:
    header = json.dumps(
        {
            "dim": index.dim,
            "count": len(index),
            "dtype": "float32",
            "fingerprint": index.provider_fingerprint,
            "passage_ids": index.passage_ids,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    prefix = len(MAGIC) + 1 + 4 + len(header)
    pad = (-prefix) % _ALIGNMENT
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes((FORMAT_VERSION,)))
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(b"\x00" * pad)
        fh.write(np.ascontiguousarray(index.matrix).tobytes())


def load_dense_index(path: str | Path, mmap: bool = True) -> DenseIndex:
    with open(path, "rb") as fh:
        head = fh.read(9)
        if head[:4] != MAGIC:
            raise IndexFormatError(f"{path}: not a dense index (bad magic)")
        if head[4] != FORMAT_VERSION:
            raise IndexFormatError(f"{path}: unsupported format version {head[4]}")
        (header_len,) = struct.unpack("<I", head[5:9])
        header = json.loads(fh.read(header_len).decode("utf-8"))
    prefix = 9 + header_len
    offset = prefix + ((-prefix) % _ALIGNMENT)
    shape = (header["count"], header["dim"])
    if mmap:
        matrix = np.memmap(path, dtype=np.float32, mode="r", offset=offset, shape=shape)
    else:
        with open(path, "rb") as fh:
            fh.seek(offset)
            matrix = np.frombuffer(fh.read(), dtype=np.float32).reshape(shape).copy()
    return DenseIndex(matrix, header["passage_ids"], header["fingerprint"])


# ---------------------------------------------------------------------------
# Precomputed-vectors files: a header line {"dim": D}, then one
# {"id": ..., "vector": [...]} record per passage.
# ---------------------------------------------------------------------------


def read_vectors_file(path: str | Path) -> tuple[int, dict[str, np.ndarray]]:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        try:
            dim = int(json.loads(first)["dim"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: bad vectors-file header: {exc}") from exc
        vectors: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                pid, values = record["id"], record["vector"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}: line {lineno}: malformed record ({exc})") from exc
            vec = np.asarray(values, dtype=np.float32)
            if vec.shape != (dim,):
                raise DimensionMismatchError(
                    f"{path}: line {lineno}: vector length {vec.shape[0]} != dim {dim}"
                )
            if pid in vectors:
                raise DataError(f"{path}: duplicate passage id {pid!r}")
            vectors[pid] = vec
    return dim, vectors


def build_dense_index_from_vectors(
    passages: list[Passage], path: str | Path
) -> DenseIndex:
    """Assemble an index from precomputed vectors keyed by passage id."""
    dim, vectors = read_vectors_file(path)
    matrix = np.zeros((len(passages), dim), dtype=np.float32)
    for i, passage in enumerate(passages):
        vec = vectors.get(passage.id)
        if vec is None:
            raise DataError(f"vectors file {path} is missing passage {passage.id!r}")
        matrix[i] = vec
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]
    return DenseIndex(matrix, [p.id for p in passages], f"vectors-file/sha256:{digest}")
