"""Hybrid sparse+dense open-retrieval question answering engine."""

from .analysis import AnalyzerConfig, analyze
from .corpus import (
    Document,
    Passage,
    Sentence,
    chunk_document,
    chunk_for_generation,
    load_corpus,
    segment_sentences,
)
from .datasets import MrcExample, OpenQAExample, dedup_open
from .dense import (
    DenseIndex,
    EmbeddingProvider,
    HashingEmbedder,
    build_dense_index,
    dense_search,
    hash_embed,
)
from .evaluation import EvalReport, evaluate_orqa, evaluate_retrieval
from .fusion import FusionConfig, Ranking, combine, hybrid_search, l2_normalize, overlap_at_k
from .metrics import em, match_at_k, normalize_answer, paired_t_test, token_f1, top_n_f1
from .pipeline import (
    DenseRetriever,
    HybridRetriever,
    OrqaConfig,
    RankedAnswer,
    SparseRetriever,
    answer,
    tune,
)
from .reader import AnswerCandidate, LexicalReader, ReaderProvider, roundtrip_filter
from .sparse import BM25Params, SparseIndex, bm25_score, build_sparse_index, sparse_search
from .synthgen import (
    GeneratorProvider,
    MockGenerator,
    ParsedTriple,
    SyntheticExample,
    generate_examples,
    locate_answer,
    make_ict_pair,
    parse_generated,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyzerConfig",
    "AnswerCandidate",
    "BM25Params",
    "DenseIndex",
    "DenseRetriever",
    "Document",
    "EmbeddingProvider",
    "EvalReport",
    "FusionConfig",
    "GeneratorProvider",
    "HashingEmbedder",
    "HybridRetriever",
    "LexicalReader",
    "MockGenerator",
    "MrcExample",
    "OpenQAExample",
    "OrqaConfig",
    "ParsedTriple",
    "Passage",
    "RankedAnswer",
    "Ranking",
    "ReaderProvider",
    "Sentence",
    "SparseIndex",
    "SparseRetriever",
    "SyntheticExample",
    "analyze",
    "answer",
    "bm25_score",
    "build_dense_index",
    "build_sparse_index",
    "chunk_document",
    "chunk_for_generation",
    "combine",
    "dedup_open",
    "dense_search",
    "em",
    "evaluate_orqa",
    "evaluate_retrieval",
    "generate_examples",
    "hash_embed",
    "hybrid_search",
    "l2_normalize",
    "load_corpus",
    "locate_answer",
    "make_ict_pair",
    "match_at_k",
    "normalize_answer",
    "overlap_at_k",
    "paired_t_test",
    "parse_generated",
    "roundtrip_filter",
    "segment_sentences",
    "sparse_search",
    "token_f1",
    "top_n_f1",
    "tune",
]
