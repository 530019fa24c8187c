"""Command-line surface: reproducible runs over every pipeline stage.

Option precedence is flags > config file > built-in defaults; every command
that writes an output also writes a <output>.manifest.json recording the
resolved configuration, input digests, and seed. Exit codes: 0 success,
1 usage error, 2 data/provider error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import yaml

from . import __version__, corpus, datasets, dense, evaluation, formats, fusion
from . import pipeline as pipeline_mod
from . import reader as reader_mod
from . import sparse, synthgen
from .errors import DataError, HyqaError
from .providers import SubprocessEmbedder, SubprocessGenerator, SubprocessReader


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the documented contract is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise DataError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise DataError(f"config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise DataError(f"config file {path}: expected a mapping at top level")
    return data


class _Settings:
    """Flags > config file > defaults, recording what was resolved."""

    def __init__(self, args: argparse.Namespace):
        self.args = vars(args)
        self.file = _load_config_file(self.args.get("config"))
        self.resolved: dict = {}

    def get(self, name: str, default=None):
        value = self.args.get(name)
        if value is None:
            value = self.file.get(name, default)
        self.resolved[name] = value
        return value

    def require(self, name: str, flag: str):
        value = self.get(name)
        if value is None:
            raise DataError(f"missing required option {flag} (or config key {name!r})")
        return value


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


# --- provider resolution ------------------------------------------------------


def _resolve_embedder(spec: str, dim: int):
    if spec == "hash":
        return dense.HashingEmbedder(dim=dim)
    return SubprocessEmbedder(spec)


def _resolve_reader(spec: str):
    if spec == "lexical":
        return reader_mod.LexicalReader()
    return SubprocessReader(spec)


def _resolve_generator(spec: str, seed: int, malformed_rate: float):
    if spec == "mock":
        return synthgen.MockGenerator(seed=seed, malformed_rate=malformed_rate)
    return SubprocessGenerator(spec)


def _load_retriever(settings: _Settings, mode: str):
    """Build the requested retriever from index files; returns inputs too."""
    passages_path = settings.require("passages", "--passages")
    passages = formats.read_passages(passages_path)
    inputs = [passages_path]
    sparse_index = dense_index = provider = None
    if mode in ("sparse", "hybrid"):
        path = settings.require("sparse_index", "--sparse-index")
        sparse_index = sparse.load_sparse_index(path)
        _check_id_space(sparse_index.passage_ids, passages, path)
        inputs.append(path)
    if mode in ("dense", "hybrid"):
        path = settings.require("dense_index", "--dense-index")
        dense_index = dense.load_dense_index(path)
        _check_id_space(dense_index.passage_ids, passages, path)
        inputs.append(path)
        provider = _resolve_embedder(
            settings.get("provider", "hash"), dense_index.dim
        )
    if mode == "sparse":
        retriever = pipeline_mod.SparseRetriever(sparse_index, passages)
    elif mode == "dense":
        retriever = pipeline_mod.DenseRetriever(dense_index, provider, passages)
    else:
        fusion_config = fusion.FusionConfig(
            sparse_weight=float(settings.get("weight", fusion.DEFAULT_SPARSE_WEIGHT)),
            candidate_depth=int(settings.get("depth", fusion.DEFAULT_CANDIDATE_DEPTH)),
        )
        retriever = pipeline_mod.HybridRetriever(
            sparse_index, dense_index, provider, passages, fusion_config
        )
    return retriever, inputs


def _check_id_space(index_ids: list[str], passages: list[corpus.Passage], path) -> None:
    if index_ids != [p.id for p in passages]:
        raise DataError(f"index {path} does not cover the given passages file")


def _load_questions(settings: _Settings) -> list[datasets.OpenQAExample]:
    fmt = settings.get("format", "open")
    path = settings.require("questions", "--questions")
    if fmt == "open":
        return datasets.load_open_dataset(path)
    if fmt == "mrc":
        examples = datasets.load_mrc_dataset(path)
    elif fmt == "squad":
        examples = datasets.load_squad(path)
    else:
        raise DataError(f"unknown dataset format {fmt!r}")
    open_examples = datasets.dedup_open(examples)
    print(f"de-duplicated {len(examples)} -> {len(open_examples)} open examples")
    return open_examples


# --- commands -----------------------------------------------------------------


def cmd_ingest(args) -> int:
    settings = _Settings(args)
    input_path = settings.require("input", "--input")
    output = settings.require("output", "--output")
    max_words = int(settings.get("max_words", corpus.DEFAULT_MAX_WORDS))
    docs = corpus.load_corpus(input_path)
    passages = [p for doc in docs for p in corpus.chunk_document(doc, max_words)]
    formats.write_passages(output, passages)
    formats.write_manifest(output, "ingest", settings.resolved, [input_path])
    print(f"ingested {len(docs)} documents -> {len(passages)} passages")
    return 0


def cmd_index_sparse(args) -> int:
    settings = _Settings(args)
    passages_path = settings.require("passages", "--passages")
    out = settings.require("out", "--out")
    params = sparse.BM25Params(
        k1=float(settings.get("k1", sparse.DEFAULT_K1)),
        b=float(settings.get("b", sparse.DEFAULT_B)),
    )
    analyzer = _analyzer_from(settings)
    passages = formats.read_passages(passages_path)
    index = sparse.build_sparse_index(passages, params, analyzer)
    sparse.save_sparse_index(index, out)
    formats.write_manifest(out, "index-sparse", settings.resolved, [passages_path])
    print(f"indexed {len(index)} passages, {len(index.postings)} terms -> {out}")
    return 0


def _analyzer_from(settings: _Settings):
    from .analysis import AnalyzerConfig

    lowercase = settings.get("lowercase", True)
    stopwords = settings.get("stopwords", "none")
    return AnalyzerConfig(lowercase=bool(lowercase), stopwords=stopwords)


def cmd_index_dense(args) -> int:
    settings = _Settings(args)
    passages_path = settings.require("passages", "--passages")
    out = settings.require("out", "--out")
    spec = settings.get("provider", "hash")
    passages = formats.read_passages(passages_path)
    inputs = [passages_path]
    if spec != "hash" and Path(spec).is_file() and not os.access(spec, os.X_OK):
        index = dense.build_dense_index_from_vectors(passages, spec)
        inputs.append(spec)
    else:
        provider = _resolve_embedder(spec, int(settings.get("dim", 256)))
        index = dense.build_dense_index(passages, provider)
    dense.save_dense_index(index, out)
    formats.write_manifest(out, "index-dense", settings.resolved, inputs)
    print(f"indexed {len(index)} passages at dim {index.dim} -> {out}")
    return 0


def _load_search_backend(settings: _Settings, mode: str):
    """Index-only search function; no passages file needed just to rank."""
    inputs = []
    sparse_index = dense_index = provider = None
    if mode in ("sparse", "hybrid"):
        path = settings.require("sparse_index", "--sparse-index")
        sparse_index = sparse.load_sparse_index(path)
        inputs.append(path)
    if mode in ("dense", "hybrid"):
        path = settings.require("dense_index", "--dense-index")
        dense_index = dense.load_dense_index(path)
        inputs.append(path)
        provider = _resolve_embedder(settings.get("provider", "hash"), dense_index.dim)
    if mode == "sparse":
        search = lambda q, k: sparse.sparse_search(sparse_index, q, k)  # noqa: E731
    elif mode == "dense":
        search = lambda q, k: dense.dense_search(dense_index, q, k, provider)  # noqa: E731
    else:
        config = fusion.FusionConfig(
            sparse_weight=float(settings.get("weight", fusion.DEFAULT_SPARSE_WEIGHT)),
            candidate_depth=int(settings.get("depth", fusion.DEFAULT_CANDIDATE_DEPTH)),
        )
        search = lambda q, k: fusion.hybrid_search(  # noqa: E731
            sparse_index, dense_index, provider, q, k, config
        )
    return search, inputs


def cmd_search(args) -> int:
    settings = _Settings(args)
    mode = settings.get("mode", "sparse")
    if mode not in ("sparse", "dense", "hybrid"):
        raise DataError(f"unknown mode {mode!r}")
    search, inputs = _load_search_backend(settings, mode)
    k = int(settings.get("k", 20))

    if settings.get("query") is not None:
        queries = [("q0", settings.get("query"))]
    else:
        examples = _load_questions(settings)
        queries = [(ex.question_id, ex.question) for ex in examples]
        inputs.append(settings.resolved["questions"])

    results = [(qid, search(text, k)) for qid, text in queries]
    out = settings.get("out")
    if out:
        if settings.get("run_format", "jsonl") == "trec":
            formats.write_trec_run(out, results, tag=settings.get("tag", "hyqa"))
        else:
            formats.write_rankings(out, results)
        formats.write_manifest(out, "search", settings.resolved, inputs)
    else:
        for qid, ranking in results:
            for rank, (pid, score) in enumerate(ranking, start=1):
                print(f"{qid}\t{rank}\t{pid}\t{score:.6f}")
    return 0


def cmd_generate_synthetic(args) -> int:
    settings = _Settings(args)
    passages_path = settings.require("passages", "--passages")
    pairs_out = settings.require("pairs_out", "--pairs-out")
    mrc_out = settings.require("mrc_out", "--mrc-out")
    seed = int(settings.get("seed", 0))
    provider = _resolve_generator(
        settings.get("provider", "mock"),
        seed=seed,
        malformed_rate=float(settings.get("malformed_rate", 0.0)),
    )
    passages = formats.read_passages(passages_path)
    examples, stats = synthgen.generate_examples(
        passages,
        provider,
        n_per_passage=int(settings.get("n", synthgen.DEFAULT_N_PER_PASSAGE)),
        k=int(settings.get("top_k", synthgen.DEFAULT_TOP_K)),
        p=float(settings.get("top_p", synthgen.DEFAULT_TOP_P)),
    )
    formats.write_retrieval_pairs(pairs_out, examples)
    formats.write_mrc_examples(mrc_out, examples)
    formats.write_manifest(mrc_out, "generate-synthetic", settings.resolved, [passages_path], seed)
    print(
        f"kept {stats.kept}/{stats.generated} generated sequences "
        f"(parse errors {stats.parse_errors}, localization errors "
        f"{stats.localization_errors}, ambiguous {stats.ambiguous_answers})"
    )
    return 0


def cmd_filter_roundtrip(args) -> int:
    settings = _Settings(args)
    examples_path = settings.require("examples", "--examples")
    passages_path = settings.require("passages", "--passages")
    kept_out = settings.require("kept", "--kept")
    dropped_out = settings.require("dropped", "--dropped")
    threshold = float(settings.get("threshold", reader_mod.DEFAULT_THRESHOLD))
    provider = _resolve_reader(settings.get("reader", "lexical"))
    examples = formats.read_mrc_examples(examples_path)
    passages = {p.id: p for p in formats.read_passages(passages_path)}
    result = reader_mod.roundtrip_filter(
        examples, provider, passages, t=threshold, strict=bool(settings.get("strict", False))
    )
    formats.write_mrc_examples(kept_out, result.kept)
    formats.write_dropped(dropped_out, result.dropped)
    formats.write_manifest(
        kept_out, "filter-roundtrip", settings.resolved, [examples_path, passages_path]
    )
    print(f"kept {len(result.kept)}, dropped {len(result.dropped)} (t={threshold})")
    return 0


def _orqa_pipeline(settings: _Settings):
    mode = settings.get("mode", "hybrid")
    retriever, inputs = _load_retriever(settings, mode)
    provider = _resolve_reader(settings.get("reader", "lexical"))
    config = pipeline_mod.OrqaConfig(
        k=int(settings.get("k", pipeline_mod.default_k(mode))),
        ir_weight=float(settings.get("ir_weight", pipeline_mod.DEFAULT_IR_WEIGHT)),
        mode=mode,
    )
    return retriever, provider, config, inputs


def cmd_run_orqa(args) -> int:
    settings = _Settings(args)
    retriever, provider, config, inputs = _orqa_pipeline(settings)
    examples = _load_questions(settings)
    inputs.append(settings.resolved["questions"])
    out = settings.require("out", "--out")
    threads = int(settings.get("threads", 0)) or (os.cpu_count() or 1)
    results = []
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for example in examples:
            ranked = pipeline_mod.answer(
                example.question, retriever, provider, config, executor=pool
            )
            results.append((example.question_id, ranked))
    formats.write_answers(out, results)
    formats.write_manifest(out, "run-orqa", settings.resolved, inputs)
    print(f"answered {len(results)} questions -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    settings = _Settings(args)
    task = settings.get("task", "retrieval")
    examples = _load_questions(settings)
    if task == "retrieval":
        mode = settings.get("mode", "sparse")
        retriever, inputs = _load_retriever(settings, mode)
        ks = settings.get("ks") or [20, 40, 100]
        report = evaluation.evaluate_retrieval(examples, retriever, ks=ks)
    elif task == "orqa":
        retriever, provider, config, inputs = _orqa_pipeline(settings)
        ns = settings.get("ns") or [1, 5]
        threads = int(settings.get("threads", 0)) or (os.cpu_count() or 1)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            def run(question: str):
                return pipeline_mod.answer(question, retriever, provider, config, executor=pool)

            report = evaluation.evaluate_orqa(
                examples, run, ns=ns, system=f"{config.mode} k={config.k}"
            )
    else:
        raise DataError(f"unknown task {task!r}")
    inputs.append(settings.resolved["questions"])
    print(report.render_table(), end="")
    report_out = settings.get("report")
    if report_out:
        import json

        Path(report_out).write_text(
            json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        formats.write_manifest(report_out, "evaluate", settings.resolved, inputs)
    table_out = settings.get("table")
    if table_out:
        Path(table_out).write_text(report.render_table(), encoding="utf-8")
    return 0


def cmd_tune(args) -> int:
    settings = _Settings(args)
    examples = _load_questions(settings)
    mode = settings.get("mode", "hybrid")
    retriever, inputs = _load_retriever(settings, mode)
    provider = _resolve_reader(settings.get("reader", "lexical"))
    k_grid = settings.get("k_grid") or [20, 40, 100]
    weight_grid = settings.get("weight_grid") or [0.0, 0.3, 0.5, 0.7, 1.0]

    def factory(k: int, ir_weight: float):
        config = pipeline_mod.OrqaConfig(k=k, ir_weight=ir_weight, mode=mode)

        def run(question: str):
            return pipeline_mod.answer(question, retriever, provider, config)

        return run

    best, score = pipeline_mod.tune(examples, factory, weight_grid, k_grid, mode=mode)
    print(f"best: K={best.k} ir_weight={best.ir_weight} (objective {score:.4f})")
    out = settings.get("out")
    if out:
        import json

        Path(out).write_text(
            json.dumps(
                {"k": best.k, "ir_weight": best.ir_weight, "mode": mode, "objective": score},
                sort_keys=True,
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )
        inputs.append(settings.resolved["questions"])
        formats.write_manifest(out, "tune", settings.resolved, inputs)
    return 0


def cmd_overlap(args) -> int:
    settings = _Settings(args)
    run_a = settings.require("run_a", "--run-a")
    run_b = settings.require("run_b", "--run-b")
    k = int(settings.get("k", 100))
    rankings_a = formats.read_rankings(run_a)
    rankings_b = formats.read_rankings(run_b)
    shared = sorted(set(rankings_a) & set(rankings_b))
    if not shared:
        raise DataError("the two run files share no query ids")
    overlaps = [fusion.overlap_at_k(rankings_a[qid], rankings_b[qid], k) for qid in shared]
    for qid, value in zip(shared, overlaps):
        print(f"{qid}\t{value}")
    print(f"mean overlap@{k}: {sum(overlaps) / len(overlaps):.2f} over {len(shared)} queries")
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hyqa", description=__doc__)
    parser.add_argument("--version", action="version", version=f"hyqa {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="YAML config file; flags override its keys")
        return p

    p = add("ingest", cmd_ingest, "split a corpus file into passages")
    p.add_argument("--input")
    p.add_argument("--max-words", type=int, dest="max_words")
    p.add_argument("--output")

    p = add("index-sparse", cmd_index_sparse, "build the BM25 index")
    p.add_argument("--passages")
    p.add_argument("--out")
    p.add_argument("--k1", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--lowercase", action=argparse.BooleanOptionalAction)
    p.add_argument("--stopwords", choices=["none", "english"])

    p = add("index-dense", cmd_index_dense, "build the dense index")
    p.add_argument("--passages")
    p.add_argument("--provider", help="'hash', a vectors file, or a provider command")
    p.add_argument("--dim", type=int)
    p.add_argument("--out")

    p = add("search", cmd_search, "query an index")
    p.add_argument("--mode", choices=["sparse", "dense", "hybrid"])
    p.add_argument("--passages")
    p.add_argument("--sparse-index", "--index", dest="sparse_index")
    p.add_argument("--dense-index", dest="dense_index")
    p.add_argument("--provider")
    p.add_argument("--query")
    p.add_argument("--questions")
    p.add_argument("--format", choices=["open", "mrc", "squad"])
    p.add_argument("--k", type=int)
    p.add_argument("--weight", type=float, help="sparse weight in hybrid fusion")
    p.add_argument("--depth", type=int, help="per-retriever candidate depth")
    p.add_argument("--out")
    p.add_argument("--run-format", choices=["jsonl", "trec"], dest="run_format")
    p.add_argument("--tag")

    p = add("generate-synthetic", cmd_generate_synthetic, "make synthetic QA examples")
    p.add_argument("--passages")
    p.add_argument("--provider", help="'mock' or a generator provider command")
    p.add_argument("--n", type=int, help="examples requested per passage")
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument("--top-p", type=float, dest="top_p")
    p.add_argument("--seed", type=int)
    p.add_argument("--malformed-rate", type=float, dest="malformed_rate")
    p.add_argument("--pairs-out", dest="pairs_out")
    p.add_argument("--mrc-out", dest="mrc_out")

    p = add("filter-roundtrip", cmd_filter_roundtrip, "drop low-scoring synthetic examples")
    p.add_argument("--examples")
    p.add_argument("--passages")
    p.add_argument("--reader", help="'lexical' or a reader provider command")
    p.add_argument("--threshold", type=float)
    p.add_argument("--strict", action=argparse.BooleanOptionalAction)
    p.add_argument("--kept")
    p.add_argument("--dropped")

    p = add("run-orqa", cmd_run_orqa, "answer questions end to end")
    _add_pipeline_options(p)
    p.add_argument("--out")

    p = add("evaluate", cmd_evaluate, "score retrieval or answering on a dataset")
    p.add_argument("--task", choices=["retrieval", "orqa"])
    _add_pipeline_options(p)
    p.add_argument("--ks", type=_int_list, help="comma-separated Match@k cutoffs")
    p.add_argument("--ns", type=_int_list, help="comma-separated Top-n cutoffs")
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--table", help="write the text table here")

    p = add("tune", cmd_tune, "grid-search K and the IR weight on a dev set")
    _add_pipeline_options(p)
    p.add_argument("--k-grid", type=_int_list, dest="k_grid")
    p.add_argument("--weight-grid", type=_float_list, dest="weight_grid")
    p.add_argument("--out")

    p = add("overlap", cmd_overlap, "count shared passages between two run files")
    p.add_argument("--run-a", dest="run_a")
    p.add_argument("--run-b", dest="run_b")
    p.add_argument("--k", type=int)

    return parser


def _add_pipeline_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--questions")
    p.add_argument("--format", choices=["open", "mrc", "squad"])
    p.add_argument("--mode", choices=["sparse", "dense", "hybrid"])
    p.add_argument("--passages")
    p.add_argument("--sparse-index", dest="sparse_index")
    p.add_argument("--dense-index", dest="dense_index")
    p.add_argument("--provider", help="query embedder: 'hash' or a provider command")
    p.add_argument("--reader", help="'lexical' or a reader provider command")
    p.add_argument("--k", type=int)
    p.add_argument("--ir-weight", type=float, dest="ir_weight")
    p.add_argument("--weight", type=float, help="sparse weight in hybrid fusion")
    p.add_argument("--depth", type=int)
    p.add_argument("--threads", type=int)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except HyqaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
