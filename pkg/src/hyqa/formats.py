"""File formats for pipeline artifacts (see docs/file-formats.md).

Everything row-oriented is line-delimited JSON with sorted keys so a rerun
with identical inputs produces byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Iterable, Iterator
from pathlib import Path

from .corpus import Passage
from .errors import DataError
from .pipeline import RankedAnswer
from .rankings import Ranking
from .reader import DroppedExample
from .synthgen import SyntheticExample


def _dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(_dumps(record) + "\n")


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc


# --- passages ---------------------------------------------------------------


def write_passages(path: str | Path, passages: Iterable[Passage]) -> None:
    write_jsonl(
        path,
        (
            {
                "id": p.id,
                "doc_id": p.doc_id,
                "title": p.title,
                "text": p.text,
                "position": p.position,
                "word_count": p.word_count,
                "hard_split": p.hard_split,
            }
            for p in passages
        ),
    )


def read_passages(path: str | Path) -> list[Passage]:
    out = []
    for lineno, record in read_jsonl(path):
        try:
            out.append(
                Passage(
                    id=record["id"],
                    doc_id=record["doc_id"],
                    title=record.get("title", ""),
                    text=record["text"],
                    position=record["position"],
                    word_count=record["word_count"],
                    hard_split=record.get("hard_split", False),
                )
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}: line {lineno}: malformed passage ({exc})") from exc
    return out


# --- rankings ----------------------------------------------------------------


def write_rankings(path: str | Path, results: Iterable[tuple[str, Ranking]]) -> None:
    """One {query_id, rank, passage_id, score} record per ranked passage."""

    def rows():
        for query_id, ranking in results:
            for rank, (pid, score) in enumerate(ranking, start=1):
                yield {
                    "query_id": query_id,
                    "rank": rank,
                    "passage_id": pid,
                    "score": score,
                }

    write_jsonl(path, rows())


def write_trec_run(path: str | Path, results: Iterable[tuple[str, Ranking]], tag: str) -> None:
    """TREC run file: qid Q0 pid rank score tag."""
    with open(path, "w", encoding="utf-8") as fh:
        for query_id, ranking in results:
            for rank, (pid, score) in enumerate(ranking, start=1):
                fh.write(f"{query_id} Q0 {pid} {rank} {score:.6f} {tag}\n")


def read_rankings(path: str | Path) -> dict[str, Ranking]:
    """Read a JSONL or TREC run file back into per-query rankings."""
    per_query: dict[str, list[tuple[int, str, float]]] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.lstrip().startswith("{"):
            record = json.loads(line)
            try:
                qid, rank = record["query_id"], int(record["rank"])
                pid, score = record["passage_id"], float(record["score"])
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}: line {lineno}: malformed ranking ({exc})") from exc
        else:
            parts = line.split()
            if len(parts) != 6:
                raise DataError(f"{path}: line {lineno}: expected 6 TREC columns")
            qid, _, pid, rank, score = parts[0], parts[1], parts[2], int(parts[3]), float(parts[4])
        per_query.setdefault(qid, []).append((rank, pid, score))
    return {
        qid: Ranking.from_pairs((pid, score) for _, pid, score in sorted(rows))
        for qid, rows in per_query.items()
    }


# --- synthetic examples -------------------------------------------------------


def example_record(example: SyntheticExample) -> dict:
    record = {
        "passage_id": example.passage_id,
        "question": example.question,
        "answer_text": example.answer_text,
        "answer_start": example.answer_start,
        "sentence_start": example.sentence_span[0],
        "sentence_end": example.sentence_span[1],
        "ambiguous": example.ambiguous,
    }
    if example.roundtrip_score is not None:
        record["roundtrip_score"] = example.roundtrip_score
    return record


def write_retrieval_pairs(path: str | Path, examples: Iterable[SyntheticExample]) -> None:
    write_jsonl(
        path,
        (
            {"question": e.question, "positive_passage_id": e.passage_id}
            for e in examples
        ),
    )


def write_mrc_examples(path: str | Path, examples: Iterable[SyntheticExample]) -> None:
    write_jsonl(path, (example_record(e) for e in examples))


def read_mrc_examples(path: str | Path) -> list[SyntheticExample]:
    out = []
    for lineno, record in read_jsonl(path):
        try:
            out.append(
                SyntheticExample(
                    passage_id=record["passage_id"],
                    question=record["question"],
                    answer_text=record["answer_text"],
                    answer_start=record["answer_start"],
                    sentence_span=(
                        record.get("sentence_start", record["answer_start"]),
                        record.get(
                            "sentence_end",
                            record["answer_start"] + len(record["answer_text"]),
                        ),
                    ),
                    roundtrip_score=record.get("roundtrip_score"),
                    ambiguous=record.get("ambiguous", False),
                )
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}: line {lineno}: malformed example ({exc})") from exc
    return out


def write_dropped(path: str | Path, dropped: Iterable[DroppedExample]) -> None:
    write_jsonl(
        path,
        ({**example_record(d.example), "reason": d.reason} for d in dropped),
    )


# --- answers -----------------------------------------------------------------


def write_answers(path: str | Path, results: Iterable[tuple[str, list[RankedAnswer]]]) -> None:
    """Per ranked answer: question id, rank, span text, and all three scores."""

    def rows():
        for question_id, ranked in results:
            for rank, r in enumerate(ranked, start=1):
                yield {
                    "question_id": question_id,
                    "rank": rank,
                    "answer": r.answer.text,
                    "passage_id": r.answer.passage_id,
                    "combined": r.combined,
                    "ir_score": r.ir_score_norm,
                    "mrc_score": r.mrc_score_norm,
                }

    write_jsonl(path, rows())


# --- manifests ----------------------------------------------------------------


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    output_path: str | Path,
    command: str,
    config: dict,
    input_paths: Iterable[str | Path],
    seed: int | None = None,
) -> Path:
    """Record everything needed to reproduce a run next to its output."""
    from . import __version__

    config_blob = _dumps(config)
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "config_hash": hashlib.sha256(config_blob.encode("utf-8")).hexdigest(),
        "inputs": {str(p): file_digest(p) for p in sorted(map(str, input_paths))},
        "seed": seed,
    }
    path = Path(str(output_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path
