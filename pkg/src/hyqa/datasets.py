"""Evaluation datasets: reading-comprehension and open-retrieval formats.

MRC examples pair a question with an aligned passage and answer offsets;
open-retrieval examples keep only the question and its acceptable answer
strings. dedup_open converts the former to the latter, merging duplicate
questions and pooling their answers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError
from .metrics import normalize_answer


@dataclass(frozen=True)
class MrcAnswer:
    text: str
    start: int | None = None


@dataclass(frozen=True)
class MrcExample:
    question: str
    answers: tuple[MrcAnswer, ...]
    passage_id: str | None = None
    context: str | None = None
    id: str | None = None

    def __post_init__(self):
        if self.context is not None:
            for answer in self.answers:
                if answer.start is None:
                    continue
                end = answer.start + len(answer.text)
                if self.context[answer.start : end] != answer.text:
                    raise DataError(
                        f"answer offset invariant violated for {self.question!r}: "
                        f"{answer.text!r} at {answer.start}"
                    )


@dataclass(frozen=True)
class OpenQAExample:
    question_id: str
    question: str
    answers: tuple[str, ...]

    def __post_init__(self):
        if not self.answers:
            raise DataError(f"open example {self.question_id!r} has no answers")


def dedup_open(examples: list[MrcExample]) -> list[OpenQAExample]:
    """Merge duplicate questions into open examples pooling all answers.

    Questions are grouped by their normalized form; answer strings are
    deduplicated the same way. First-seen order is preserved for both
    groups and answers.
    """
    groups: dict[str, dict] = {}
    for example in examples:
        key = normalize_answer(example.question)
        group = groups.get(key)
        if group is None:
            group = {
                "id": example.id or f"q{len(groups)}",
                "question": example.question,
                "answers": [],
                "seen": set(),
            }
            groups[key] = group
        for answer in example.answers:
            akey = normalize_answer(answer.text)
            if akey not in group["seen"]:
                group["seen"].add(akey)
                group["answers"].append(answer.text)
    return [
        OpenQAExample(g["id"], g["question"], tuple(g["answers"]))
        for g in groups.values()
    ]


def load_open_dataset(path: str | Path) -> list[OpenQAExample]:
    """Line-delimited {question_id, question, answers: [str, ...]} records."""
    out: list[OpenQAExample] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                out.append(
                    OpenQAExample(
                        question_id=str(record["question_id"]),
                        question=record["question"],
                        answers=tuple(record["answers"]),
                    )
                )
            except DataError:
                raise
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}: line {lineno}: malformed record ({exc})") from exc
    return out


def load_mrc_dataset(path: str | Path) -> list[MrcExample]:
    """Line-delimited MRC records with inline context or a passage_id."""
    out: list[MrcExample] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                answers = tuple(
                    MrcAnswer(text=a["text"], start=a.get("start")) for a in record["answers"]
                )
                out.append(
                    MrcExample(
                        question=record["question"],
                        answers=answers,
                        passage_id=record.get("passage_id"),
                        context=record.get("context"),
                        id=record.get("id"),
                    )
                )
            except DataError:
                raise
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}: line {lineno}: malformed record ({exc})") from exc
    return out


def load_squad(path: str | Path) -> list[MrcExample]:
    """Import a SQuAD-style JSON archive as MRC examples with inline context."""
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON: {exc}") from exc
    out: list[MrcExample] = []
    try:
        for article in payload["data"]:
            for paragraph in article["paragraphs"]:
                context = paragraph["context"]
                for qa in paragraph["qas"]:
                    answers = tuple(
                        _squad_answer(context, a) for a in qa.get("answers", [])
                    )
                    if not answers:
                        continue
                    out.append(
                        MrcExample(
                            question=qa["question"],
                            answers=answers,
                            context=context,
                            id=qa.get("id"),
                        )
                    )
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: unexpected archive structure: {exc}") from exc
    return out


def _squad_answer(context: str, record: dict) -> MrcAnswer:
    # Offsets that do not reproduce the answer text are dropped, not trusted.
    text = record["text"]
    start = record.get("answer_start")
    if start is not None and context[start : start + len(text)] != text:
        start = None
    return MrcAnswer(text=text, start=start)
