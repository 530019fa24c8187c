"""Reference provider servers speaking the line protocol over stdio.

These wrap the built-in deterministic components so the subprocess path can
be exercised (and demonstrated) without any neural model:

    python -m hyqa.providers.serve embedder --dim 64
    python -m hyqa.providers.serve generator --seed 0
    python -m hyqa.providers.serve reader
"""

from __future__ import annotations

import argparse
import json
import sys

from ..corpus import Passage
from ..dense import HashingEmbedder
from ..reader import LexicalReader
from ..synthgen import MockGenerator


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload) + "\n")
    sys.stdout.flush()


def _passage(message: dict) -> Passage:
    text = message.get("passage", "")
    return Passage(
        id=message.get("passage_id", "inline"),
        doc_id="inline",
        title="",
        text=text,
        position=0,
        word_count=len(text.split()),
    )


def serve(handler, handshake: dict) -> None:
    _emit({"op": "handshake", **handshake})
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            message = json.loads(line)
            response = handler(message)
        except Exception as exc:  # report, keep serving
            response = {"error": str(exc)}
            try:
                response["id"] = json.loads(line).get("id")
            except Exception:
                pass
        _emit(response)


def _embedder_handler(embedder: HashingEmbedder):
    def handle(message: dict) -> dict:
        op = message.get("op")
        if op == "embed_query":
            vec = embedder.embed_query(message["text"])
        elif op == "embed_passage":
            vec = embedder.embed_passage(message.get("title", ""), message["text"])
        else:
            raise ValueError(f"unsupported op {op!r}")
        return {"id": message.get("id"), "vector": vec.tolist()}

    return handle


def _generator_handler(generator: MockGenerator):
    def handle(message: dict) -> dict:
        if message.get("op") != "generate":
            raise ValueError(f"unsupported op {message.get('op')!r}")
        sequences = generator.generate(
            message["text"],
            int(message.get("n", 5)),
            int(message.get("k", 10)),
            float(message.get("p", 0.95)),
        )
        return {"id": message.get("id"), "sequences": sequences}

    return handle


def _reader_handler(reader: LexicalReader):
    def handle(message: dict) -> dict:
        op = message.get("op")
        if op == "read":
            candidate = reader.read(message["question"], _passage(message))
            return {
                "id": message.get("id"),
                "text": candidate.text,
                "start": candidate.start,
                "end": candidate.end,
                "score": candidate.reader_score,
            }
        if op == "score_span":
            score = reader.score_span(
                message["question"],
                _passage(message),
                int(message["start"]),
                int(message["end"]),
            )
            return {"id": message.get("id"), "score": score}
        raise ValueError(f"unsupported op {op!r}")

    return handle


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="hyqa.providers.serve")
    parser.add_argument("role", choices=["embedder", "generator", "reader"])
    parser.add_argument("--dim", type=int, default=256)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--malformed-rate", type=float, default=0.0)
    args = parser.parse_args(argv)

    if args.role == "embedder":
        embedder = HashingEmbedder(dim=args.dim)
        serve(_embedder_handler(embedder), {"dim": args.dim, "fingerprint": embedder.fingerprint})
    elif args.role == "generator":
        generator = MockGenerator(seed=args.seed, malformed_rate=args.malformed_rate)
        serve(
            _generator_handler(generator),
            {"fingerprint": f"mock-generator/v1 seed={args.seed}"},
        )
    else:
        reader = LexicalReader()
        serve(_reader_handler(reader), {"fingerprint": reader.fingerprint})
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
