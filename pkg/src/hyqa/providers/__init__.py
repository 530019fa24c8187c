"""Subprocess providers: neural models attach over a line-delimited protocol.

The engine launches the provider command and exchanges one JSON object per
line over its stdin/stdout. The provider speaks first with a handshake
declaring its fingerprint (and embedding dim, when it embeds):

    {"op": "handshake", "dim": 256, "fingerprint": "my-encoder/v3"}

Requests carry an "id" echoed back in the response:

    {"op": "embed_query",   "id": "0", "text": "...", "title": ""}
    {"op": "embed_passage", "id": "1", "text": "...", "title": "..."}
        -> {"id": "...", "vector": [...]}
    {"op": "generate", "id": "2", "text": "...", "n": 5, "k": 10, "p": 0.95}
        -> {"id": "...", "sequences": ["...", ...]}
    {"op": "read", "id": "3", "question": "...", "passage": "...",
     "passage_id": "..."}
        -> {"id": "...", "text": "...", "start": 0, "end": 8, "score": 1.0}
    {"op": "score_span", "id": "4", "question": "...", "passage": "...",
     "start": 0, "end": 8}
        -> {"id": "...", "score": 1.0}

HYQA_PROVIDER_TIMEOUT (seconds, default 30) bounds the wait for the
handshake and for each response line.
"""

from __future__ import annotations

import json
import os
import queue
import shlex
import subprocess
import threading

import numpy as np

from ..corpus import Passage
from ..errors import DimensionMismatchError, ProviderError
from ..reader import AnswerCandidate

TIMEOUT_ENV_VAR = "HYQA_PROVIDER_TIMEOUT"
DEFAULT_TIMEOUT = 30.0


def _timeout() -> float:
    return float(os.environ.get(TIMEOUT_ENV_VAR, DEFAULT_TIMEOUT))


class SubprocessProvider:
    """Shared transport: launch, handshake, request/response, shutdown."""

    def __init__(self, command: str | list[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.command = argv
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ProviderError(f"cannot launch provider {argv!r}: {exc}") from exc
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._pump = threading.Thread(target=self._read_lines, daemon=True)
        self._pump.start()
        self._next_id = 0
        handshake = self._read_message()
        self.fingerprint = handshake.get("fingerprint")
        self.dim = handshake.get("dim")
        if not self.fingerprint:
            raise ProviderError(f"provider {argv!r} handshake lacks a fingerprint")

    def _read_lines(self):
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _read_message(self) -> dict:
        try:
            line = self._lines.get(timeout=_timeout())
        except queue.Empty:
            raise ProviderError(f"provider {self.command!r} timed out") from None
        if line is None:
            raise ProviderError(f"provider {self.command!r} closed its output")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProviderError(f"provider sent invalid JSON: {line!r}") from exc

    def request(self, payload: dict) -> dict:
        request_id = str(self._next_id)
        self._next_id += 1
        payload = {**payload, "id": request_id}
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise ProviderError(f"provider {self.command!r} is gone: {exc}") from exc
        response = self._read_message()
        if "error" in response:
            raise ProviderError(f"provider error: {response['error']}")
        if response.get("id") != request_id:
            raise ProviderError(
                f"provider response id {response.get('id')!r} != request id {request_id!r}"
            )
        return response

    def close(self):
        if self._proc.stdin:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class SubprocessEmbedder(SubprocessProvider):
    """EmbeddingProvider backed by a provider subprocess."""

    def __init__(self, command: str | list[str]):
        super().__init__(command)
        if not isinstance(self.dim, int) or self.dim < 1:
            raise ProviderError(f"embedding provider declared bad dim: {self.dim!r}")

    def _vector(self, response: dict) -> np.ndarray:
        vec = np.asarray(response.get("vector", ()), dtype=np.float64)
        if vec.shape != (self.dim,):
            raise DimensionMismatchError(
                f"provider returned vector of length {vec.shape}, declared dim {self.dim}"
            )
        return vec

    def embed_query(self, text: str) -> np.ndarray:
        return self._vector(self.request({"op": "embed_query", "text": text, "title": ""}))

    def embed_passage(self, title: str, text: str) -> np.ndarray:
        return self._vector(self.request({"op": "embed_passage", "text": text, "title": title}))


class SubprocessGenerator(SubprocessProvider):
    """GeneratorProvider backed by a provider subprocess."""

    def generate(self, passage_text: str, n: int, k: int, p: float) -> list[str]:
        response = self.request(
            {"op": "generate", "text": passage_text, "n": n, "k": k, "p": p}
        )
        sequences = response.get("sequences")
        if not isinstance(sequences, list):
            raise ProviderError("generate response lacks a sequences list")
        return [str(s) for s in sequences]


class SubprocessReader(SubprocessProvider):
    """ReaderProvider backed by a provider subprocess."""

    def read(self, question: str, passage: Passage) -> AnswerCandidate:
        response = self.request(
            {
                "op": "read",
                "question": question,
                "passage": passage.text,
                "passage_id": passage.id,
            }
        )
        try:
            return AnswerCandidate(
                text=response["text"],
                start=int(response["start"]),
                end=int(response["end"]),
                reader_score=float(response["score"]),
                passage_id=passage.id,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"bad read response: {response!r} ({exc})") from exc

    def score_span(self, question: str, passage: Passage, start: int, end: int) -> float:
        response = self.request(
            {
                "op": "score_span",
                "question": question,
                "passage": passage.text,
                "start": start,
                "end": end,
            }
        )
        try:
            return float(response["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"bad score_span response: {response!r} ({exc})") from exc
