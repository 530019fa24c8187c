"""Answer and retrieval metrics, plus the paired t-test.

Answer normalization and token F1 follow the standard extractive-QA
convention: lowercase, strip punctuation, drop articles, collapse
whitespace, then compare token multisets.
"""

from __future__ import annotations

import math
import re
import string
from collections import Counter
from collections.abc import Callable, Iterable, Sequence

from .corpus import Passage
from .errors import UnknownPassageError
from .rankings import Ranking

_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_answer(s: str) -> str:
    """Lowercase, remove punctuation, remove articles, collapse whitespace."""
    s = s.lower()
    s = s.translate(_PUNCT_TABLE)
    s = _ARTICLE_RE.sub(" ", s)
    return " ".join(s.split())


def em(pred: str, gold: str) -> int:
    return int(normalize_answer(pred) == normalize_answer(gold))


def token_f1(pred: str, gold: str) -> float:
    """Harmonic mean of token precision/recall over normalized multisets."""
    pred_tokens = normalize_answer(pred).split()
    gold_tokens = normalize_answer(gold).split()
    if not pred_tokens or not gold_tokens:
        return float(pred_tokens == gold_tokens)
    common = Counter(pred_tokens) & Counter(gold_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return 0.0
    # Equal to 2PR/(P+R); this form is exact for small integer counts.
    return 2.0 * num_same / (len(pred_tokens) + len(gold_tokens))


def match_at_k(
    ranking: Ranking,
    golds: Iterable[str],
    k: int,
    passage_lookup: Callable[[str], Passage],
) -> int:
    """1 iff any top-k passage contains a gold answer after normalization."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    normalized_golds = [g for g in (normalize_answer(g) for g in golds) if g]
    if not normalized_golds:
        return 0
    for pid, _ in ranking.top(k):
        try:
            passage = passage_lookup(pid)
        except KeyError as exc:
            raise UnknownPassageError(f"ranking references unknown passage {pid!r}") from exc
        text = normalize_answer(passage.text)
        if any(g in text for g in normalized_golds):
            return 1
    return 0


def top_n_f1(answers: Sequence[str], golds: Iterable[str], n: int) -> float:
    """Best token F1 among the first n distinct answers and any gold.

    Distinctness is by normalized string, first occurrence kept, before the
    cutoff is applied.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    distinct: list[str] = []
    seen: set[str] = set()
    for answer in answers:
        key = normalize_answer(answer)
        if key in seen:
            continue
        seen.add(key)
        distinct.append(answer)
        if len(distinct) == n:
            break
    golds = list(golds)
    if not distinct or not golds:
        return 0.0
    return max(token_f1(answer, gold) for answer in distinct for gold in golds)


# ---------------------------------------------------------------------------
# Paired t-test. The two-tailed p-value comes from the t distribution via
# the regularized incomplete beta function, implemented here with the
# standard continued-fraction expansion so the test suite can check it
# against an external statistics oracle.
# ---------------------------------------------------------------------------


def paired_t_test(scores_a: Sequence[float], scores_b: Sequence[float]) -> tuple[float, float]:
    """Two-tailed paired t-test; zero-variance differences give (0, 1.0)."""
    if len(scores_a) != len(scores_b):
        raise ValueError(f"length mismatch: {len(scores_a)} vs {len(scores_b)}")
    n = len(scores_a)
    if n < 2:
        raise ValueError("need at least 2 paired observations")
    diffs = [a - b for a, b in zip(scores_a, scores_b)]
    mean = math.fsum(diffs) / n
    var = math.fsum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        return 0.0, 1.0
    t = mean / math.sqrt(var / n)
    df = n - 1
    p = _betainc_regularized(df / 2.0, 0.5, df / (df + t * t))
    return t, p


def _betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) by Lentz's continued fraction."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def _beta_cf(a: float, b: float, x: float, max_iter: int = 200, eps: float = 3e-16) -> float:
    tiny = 1e-308
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")
