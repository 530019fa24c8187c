"""Top-k selection over dense score arrays (numpy in both kernel paths)."""

from __future__ import annotations

import numpy as np


def top_k_positive(scores: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Top-k strictly positive scores, descending; ties by ascending ordinal."""
    idx = np.flatnonzero(scores > 0.0)
    if idx.size == 0:
        return []
    order = np.lexsort((idx, -scores[idx].astype(np.float64)))[:k]
    return [(int(idx[i]), float(scores[idx[i]])) for i in order]


def top_k_all(scores: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Top-k over all ordinals (zeros kept), ties by ascending ordinal."""
    n = scores.shape[0]
    order = np.lexsort((np.arange(n), -scores.astype(np.float64)))[:k]
    return [(int(i), float(scores[i])) for i in order]
