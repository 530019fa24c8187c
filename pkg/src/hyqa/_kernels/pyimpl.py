"""Numpy fallback for the compiled scoring kernels.

Arithmetic is written to match the extension exactly: per posting,
idf * ((tf * (k1+1)) / (tf + length_norm[ordinal])), all in float64.
"""

from __future__ import annotations

import numpy as np


def bm25_accumulate(
    ordinals: np.ndarray,
    tfs: np.ndarray,
    length_norm: np.ndarray,
    idf: float,
    k1_plus_one: float,
    scores: np.ndarray,
) -> None:
    """Add one query term's weighted contributions into the scores array.

    ordinals are unique within a postings list, so fancy-index += is safe.
    """
    contrib = idf * ((tfs * k1_plus_one) / (tfs + length_norm[ordinals]))
    scores[ordinals] += contrib
