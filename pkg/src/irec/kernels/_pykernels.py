"""NumPy implementations of the scoring kernels (fallback backend)."""

from __future__ import annotations

import numpy as np


def bm25_accumulate(
    rows: np.ndarray,
    tfs: np.ndarray,
    idf: float,
    k1: float,
    len_norm: np.ndarray,
    scores: np.ndarray,
) -> None:
    """Add one term's BM25 contribution into ``scores`` in place.

    rows: int32 document rows holding the term (unique per posting list).
    tfs: float64 term frequencies aligned with rows.
    len_norm: per-document ``1 - b + b * dl / avgdl``.
    """
    denom = tfs + k1 * len_norm[rows]
    scores[rows] += idf * (tfs * (k1 + 1.0)) / denom


def cosine_scores(matrix: np.ndarray, query: np.ndarray, out: np.ndarray) -> None:
    """Dot products of every matrix row with the query, written into ``out``.

    Rows and query are unit-norm, so this is the cosine similarity.
    """
    np.dot(matrix, query, out=out)
