"""Incremental BM25 inverted index over card text.

Documents are identified by string ids and may be re-indexed in place
(insight appends re-tokenize the document). Scoring uses k1=1.2, b=0.75 and
the smoothed positive IDF ``ln(1 + (N - df + 0.5) / (df + 0.5))``. The
per-term accumulation loop runs through the kernel backend; posting arrays
are cached per term and invalidated on writes.
"""

from __future__ import annotations

from collections import Counter

import math

import numpy as np

from .. import kernels
from ..embeddings import tokenize

K1 = 1.2
B = 0.75


class Bm25Index:
    def __init__(self, k1: float = K1, b: float = B):
        self.k1 = k1
        self.b = b
        self._row_of: dict[str, int] = {}
        self._id_of: list[str] = []
        self._doc_len: list[int] = []
        # term -> {row: tf}
        self._postings: dict[str, dict[int, int]] = {}
        self._total_len = 0
        # term -> (rows int32, tfs float64); rebuilt lazily after writes
        self._arrays: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        self._len_norm: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._id_of)

    def add(self, doc_id: str, text: str) -> None:
        if doc_id in self._row_of:
            self.update(doc_id, text)
            return
        row = len(self._id_of)
        self._row_of[doc_id] = row
        self._id_of.append(doc_id)
        tokens = tokenize(text)
        self._doc_len.append(len(tokens))
        self._total_len += len(tokens)
        for term, tf in Counter(tokens).items():
            self._postings.setdefault(term, {})[row] = tf
        self._dirty()

    def update(self, doc_id: str, text: str) -> None:
        row = self._row_of[doc_id]
        old = {t: tfs[row] for t, tfs in self._postings.items() if row in tfs}
        tokens = tokenize(text)
        new = Counter(tokens)
        for term in old.keys() - new.keys():
            del self._postings[term][row]
            if not self._postings[term]:
                del self._postings[term]
        for term, tf in new.items():
            self._postings.setdefault(term, {})[row] = tf
        self._total_len += len(tokens) - self._doc_len[row]
        self._doc_len[row] = len(tokens)
        self._dirty()

    def _dirty(self) -> None:
        self._arrays.clear()
        self._len_norm = None

    def _term_arrays(self, term: str) -> tuple[np.ndarray, np.ndarray]:
        cached = self._arrays.get(term)
        if cached is None:
            posting = self._postings[term]
            rows = np.fromiter(posting.keys(), dtype=np.int32, count=len(posting))
            tfs = np.fromiter(posting.values(), dtype=np.float64, count=len(posting))
            cached = self._arrays[term] = (rows, tfs)
        return cached

    def _length_norm(self) -> np.ndarray:
        if self._len_norm is None:
            n = len(self._doc_len)
            avg = (self._total_len / n) if n and self._total_len else 1.0
            dl = np.asarray(self._doc_len, dtype=np.float64)
            self._len_norm = (1.0 - self.b) + self.b * dl / avg
        return self._len_norm

    def idf(self, term: str) -> float:
        df = len(self._postings.get(term, ()))
        n = len(self._id_of)
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def search(self, query_text: str, k: int) -> list[tuple[str, float]]:
        """Top-k (doc_id, score) with score > 0, ties broken by doc_id."""
        if not self._id_of:
            return []
        terms = [t for t in set(tokenize(query_text)) if t in self._postings]
        if not terms:
            return []
        scores = np.zeros(len(self._id_of), dtype=np.float64)
        len_norm = self._length_norm()
        for term in terms:
            rows, tfs = self._term_arrays(term)
            kernels.bm25_accumulate(rows, tfs, self.idf(term), self.k1, len_norm, scores)
        return _top_k_positive(scores, self._id_of, k)


def _top_k_positive(scores: np.ndarray, ids: list[str], k: int) -> list[tuple[str, float]]:
    """Top-k ids by score descending, doc_id ascending on ties; score > 0 only."""
    hits = np.flatnonzero(scores > 0.0)
    ranked = sorted(((ids[r], float(scores[r])) for r in hits), key=lambda p: (-p[1], p[0]))
    return ranked[:k]
