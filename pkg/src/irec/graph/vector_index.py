"""Exact-scan cosine index over card embeddings.

Only cards with embeddings occupy rows. The corpus is personal-scale, so an
exhaustive scan through the kernel backend is both exact and fast; there is
deliberately no ANN approximation to drift from.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import DimensionMismatch


class VectorIndex:
    def __init__(self, dim: int):
        self.dim = dim
        self._row_of: dict[str, int] = {}
        self._id_of: list[str] = []
        self._vectors: list[np.ndarray] = []
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._id_of)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._row_of

    def set(self, doc_id: str, vector: np.ndarray) -> None:
        vector = np.ascontiguousarray(vector, dtype=np.float64)
        if vector.shape != (self.dim,):
            raise DimensionMismatch(vector.shape[-1], self.dim)
        row = self._row_of.get(doc_id)
        if row is None:
            self._row_of[doc_id] = len(self._id_of)
            self._id_of.append(doc_id)
            self._vectors.append(vector)
        else:
            self._vectors[row] = vector
        self._matrix = None

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self._vectors:
                self._matrix = np.ascontiguousarray(np.stack(self._vectors))
            else:
                self._matrix = np.empty((0, self.dim), dtype=np.float64)
        return self._matrix

    def search(self, query: np.ndarray, k: int) -> list[tuple[str, float]]:
        """Top-k (doc_id, cosine) descending, ties broken by doc_id ascending."""
        if not self._id_of:
            return []
        query = np.ascontiguousarray(query, dtype=np.float64)
        if query.shape != (self.dim,):
            raise DimensionMismatch(query.shape[-1], self.dim)
        out = np.empty(len(self._id_of), dtype=np.float64)
        kernels.cosine_scores(self.matrix(), query, out)
        ranked = sorted(
            ((self._id_of[i], float(out[i])) for i in range(len(self._id_of))),
            key=lambda p: (-p[1], p[0]),
        )
        return ranked[:k]
