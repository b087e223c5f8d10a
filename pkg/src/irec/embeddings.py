"""Text embedding providers and similarity primitives.

The default provider is a deterministic feature-hashing embedder: lowercased
word unigrams and bigrams are hashed into a fixed number of signed buckets
and the result is L2-normalized. It is dependency-free, stable across
processes, and fast enough to embed thousands of cards in bulk, which makes
it the test and offline substrate. Remote providers sit behind the same
interface; downstream code only ever sees unit-norm vectors of a fixed
dimension.
"""

from __future__ import annotations

import hashlib
import re
from typing import Protocol

import numpy as np

from .config import EmbeddingConfig
from .errors import DimensionMismatch, EmptyText, ProviderUnavailable

DEFAULT_DIM = 256

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens (unicode letters/digits, no underscores)."""
    return _TOKEN_RE.findall(text.lower())


class EmbeddingProvider(Protocol):
    @property
    def dim(self) -> int: ...

    def embed(self, text: str) -> np.ndarray: ...


class HashingEmbedder:
    """Deterministic signed feature-hashing of unigrams + bigrams.

    Each feature is hashed with BLAKE2b (stable across processes, unlike
    the builtin ``hash``); the low bits pick a bucket, one high bit picks
    the sign. Vectors are L2-normalized float64.
    """

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim < 1:
            raise ValueError("embedding dimension must be positive")
        self._dim = dim

    @property
    def dim(self) -> int:
        return self._dim

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise EmptyText("cannot embed empty text")
        tokens = tokenize(text)
        if not tokens:
            raise EmptyText("text contains no word tokens")
        vec = np.zeros(self._dim, dtype=np.float64)
        features = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
        for feat in features:
            h = int.from_bytes(
                hashlib.blake2b(feat.encode("utf-8"), digest_size=8).digest(), "big"
            )
            sign = 1.0 if h & (1 << 63) else -1.0
            vec[h % self._dim] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # Signed collisions cancelled everything; salt once and retry.
            for feat in features:
                h = int.from_bytes(
                    hashlib.blake2b(feat.encode("utf-8"), digest_size=8, salt=b"irec")
                    .digest(), "big"
                )
                vec[h % self._dim] += 1.0 if h & (1 << 63) else -1.0
            norm = float(np.linalg.norm(vec))
        return vec / norm


class ExternalEmbedder:
    """Placeholder for a remote embedding service behind the same interface."""

    def __init__(self, endpoint: str, dim: int = DEFAULT_DIM):
        self.endpoint = endpoint
        self._dim = dim

    @property
    def dim(self) -> int:
        return self._dim

    def embed(self, text: str) -> np.ndarray:
        raise ProviderUnavailable(
            f"no external embedding service configured (endpoint={self.endpoint!r})"
        )


def make_embedder(cfg: EmbeddingConfig) -> EmbeddingProvider:
    if cfg.provider == "hashing":
        return HashingEmbedder(dim=cfg.dim)
    if cfg.provider == "external":
        return ExternalEmbedder(cfg.endpoint, dim=cfg.dim)
    raise ValueError(f"unknown embedding provider: {cfg.provider!r}")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]. Raises DimensionMismatch."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(a.shape[-1], b.shape[-1])
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))
