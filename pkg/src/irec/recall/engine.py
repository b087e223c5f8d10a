"""Three-channel recall and score fusion.

A query fans out over three independent channels — exact-cosine vector
search, BM25 fulltext, and tag-hierarchy expansion — whose raw scores live
on incompatible scales. Each channel is normalized into (0, 1) (z-score +
logistic squash for cosine, min-max for the other two), then merged as a
weighted sum plus a multi-match bonus for cards found by more than one
channel. The fused score is the relevance input to the reranker.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..config import RecallConfig
from ..embeddings import cosine, tokenize
from ..graph.store import GraphStore

CHANNELS = ("vector", "fulltext", "tag")

ChannelHits = Sequence[tuple[str, float]]


@dataclass(frozen=True)
class MergeWeights:
    vector: float = 0.5
    fulltext: float = 0.3
    tag: float = 0.2
    multi_match_bonus_unit: float = 0.1

    def __post_init__(self):
        for w in (self.vector, self.fulltext, self.tag, self.multi_match_bonus_unit):
            if w < 0:
                raise ValueError("weights must be non-negative")
        total = self.vector + self.fulltext + self.tag
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"channel weights must sum to 1, got {total}")

    def weight(self, channel: str) -> float:
        return {"vector": self.vector, "fulltext": self.fulltext, "tag": self.tag}[channel]


@dataclass
class RecallCandidate:
    """A card recalled by at least one channel, with per-channel provenance."""

    card_id: str
    raw_scores: dict[str, float] = field(default_factory=dict)
    normalized_scores: dict[str, float] = field(default_factory=dict)
    fused_relevance: float = 0.0

    @property
    def path_set(self) -> frozenset[str]:
        return frozenset(self.raw_scores)

    @property
    def path_count(self) -> int:
        return len(self.raw_scores)


def vector_recall(store: GraphStore, query_embedding: np.ndarray, k: int) -> list[tuple[str, float]]:
    """Top-k embedded cards by cosine, descending; ties by card id."""
    return store.vectors.search(query_embedding, k)


def fulltext_recall(store: GraphStore, query_text: str, k: int) -> list[tuple[str, float]]:
    """Top-k cards by BM25 over problem + insight text; positive scores only."""
    return store.fulltext.search(query_text, k)


@dataclass
class TagEntry:
    tag_id: str
    name: str
    score: float
    matched_by: str  # "tokens" | "embedding"


def find_entry_tags(
    store: GraphStore,
    query_text: str,
    query_embedding: np.ndarray | None,
    threshold: float,
    limit: int = 3,
) -> list[TagEntry]:
    """Entry points into the tag hierarchy for this query.

    A tag enters either because every token of its name occurs in the query
    (entry score 1.0) or because its name embedding is cosine-similar to the
    query embedding at or above ``threshold`` (entry score = cosine). The
    top ``limit`` by score survive, ties broken by tag id.
    """
    query_tokens = set(tokenize(query_text))
    entries: list[TagEntry] = []
    for tag in store.tags():
        name_tokens = set(tokenize(tag.name))
        token_hit = bool(name_tokens) and name_tokens <= query_tokens
        embed_score = 0.0
        if query_embedding is not None and tag.embedding is not None:
            embed_score = cosine(query_embedding, tag.embedding)
        if token_hit:
            entries.append(TagEntry(tag.id, tag.name, 1.0, "tokens"))
        elif embed_score >= threshold:
            entries.append(TagEntry(tag.id, tag.name, embed_score, "embedding"))
    entries.sort(key=lambda e: (-e.score, e.tag_id))
    return entries[:limit]


def _tag_recall_with_entries(
    store: GraphStore,
    query_text: str,
    query_embedding: np.ndarray | None,
    k: int,
    entry_threshold: float,
    depth_decay: float,
) -> tuple[list[tuple[str, float]], list[TagEntry]]:
    entries = find_entry_tags(store, query_text, query_embedding, entry_threshold)
    if not entries:
        return [], []
    tag_value: dict[str, float] = {}
    for entry in entries:
        for tag_id, depth in store.expand_tag_descendants([entry.tag_id]).items():
            value = entry.score * depth_decay**depth
            if value > tag_value.get(tag_id, 0.0):
                tag_value[tag_id] = value
    card_score: dict[str, float] = {}
    for tag_id, value in tag_value.items():
        for card_id in store.cards_with_tag(tag_id):
            if value > card_score.get(card_id, 0.0):
                card_score[card_id] = value
    ranked = sorted(card_score.items(), key=lambda p: (-p[1], p[0]))
    return ranked[:k], entries


def tag_recall(
    store: GraphStore,
    query_text: str,
    query_embedding: np.ndarray | None,
    k: int,
    entry_threshold: float = 0.6,
    depth_decay: float = 0.8,
) -> list[tuple[str, float]]:
    """Cards reached by expanding entry tags down the hierarchy.

    Each expanded tag inherits ``entry_score * depth_decay ** depth`` from
    the entry that reaches it most valuably; a card scores the max over its
    matched tags.
    """
    hits, _ = _tag_recall_with_entries(
        store, query_text, query_embedding, k, entry_threshold, depth_decay
    )
    return hits


def normalize_channel(channel: str, hits: ChannelHits) -> list[tuple[str, float]]:
    """Map one channel's raw scores for one query into (0, 1).

    Vector scores are z-scored over the candidate list (sample stddev) and
    squashed through the logistic 1/(1+e^-z); fulltext and tag scores are
    min-max scaled. Degenerate spreads (single candidate, zero stddev,
    max == min) map everything to 0.5 so the channel stays informative-free
    rather than exploding.
    """
    if not hits:
        return []
    scores = np.array([s for _, s in hits], dtype=np.float64)
    if channel == "vector":
        if len(scores) < 2:
            normed = np.full_like(scores, 0.5)
        else:
            std = float(scores.std(ddof=1))
            if std == 0.0:
                normed = np.full_like(scores, 0.5)
            else:
                z = (scores - scores.mean()) / std
                normed = 1.0 / (1.0 + np.exp(-z))
    elif channel in ("fulltext", "tag"):
        lo, hi = float(scores.min()), float(scores.max())
        if hi == lo:
            normed = np.full_like(scores, 0.5)
        else:
            normed = (scores - lo) / (hi - lo)
    else:
        raise ValueError(f"unknown channel: {channel!r}")
    return [(cid, float(n)) for (cid, _), n in zip(hits, normed)]


def fuse(
    channel_results: Mapping[str, ChannelHits],
    weights: MergeWeights,
    raw_results: Mapping[str, Mapping[str, float]] | None = None,
) -> list[RecallCandidate]:
    """Merge normalized per-channel scores into fused relevance.

    fused = clamp(sum_ch w_ch * score_ch + bonus * (paths - 1), 0, 1) with
    missing channels contributing 0. Output is sorted by fused relevance
    descending, card id ascending — independent of channel arrival order.
    """
    by_card: dict[str, RecallCandidate] = {}
    for channel in CHANNELS:  # fixed iteration order: arrival order is irrelevant
        for card_id, norm in channel_results.get(channel, ()):
            cand = by_card.setdefault(card_id, RecallCandidate(card_id=card_id))
            cand.normalized_scores[channel] = norm
            raw = raw_results.get(channel, {}).get(card_id) if raw_results else None
            cand.raw_scores[channel] = norm if raw is None else raw
    for cand in by_card.values():
        weighted = sum(
            weights.weight(ch) * score for ch, score in cand.normalized_scores.items()
        )
        bonus = weights.multi_match_bonus_unit * (cand.path_count - 1)
        cand.fused_relevance = min(1.0, max(0.0, weighted + bonus))
    return sorted(by_card.values(), key=lambda c: (-c.fused_relevance, c.card_id))


@dataclass
class RecallOutcome:
    candidates: list[RecallCandidate]
    raw: dict[str, list[tuple[str, float]]]
    entry_tags: list[TagEntry]
    channel_errors: dict[str, str] = field(default_factory=dict)


class RecallEngine:
    """Runs the three channels (concurrently) and fuses their results."""

    def __init__(self, store: GraphStore, cfg: RecallConfig | None = None):
        self.store = store
        self.cfg = cfg or RecallConfig()
        mw = self.cfg.merge_weights
        self.weights = MergeWeights(
            vector=mw.vector,
            fulltext=mw.fulltext,
            tag=mw.tag,
            multi_match_bonus_unit=self.cfg.multi_match_bonus,
        )

    def recall(
        self,
        query_text: str,
        query_embedding: np.ndarray | None,
        timeout: float | None = None,
    ) -> RecallOutcome:
        """Fan out, normalize, fuse. A failed or timed-out channel is skipped
        (recorded in ``channel_errors``) rather than failing the query."""
        k = self.cfg.k
        entry_tags: list[TagEntry] = []

        def run_vector():
            if query_embedding is None:
                return []
            return vector_recall(self.store, query_embedding, k)

        def run_fulltext():
            return fulltext_recall(self.store, query_text, k)

        def run_tag():
            nonlocal entry_tags
            hits, entry_tags = _tag_recall_with_entries(
                self.store, query_text, query_embedding, k,
                self.cfg.tag_entry_threshold, self.cfg.tag_depth_decay,
            )
            return hits

        runners = {"vector": run_vector, "fulltext": run_fulltext, "tag": run_tag}
        raw: dict[str, list[tuple[str, float]]] = {}
        errors: dict[str, str] = {}
        with ThreadPoolExecutor(max_workers=len(CHANNELS)) as pool:
            futures = {ch: pool.submit(fn) for ch, fn in runners.items()}
            for ch, fut in futures.items():
                try:
                    raw[ch] = fut.result(timeout=timeout)
                except Exception as e:  # noqa: BLE001 - degrade, don't fail the query
                    errors[ch] = f"{type(e).__name__}: {e}"
                    raw[ch] = []

        normalized = {ch: normalize_channel(ch, hits) for ch, hits in raw.items()}
        raw_maps = {ch: dict(hits) for ch, hits in raw.items()}
        candidates = fuse(normalized, self.weights, raw_maps)
        return RecallOutcome(candidates=candidates, raw=raw, entry_tags=entry_tags, channel_errors=errors)
