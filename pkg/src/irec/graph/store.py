"""Embedded property-graph store for problem cards and the tag hierarchy.

In-process replacement for a server-backed graph database: id-unique card
and tag nodes, HAS_TAG edges, a synchronously-maintained fulltext index, an
exact-scan vector index, JSON snapshot persistence, and parallel bulk
import.

Concurrency model: concurrent readers, serialized writers. Every mutation
takes the store's write lock and updates the affected indexes before
releasing it, so readers always observe a consistent graph. Bulk import
parallelizes record parsing/embedding but commits through the same lock.
"""

from __future__ import annotations

import json
import threading
import time
import unicodedata
import uuid
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable

import numpy as np

from ..embeddings import DEFAULT_DIM, EmbeddingProvider
from ..errors import (
    CorruptSnapshot,
    DuplicateId,
    UnknownCard,
    UnknownParent,
    UnknownTag,
    VersionMismatch,
)
from ..recall.bm25 import Bm25Index
from .models import ImportReport, ProblemCard, Tag
from .vector_index import VectorIndex

SNAPSHOT_VERSION = 1

ProgressSink = Callable[[int, int], None]


def _normalize_tag_name(name: str) -> str:
    """Dedup key: Unicode NFC, case-insensitive, whitespace-collapsed."""
    return " ".join(unicodedata.normalize("NFC", name).casefold().split())


def _unit(vector: np.ndarray) -> np.ndarray:
    """Stored embeddings are unit-norm (cosine == dot everywhere)."""
    vector = np.asarray(vector, dtype=np.float64)
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise ValueError("embedding must be non-zero")
    return vector if abs(norm - 1.0) <= 1e-6 else vector / norm


def _new_id() -> str:
    return uuid.uuid4().hex


class GraphStore:
    def __init__(self, dim: int = DEFAULT_DIM):
        self.dim = dim
        self._write_lock = threading.RLock()
        self._cards: dict[str, ProblemCard] = {}
        self._tags: dict[str, Tag] = {}
        self._children: dict[str, set[str]] = {}          # parent_id -> tag ids
        self._cards_by_tag: dict[str, set[str]] = {}      # tag_id -> card ids
        self._tag_by_key: dict[tuple[str | None, str], str] = {}  # (parent, norm name) -> id
        self.fulltext = Bm25Index()
        self.vectors = VectorIndex(dim)

    # ------------------------------------------------------------------
    # Cards
    # ------------------------------------------------------------------

    def create_card(
        self,
        problem_text: str,
        insight_text: str,
        tag_ids: Iterable[str] = (),
        now: int | None = None,
    ) -> ProblemCard:
        """Persist a new card; the fulltext index is updated synchronously.

        The embedding stays absent until a separate embed step completes, so
        the card is findable by keyword immediately after creation.
        """
        if not problem_text:
            raise ValueError("problem_text must be non-empty")
        now = int(time.time()) if now is None else int(now)
        tag_ids = set(tag_ids)
        with self._write_lock:
            for tid in tag_ids:
                if tid not in self._tags:
                    raise UnknownTag(tid)
            card = ProblemCard(
                id=self._fresh_card_id(),
                problem_text=problem_text,
                insight_text=insight_text,
                created_at=now,
                last_accessed_at=now,
                tag_ids=set(tag_ids),
            )
            self._cards[card.id] = card
            for tid in tag_ids:
                self._cards_by_tag.setdefault(tid, set()).add(card.id)
            self.fulltext.add(card.id, card.search_text())
            return card

    def _fresh_card_id(self) -> str:
        # uuid4 collisions are fantasy-rare, but the contract is explicit:
        # retry internally, never surface DuplicateId.
        for _ in range(8):
            cid = _new_id()
            if cid not in self._cards:
                return cid
        raise DuplicateId("exhausted id retries")

    def get_card(self, card_id: str) -> ProblemCard:
        try:
            return self._cards[card_id]
        except KeyError:
            raise UnknownCard(card_id) from None

    def cards(self) -> list[ProblemCard]:
        return list(self._cards.values())

    def card_count(self) -> int:
        return len(self._cards)

    def record_access(self, card_id: str, now: int | None = None) -> ProblemCard:
        """Increment the card's access count and stamp the access time."""
        now = int(time.time()) if now is None else int(now)
        with self._write_lock:
            card = self.get_card(card_id)
            card.access_count += 1
            card.last_accessed_at = now
            return card

    def set_card_embedding(self, card_id: str, vector: np.ndarray) -> None:
        with self._write_lock:
            card = self.get_card(card_id)
            vector = _unit(vector)
            card.embedding = vector
            self.vectors.set(card_id, vector)

    def append_card_insight(self, card_id: str, text: str, now: int | None = None) -> ProblemCard:
        """Append a timestamped insight section and re-index the fulltext."""
        now = int(time.time()) if now is None else int(now)
        with self._write_lock:
            card = self.get_card(card_id)
            stamp = time.strftime("%Y-%m-%d %H:%M:%SZ", time.gmtime(now))
            card.insight_text = f"{card.insight_text}\n\n[{stamp}] {text}"
            self.fulltext.update(card_id, card.search_text())
            return card

    def add_card_tag(self, card_id: str, tag_id: str) -> None:
        with self._write_lock:
            card = self.get_card(card_id)
            if tag_id not in self._tags:
                raise UnknownTag(tag_id)
            card.tag_ids.add(tag_id)
            self._cards_by_tag.setdefault(tag_id, set()).add(card_id)

    def cards_with_tag(self, tag_id: str) -> set[str]:
        return set(self._cards_by_tag.get(tag_id, ()))

    # ------------------------------------------------------------------
    # Tags
    # ------------------------------------------------------------------

    def upsert_tag(
        self,
        name: str,
        parent_id: str | None = None,
        embedding: np.ndarray | None = None,
    ) -> Tag:
        """Return the existing tag with this (normalized) name under the same
        parent, or create it at level parent.level + 1 (0 for roots).

        Creation cannot introduce a cycle: a new node has no children.
        """
        if not name or not name.strip():
            raise ValueError("tag name must be non-empty")
        with self._write_lock:
            if parent_id is not None and parent_id not in self._tags:
                raise UnknownParent(parent_id)
            key = (parent_id, _normalize_tag_name(name))
            existing = self._tag_by_key.get(key)
            if existing is not None:
                tag = self._tags[existing]
                if tag.embedding is None and embedding is not None:
                    tag.embedding = _unit(embedding)
                return tag
            level = 0 if parent_id is None else self._tags[parent_id].level + 1
            tag = Tag(
                id=_new_id(),
                name=name.strip(),
                parent_id=parent_id,
                level=level,
                embedding=None if embedding is None else _unit(embedding),
            )
            self._tags[tag.id] = tag
            self._tag_by_key[key] = tag.id
            if parent_id is not None:
                self._children.setdefault(parent_id, set()).add(tag.id)
            return tag

    def get_tag(self, tag_id: str) -> Tag:
        try:
            return self._tags[tag_id]
        except KeyError:
            raise UnknownTag(tag_id) from None

    def tags(self) -> list[Tag]:
        return list(self._tags.values())

    def root_tags(self) -> list[Tag]:
        return sorted((t for t in self._tags.values() if t.parent_id is None), key=lambda t: t.id)

    def tag_children(self, tag_id: str) -> set[str]:
        return set(self._children.get(tag_id, ()))

    def find_tag_by_name(self, name: str, parent_id: str | None = None) -> Tag | None:
        tid = self._tag_by_key.get((parent_id, _normalize_tag_name(name)))
        return self._tags.get(tid) if tid else None

    def expand_tag_descendants(self, entry_tag_ids: Iterable[str]) -> dict[str, int]:
        """Breadth-first closure of PARENT_OF from the entry tags.

        Returns every reachable tag (entries included at depth 0) mapped to
        its minimal depth from any entry, in deterministic (depth, tag_id)
        order.
        """
        entries = list(entry_tag_ids)
        for tid in entries:
            if tid not in self._tags:
                raise UnknownTag(tid)
        depth: dict[str, int] = {}
        frontier = deque(sorted(set(entries)))
        for tid in frontier:
            depth[tid] = 0
        while frontier:
            current = frontier.popleft()
            for child in self._children.get(current, ()):
                if child not in depth:
                    depth[child] = depth[current] + 1
                    frontier.append(child)
        return dict(sorted(depth.items(), key=lambda kv: (kv[1], kv[0])))

    def tag_subtree(self, root_tag_id: str) -> set[str]:
        return set(self.expand_tag_descendants([root_tag_id]))

    # ------------------------------------------------------------------
    # Bulk import
    # ------------------------------------------------------------------

    def bulk_import(
        self,
        lines: Iterable[str],
        parallelism: int = 1,
        progress_sink: ProgressSink | None = None,
        embedder: EmbeddingProvider | None = None,
        now: int | None = None,
    ) -> ImportReport:
        """Import JSONL card records, one object per line.

        Record schema: {"problem": str, "insight": str, "tags": [str],
        "created_at": int?}. Tag names are upserted as root tags. Parsing
        and embedding run on ``parallelism`` workers; commits go through the
        serialized write path, so the final graph does not depend on worker
        scheduling. Per-record failures are collected, never aborting the
        batch. ``progress_sink(done, total)`` sees non-decreasing counts
        (total is -1: the stream length is unknown up front).
        """
        start = time.monotonic()
        now = int(time.time()) if now is None else int(now)
        imported = 0
        failed = 0
        errors: list[str] = []
        done = 0

        def parse(numbered: tuple[int, str]):
            line_no, line = numbered
            line = line.strip()
            if not line:
                return None
            try:
                rec = json.loads(line)
                problem = rec["problem"]
                insight = rec.get("insight", "")
                tags = rec.get("tags", [])
                created = int(rec.get("created_at", now))
                if not isinstance(problem, str) or not problem:
                    raise ValueError("problem must be a non-empty string")
                if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
                    raise ValueError("tags must be a list of strings")
                vec = embedder.embed(problem + "\n" + insight) if embedder else None
                return (problem, insight, tags, created, vec)
            except Exception as e:  # noqa: BLE001 - every record failure is reported
                return (line_no, f"line {line_no}: {e}")

        numbered = ((i + 1, line) for i, line in enumerate(lines))
        with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
            for result in pool.map(parse, numbered, chunksize=64):
                if result is None:
                    continue
                if len(result) == 2:
                    failed += 1
                    errors.append(result[1])
                else:
                    problem, insight, tags, created, vec = result
                    with self._write_lock:
                        tag_ids = [self.upsert_tag(t).id for t in tags if t.strip()]
                        card = self.create_card(problem, insight, tag_ids, now=created)
                        if vec is not None:
                            self.set_card_embedding(card.id, vec)
                    imported += 1
                done += 1
                if progress_sink is not None:
                    progress_sink(done, -1)

        if progress_sink is not None:
            progress_sink(done, done)
        return ImportReport(
            imported=imported,
            failed=failed,
            elapsed=time.monotonic() - start,
            errors=errors,
        )

    # ------------------------------------------------------------------
    # Snapshot persistence
    # ------------------------------------------------------------------

    def save_snapshot(self, path: str) -> None:
        """Write the whole graph as one JSON document."""
        with self._write_lock:
            doc = {
                "version": SNAPSHOT_VERSION,
                "cards": [
                    {
                        "id": c.id,
                        "problem_text": c.problem_text,
                        "insight_text": c.insight_text,
                        "created_at": c.created_at,
                        "last_accessed_at": c.last_accessed_at,
                        "access_count": c.access_count,
                        "embedding": None if c.embedding is None else [float(x) for x in c.embedding],
                    }
                    for c in self._cards.values()
                ],
                "tags": [
                    {
                        "id": t.id,
                        "name": t.name,
                        "parent_id": t.parent_id,
                        "level": t.level,
                        "embedding": None if t.embedding is None else [float(x) for x in t.embedding],
                    }
                    for t in self._tags.values()
                ],
                "edges": sorted(
                    (c.id, tid) for c in self._cards.values() for tid in c.tag_ids
                ),
            }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f, ensure_ascii=False)

    @classmethod
    def load_snapshot(cls, path: str, dim: int = DEFAULT_DIM) -> "GraphStore":
        """Load a snapshot and rebuild all indexes.

        Raises VersionMismatch for unknown versions and CorruptSnapshot for
        truncated/malformed files or dangling edges.
        """
        try:
            with open(path, encoding="utf-8") as f:
                doc = json.load(f)
        except json.JSONDecodeError as e:
            raise CorruptSnapshot(f"unparseable snapshot {path}: {e}") from e
        if not isinstance(doc, dict):
            raise CorruptSnapshot(f"snapshot {path} is not a JSON object")
        version = doc.get("version")
        if version != SNAPSHOT_VERSION:
            raise VersionMismatch(version, SNAPSHOT_VERSION)
        try:
            cards, tags, edges = doc["cards"], doc["tags"], doc["edges"]
        except KeyError as e:
            raise CorruptSnapshot(f"snapshot {path} missing section {e}") from e

        store = cls(dim=dim)
        try:
            for t in sorted(tags, key=lambda t: t["level"]):
                tag = Tag(
                    id=t["id"],
                    name=t["name"],
                    parent_id=t.get("parent_id"),
                    level=t["level"],
                    embedding=None if t.get("embedding") is None
                    else np.asarray(t["embedding"], dtype=np.float64),
                )
                if tag.id in store._tags:
                    raise CorruptSnapshot(f"duplicate tag id {tag.id}")
                if tag.parent_id is not None:
                    parent = store._tags.get(tag.parent_id)
                    if parent is None:
                        raise CorruptSnapshot(f"tag {tag.id} has unknown parent {tag.parent_id}")
                    if tag.level != parent.level + 1:
                        raise CorruptSnapshot(f"tag {tag.id} level inconsistent with parent")
                    store._children.setdefault(tag.parent_id, set()).add(tag.id)
                elif tag.level != 0:
                    raise CorruptSnapshot(f"root tag {tag.id} has level {tag.level}")
                store._tags[tag.id] = tag
                store._tag_by_key[(tag.parent_id, _normalize_tag_name(tag.name))] = tag.id

            for c in cards:
                card = ProblemCard(
                    id=c["id"],
                    problem_text=c["problem_text"],
                    insight_text=c["insight_text"],
                    created_at=c["created_at"],
                    last_accessed_at=c["last_accessed_at"],
                    access_count=c["access_count"],
                    embedding=None if c.get("embedding") is None
                    else np.asarray(c["embedding"], dtype=np.float64),
                )
                if card.id in store._cards:
                    raise CorruptSnapshot(f"duplicate card id {card.id}")
                store._cards[card.id] = card
                store.fulltext.add(card.id, card.search_text())
                if card.embedding is not None:
                    store.vectors.set(card.id, card.embedding)

            for edge in edges:
                card_id, tag_id = edge
                if card_id not in store._cards or tag_id not in store._tags:
                    raise CorruptSnapshot(f"edge ({card_id}, {tag_id}) does not resolve")
                store._cards[card_id].tag_ids.add(tag_id)
                store._cards_by_tag.setdefault(tag_id, set()).add(card_id)
        except (KeyError, TypeError, ValueError) as e:
            raise CorruptSnapshot(f"snapshot {path} has malformed records: {e}") from e
        return store

    # ------------------------------------------------------------------

    def stats(self) -> dict:
        return {
            "cards": len(self._cards),
            "tags": len(self._tags),
            "edges": sum(len(c.tag_ids) for c in self._cards.values()),
            "embedded_cards": len(self.vectors),
        }
