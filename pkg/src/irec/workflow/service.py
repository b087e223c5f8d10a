"""End-to-end orchestration: query pipeline, insight capture, result opens,
and guided-inquiry sessions.

A submitted query runs on a worker thread and streams progress through its
session's event log:

    preliminary_results   fulltext hits, before the embedding is ready
    tags_resolved         entry tags + tag-channel hit count
    reranked_results      fused three-channel candidates, mode-reranked
    assessments_ready     per-card ordinal similarity (top results only)
    final_results         filtered list; empty = provide-nothing

Stage failures degrade (a channel is skipped, assessments fail open) and
the terminal event always fires. Every stage is timed into the session's
step log.
"""

from __future__ import annotations

import logging
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from dataclasses import dataclass, field

import numpy as np

from ..config import IrecConfig
from ..embeddings import EmbeddingProvider, make_embedder
from ..errors import (
    EmptyNote,
    EmptyQuery,
    IrecError,
    NotInSession,
    UnknownCard,
    UnknownSession,
)
from ..graph.models import ProblemCard
from ..graph.store import GraphStore
from ..llm import gateway
from ..llm.gateway import (
    FilterLevel,
    InquirySession,
    ParsedInsight,
    SimilarityAssessment,
    parse_filter_level,
)
from ..llm.stub import ExternalLlm, LlmProvider, ScriptedStub
from ..recall.engine import (
    RecallEngine,
    _tag_recall_with_entries,
    fulltext_recall,
    fuse,
    normalize_channel,
    vector_recall,
)
from ..rerank import LearningMode, RankedResult, rerank
from ..tagmap import MappingDecision, TagMapper, TagSuggestion
from .session import QuerySession, StepLog, WorkflowLogger

logger = logging.getLogger("irec.workflow")

PLACEHOLDER_PROBLEM = "[problem pending user completion]"


def _excerpt(text: str, limit: int = 160) -> str:
    text = " ".join(text.split())
    return text if len(text) <= limit else text[: limit - 1] + "…"


@dataclass
class CaptureResult:
    card_id: str
    parsed: ParsedInsight
    decisions: list[MappingDecision] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "card_id": self.card_id,
            "problem": self.parsed.problem,
            "insight": self.parsed.insight,
            "suggested_tags": self.parsed.suggested_tags,
            "needs_completion": self.parsed.degraded,
            "pending_decisions": [d.as_dict() for d in self.decisions],
        }


class WorkflowService:
    """Owns the store, providers, and all session state."""

    def __init__(
        self,
        store: GraphStore | None = None,
        config: IrecConfig | None = None,
        embedder: EmbeddingProvider | None = None,
        llm: LlmProvider | None = None,
    ):
        self.config = config or IrecConfig()
        self.embedder = embedder or make_embedder(self.config.embedding)
        self.store = store or GraphStore(dim=self.embedder.dim)
        self.llm = llm or self._make_llm()
        self.recall_engine = RecallEngine(self.store, self.config.recall)
        self.tag_mapper = TagMapper(self.store, self.embedder, self.llm)
        self.logger = WorkflowLogger()
        self._sessions: dict[str, QuerySession] = {}
        self._inquiries: dict[str, InquirySession] = {}
        self._lock = threading.Lock()
        self._jobs = ThreadPoolExecutor(max_workers=2, thread_name_prefix="irec-embed")
        self._pending_jobs: list = []
        self._workers: list[threading.Thread] = []

    def _make_llm(self) -> LlmProvider:
        cfg = self.config.llm
        if cfg.provider == "stub":
            return ScriptedStub(fixtures_dir=cfg.fixtures_dir or None)
        if cfg.provider == "external":
            return ExternalLlm(cfg.endpoint, cfg.model)
        raise ValueError(f"unknown llm provider: {cfg.provider!r}")

    # ------------------------------------------------------------------
    # Query pipeline
    # ------------------------------------------------------------------

    def submit_query(
        self,
        query_text: str,
        mode: str | LearningMode = LearningMode.BALANCED,
        filter_level: str | FilterLevel = "strict",
        now: int | None = None,
        synchronous: bool = False,
    ) -> QuerySession:
        """Start a query session; events stream as stages complete.

        With ``synchronous=True`` the pipeline runs on the caller's thread
        (the CLI and tests want the terminal event on return).
        """
        if not query_text or not query_text.strip():
            raise EmptyQuery("query text is empty")
        if isinstance(mode, str):
            mode = LearningMode.parse(mode)
        if isinstance(filter_level, str):
            filter_level = parse_filter_level(filter_level, self.config.filter)
        session = QuerySession(
            session_id=uuid.uuid4().hex,
            query_text=query_text,
            mode=mode,
            filter_level=filter_level,
            started_at=time.time(),
        )
        with self._lock:
            self._sessions[session.id] = session
        now = int(time.time()) if now is None else int(now)
        if synchronous:
            self._run_pipeline(session, now)
        else:
            worker = threading.Thread(
                target=self._run_pipeline, args=(session, now), daemon=True
            )
            worker.start()
            with self._lock:
                self._workers.append(worker)
        return session

    def _run_pipeline(self, session: QuerySession, now: int) -> None:
        try:
            self._pipeline(session, now)
        except Exception as e:  # noqa: BLE001 - terminal event must always fire
            logger.exception("session %s failed", session.id)
            self.logger.record(session.id, "error", f"{type(e).__name__}: {e}")
            if not session.is_terminal:
                session.emit("error", {"stage": "pipeline", "message": str(e)})

    def _pipeline(self, session: QuerySession, now: int) -> None:
        cfg = self.config
        sid = session.id
        k = cfg.recall.k

        # Not a with-block: a timed-out stage future must not block pipeline
        # completion, so the pool is released without waiting for stragglers.
        pool = ThreadPoolExecutor(max_workers=2, thread_name_prefix="irec-query")
        try:
            embed_future = pool.submit(self._embed_query, session.query_text)

            with self.logger.step(sid, "recall.fulltext") as detail:
                fulltext_hits = fulltext_recall(self.store, session.query_text, k)
                detail.set(f"hits={len(fulltext_hits)}")
            session.emit(
                "preliminary_results",
                {
                    "results": [
                        {
                            "card_id": cid,
                            "score": score,
                            "problem_excerpt": _excerpt(self.store.get_card(cid).problem_text),
                        }
                        for cid, score in fulltext_hits
                    ]
                },
            )

            with self.logger.step(sid, "embed") as detail:
                query_embedding = None
                try:
                    query_embedding = embed_future.result(timeout=cfg.timeouts.embed)
                    detail.set("ok")
                except FutureTimeout:
                    detail.set("timeout; vector channel skipped")
                    logger.warning("session %s: query embedding timed out", sid)
                except IrecError as e:
                    detail.set(f"failed: {e}; vector channel skipped")
                    logger.warning("session %s: query embedding failed: %s", sid, e)

            tag_future = pool.submit(
                _tag_recall_with_entries,
                self.store,
                session.query_text,
                query_embedding,
                k,
                cfg.recall.tag_entry_threshold,
                cfg.recall.tag_depth_decay,
            )

            with self.logger.step(sid, "recall.vector") as detail:
                vector_hits: list[tuple[str, float]] = []
                if query_embedding is not None:
                    try:
                        vector_hits = vector_recall(self.store, query_embedding, k)
                    except IrecError as e:
                        detail.set(f"failed: {e}")
                        logger.warning("session %s: vector recall failed: %s", sid, e)
                detail.set(f"hits={len(vector_hits)}")

            with self.logger.step(sid, "recall.tag") as detail:
                try:
                    tag_hits, entry_tags = tag_future.result(timeout=cfg.timeouts.recall)
                except (FutureTimeout, IrecError) as e:
                    tag_hits, entry_tags = [], []
                    detail.set(f"degraded: {type(e).__name__}")
                    logger.warning("session %s: tag recall degraded: %s", sid, e)
                else:
                    detail.set(f"hits={len(tag_hits)} entries={len(entry_tags)}")
        finally:
            pool.shutdown(wait=False)

        session.emit(
            "tags_resolved",
            {
                "entry_tags": [
                    {"tag_id": e.tag_id, "name": e.name, "score": e.score, "matched_by": e.matched_by}
                    for e in entry_tags
                ],
                "tag_hits": len(tag_hits),
            },
        )

        with self.logger.step(sid, "fuse") as detail:
            raw = {"vector": vector_hits, "fulltext": fulltext_hits, "tag": tag_hits}
            normalized = {ch: normalize_channel(ch, hits) for ch, hits in raw.items()}
            raw_maps = {ch: dict(hits) for ch, hits in raw.items()}
            candidates = fuse(normalized, self.recall_engine.weights, raw_maps)
            detail.set(f"candidates={len(candidates)}")

        with self.logger.step(sid, "rerank") as detail:
            ranked = rerank(candidates, session.mode, now, self.store)
            detail.set(f"results={len(ranked)} mode={session.mode.value}")
        session.emit(
            "reranked_results",
            {"results": [self._result_payload(r) for r in ranked]},
        )

        with self.logger.step(sid, "assess") as detail:
            assessed = self._assess(ranked, session.query_text)
            n_done = sum(1 for _, a in assessed if a is not None)
            detail.set(f"assessed={n_done}/{len(assessed)}")
        session.emit(
            "assessments_ready",
            {
                "assessments": [
                    {
                        "card_id": r.card_id,
                        "score": None if a is None else a.score,
                        "rationale": "" if a is None else a.rationale,
                        "unassessed": a is None,
                    }
                    for r, a in assessed
                ]
            },
        )

        with self.logger.step(sid, "filter") as detail:
            final = gateway.filter_by_level(assessed, session.filter_level)
            detail.set(f"kept={len(final)} level={session.filter_level.name}")

        assessment_of = {r.card_id: a for r, a in assessed}
        session.final_card_ids = {r.card_id for r in final}
        session.emit(
            "final_results",
            {
                "provide_nothing": not final,
                "results": [
                    self._result_payload(r, assessment_of.get(r.card_id)) for r in final
                ],
            },
        )

    def _embed_query(self, text: str) -> np.ndarray:
        return self.embedder.embed(text)

    def _result_payload(self, r: RankedResult, assessment: SimilarityAssessment | None = None) -> dict:
        card = self.store.get_card(r.card_id)
        payload = r.as_dict()
        payload["problem_excerpt"] = _excerpt(card.problem_text)
        payload["problem_text"] = card.problem_text
        payload["insight_text"] = card.insight_text
        payload["access_count"] = card.access_count
        payload["tags"] = sorted(self.store.get_tag(t).name for t in card.tag_ids)
        if assessment is not None:
            payload["similarity_score"] = assessment.score
            payload["similarity_rationale"] = assessment.rationale
            payload["unassessed"] = False
        else:
            payload["similarity_score"] = None
            payload["similarity_rationale"] = ""
            payload["unassessed"] = True
        return payload

    def _assess(
        self, ranked: list[RankedResult], query_text: str
    ) -> list[tuple[RankedResult, SimilarityAssessment | None]]:
        """Assess the top results concurrently, rejoining in rank order.
        Failures and sub-top ranks stay unassessed (fail-open)."""
        top_k = self.config.llm.assess_top_k
        to_assess = ranked[:top_k]
        results: list[tuple[RankedResult, SimilarityAssessment | None]] = []
        if to_assess:
            with ThreadPoolExecutor(max_workers=min(4, len(to_assess))) as pool:
                futures = [
                    pool.submit(
                        gateway.assess_similarity,
                        self.llm,
                        query_text,
                        self.store.get_card(r.card_id),
                    )
                    for r in to_assess
                ]
                for r, fut in zip(to_assess, futures):
                    try:
                        results.append((r, fut.result(timeout=self.config.timeouts.llm)))
                    except Exception as e:  # noqa: BLE001 - fail open, keep the card
                        logger.warning(
                            "assessment failed for card %s (fail-open): %s", r.card_id, e
                        )
                        results.append((r, None))
        results.extend((r, None) for r in ranked[top_k:])
        return results

    # ------------------------------------------------------------------
    # Capture and edits
    # ------------------------------------------------------------------

    def capture_insight(self, raw_note: str, now: int | None = None) -> CaptureResult:
        """Parse a note, create the card (fulltext-searchable immediately),
        schedule its embedding, and route tag suggestions to mapping."""
        if not raw_note or not raw_note.strip():
            raise EmptyNote("insight note is empty")
        now = int(time.time()) if now is None else int(now)
        parsed = gateway.parse_insight_note(self.llm, raw_note)
        problem = parsed.problem or PLACEHOLDER_PROBLEM
        card = self.store.create_card(problem, parsed.insight, (), now=now)
        self._schedule_embedding(card.id)
        decisions: list[MappingDecision] = []
        if parsed.suggested_tags:
            batch = [
                TagSuggestion(
                    raw_name=t, source_card_id=card.id, problem_context=parsed.problem
                )
                for t in parsed.suggested_tags
            ]
            decisions = self.tag_mapper.map_batch(batch)
        return CaptureResult(card_id=card.id, parsed=parsed, decisions=decisions)

    def append_insight(self, card_id: str, text: str, now: int | None = None) -> ProblemCard:
        """Append a timestamped insight section and re-embed in background."""
        if not text or not text.strip():
            raise ValueError("insight text must be non-empty")
        card = self.store.append_card_insight(card_id, text.strip(), now=now)
        self._schedule_embedding(card_id)
        return card

    def _schedule_embedding(self, card_id: str) -> None:
        def job():
            card = self.store.get_card(card_id)
            try:
                vec = self.embedder.embed(card.search_text())
            except IrecError as e:
                logger.warning("embedding job for card %s failed: %s", card_id, e)
                return
            self.store.set_card_embedding(card_id, vec)

        with self._lock:
            self._pending_jobs.append(self._jobs.submit(job))

    def wait_for_jobs(self, timeout: float = 30.0) -> None:
        """Block until scheduled background jobs (embeddings) finish."""
        deadline = time.monotonic() + timeout
        while True:
            with self._lock:
                jobs, self._pending_jobs = self._pending_jobs, []
            if not jobs:
                return
            for job in jobs:
                job.result(timeout=max(0.01, deadline - time.monotonic()))

    # ------------------------------------------------------------------
    # Sessions
    # ------------------------------------------------------------------

    def get_session(self, session_id: str) -> QuerySession:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(session_id)
        return session

    def open_result(self, session_id: str, card_id: str, now: int | None = None) -> ProblemCard:
        """Record that the user opened a presented result.

        Counts once per (session, card) no matter how many times it is
        clicked; the card must be in the session's final results.
        """
        session = self.get_session(session_id)
        if card_id not in session.final_card_ids:
            raise NotInSession(f"card {card_id} is not in session {session_id} results")
        with self._lock:
            first_open = card_id not in session.opened_cards
            session.opened_cards.add(card_id)
        if first_open:
            return self.store.record_access(card_id, now=now)
        return self.store.get_card(card_id)

    def get_session_log(self, session_id: str) -> list[StepLog]:
        self.get_session(session_id)  # raises UnknownSession
        return self.logger.logs(session_id)

    # ------------------------------------------------------------------
    # Guided inquiry
    # ------------------------------------------------------------------

    def open_inquiry(
        self,
        card_id: str,
        problem_id: str | None = None,
        problem_text: str | None = None,
    ) -> InquirySession:
        """Start a tutor dialogue over (current problem, recalled card)."""
        card = self.store.get_card(card_id)
        if problem_id:
            problem_ref = problem_id
            text = self.store.get_card(problem_id).problem_text
        elif problem_text and problem_text.strip():
            problem_ref = "inline"
            text = problem_text.strip()
        else:
            raise ValueError("either problem_id or problem_text is required")
        inquiry = gateway.open_inquiry(self.llm, problem_ref, text, card)
        with self._lock:
            self._inquiries[inquiry.id] = inquiry
        return inquiry

    def inquiry_reply(self, inquiry_id: str, user_message: str):
        with self._lock:
            inquiry = self._inquiries.get(inquiry_id)
        if inquiry is None:
            raise UnknownSession(inquiry_id)
        return gateway.inquiry_turn(self.llm, inquiry, user_message)

    def get_inquiry(self, inquiry_id: str) -> InquirySession:
        with self._lock:
            inquiry = self._inquiries.get(inquiry_id)
        if inquiry is None:
            raise UnknownSession(inquiry_id)
        return inquiry

    # ------------------------------------------------------------------

    def close(self) -> None:
        self._jobs.shutdown(wait=True)
