"""Workflow service: event streams, capture, opens, logging, degradation."""

from __future__ import annotations

import threading

import pytest

from irec.config import IrecConfig
from irec.errors import EmptyNote, EmptyQuery, NotInSession, UnknownCard, UnknownSession
from irec.recall.engine import fulltext_recall
from irec.workflow.service import WorkflowService
from irec.workflow.session import STAGE_NAMES

from conftest import T0, add_embedded_card

NOTE = (
    "Compute the indefinite integral of x(x^2+1)^3 dx ||| "
    "One part of the integrand (x) is a multiple of the derivative of the other "
    "part (x^2+1), so the u-substitution method applies: let u = x^2+1. ||| "
    "u-substitution"
)


class GatedEmbedder:
    """Wraps an embedder; blocks every embed call until the gate opens."""

    def __init__(self, inner):
        self.inner = inner
        self.gate = threading.Event()

    @property
    def dim(self):
        return self.inner.dim

    def embed(self, text):
        self.gate.wait(timeout=10)
        return self.inner.embed(text)


class TestSubmitQuery:
    def test_event_order_and_seq(self, service, store, embedder):
        add_embedded_card(store, embedder, "integral of x sin x squared", "use substitution")
        session = service.submit_query("integral substitution", synchronous=True)
        events = session.events()
        assert [e.kind for e in events] == [
            "preliminary_results",
            "tags_resolved",
            "reranked_results",
            "assessments_ready",
            "final_results",
        ]
        assert [e.seq for e in events] == list(range(len(events)))
        assert session.state == "complete"

    def test_async_stream_reaches_terminal(self, service, store, embedder):
        add_embedded_card(store, embedder, "some indexed problem", "insight")
        session = service.submit_query("indexed problem")
        kinds = [e.kind for e in session.stream(timeout=10)]
        assert kinds[-1] == "final_results"
        assert session.wait_terminal(timeout=1)

    def test_empty_store_gives_empty_final(self, service):
        session = service.submit_query("anything at all", synchronous=True)
        final = session.final_event()
        assert final.kind == "final_results"
        assert final.payload["provide_nothing"] is True
        assert final.payload["results"] == []

    def test_empty_query_rejected(self, service):
        with pytest.raises(EmptyQuery):
            service.submit_query("   ")

    def test_final_payload_deterministic_across_runs(self, service, store, embedder):
        for i in range(8):
            add_embedded_card(store, embedder, f"problem about topic {i}", f"insight {i}")
        a = service.submit_query("problem topic 3", "balanced", "strict",
                                 now=T0, synchronous=True).final_event().payload
        b = service.submit_query("problem topic 3", "balanced", "strict",
                                 now=T0, synchronous=True).final_event().payload
        assert a == b

    def test_replay_after_seq(self, service, store, embedder):
        add_embedded_card(store, embedder, "replayable", "insight")
        session = service.submit_query("replayable", synchronous=True)
        tail = session.events(after_seq=2)
        assert [e.kind for e in tail] == ["assessments_ready", "final_results"]

    def test_llm_down_results_marked_unassessed(self, service, store, embedder, stub, caplog):
        add_embedded_card(store, embedder, "resilient problem entry", "insight")
        stub.fail_tasks("assess_similarity")
        with caplog.at_level("WARNING", logger="irec.workflow"):
            session = service.submit_query("resilient problem", synchronous=True)
        final = session.final_event()
        assert final.kind == "final_results"
        results = final.payload["results"]
        assert results and all(r["unassessed"] for r in results)
        assert any("fail-open" in rec.message for rec in caplog.records)

    def test_provide_nothing_when_all_assessed_distant(self, service, store, embedder, stub):
        card = add_embedded_card(store, embedder, "lone card problem", "insight")
        stub.script(
            {
                "task": "assess_similarity",
                "new_problem": "lone card problem",
                "card_problem": card.problem_text,
                "card_insight": card.insight_text,
            },
            {"score": 3, "rationale": "different topic"},
        )
        session = service.submit_query("lone card problem", "balanced", "strict", synchronous=True)
        final = session.final_event()
        assert final.payload["provide_nothing"] is True
        assert final.payload["results"] == []
        assert session.state == "complete"

    def test_embed_timeout_degrades_to_keyword_channels(self, store, embedder, stub):
        cfg = IrecConfig()
        cfg.timeouts.embed = 0.01
        gated = GatedEmbedder(embedder)
        service = WorkflowService(store=store, config=cfg, embedder=gated, llm=stub)
        try:
            store.create_card("findable by keyword alone", "insight", set(), now=T0)
            session = service.submit_query("findable keyword", synchronous=True)
            final = session.final_event()
            assert final.kind == "final_results"
            assert [r["paths"] for r in final.payload["results"]] == [["fulltext"]]
        finally:
            gated.gate.set()
            service.close()

    def test_pipeline_error_emits_error_event(self, service, store, embedder, monkeypatch):
        add_embedded_card(store, embedder, "boom", "insight")

        def explode(*args, **kwargs):
            raise RuntimeError("synthetic rerank failure")

        monkeypatch.setattr("irec.workflow.service.rerank", explode)
        session = service.submit_query("boom", synchronous=True)
        assert session.state == "failed"
        final = session.final_event()
        assert final.kind == "error"
        assert "synthetic rerank failure" in final.payload["message"]
        # the pre-failure events are retained
        assert [e.kind for e in session.events()][:2] == ["preliminary_results", "tags_resolved"]


class TestCapture:
    def test_capture_creates_card_and_decisions(self, service, store, embedder):
        store.upsert_tag("Calculus", embedding=embedder.embed("Calculus"))
        result = service.capture_insight(NOTE, now=T0)
        card = store.get_card(result.card_id)
        assert "u-substitution method" in card.insight_text
        assert card.access_count == 0
        assert len(result.decisions) == 1
        assert result.decisions[0].suggestion.raw_name == "u-substitution"
        service.wait_for_jobs()
        assert store.get_card(result.card_id).embedding is not None

    def test_note_without_tags_creates_zero_decisions(self, service):
        result = service.capture_insight("p ||| i", now=T0)
        assert result.decisions == []

    def test_empty_note_rejected(self, service):
        with pytest.raises(EmptyNote):
            service.capture_insight("")

    def test_fulltext_finds_card_before_embedding_completes(self, store, embedder, stub):
        gated = GatedEmbedder(embedder)
        service = WorkflowService(store=store, config=IrecConfig(), embedder=gated, llm=stub)
        try:
            result = service.capture_insight(
                "a problem with a pseudoquixotic token ||| remember the trick", now=T0
            )
            assert store.get_card(result.card_id).embedding is None  # job still gated
            hits = fulltext_recall(store, "pseudoquixotic", k=5)
            assert [cid for cid, _ in hits] == [result.card_id]
        finally:
            gated.gate.set()
            service.wait_for_jobs()
            service.close()
        assert store.get_card(result.card_id).embedding is not None

    def test_degraded_parse_still_captures(self, service, stub):
        stub.fail_tasks("parse_note")
        result = service.capture_insight("unparseable blob of text", now=T0)
        assert result.parsed.degraded
        card = service.store.get_card(result.card_id)
        assert card.insight_text == "unparseable blob of text"


class TestAppendInsight:
    def test_append_extends_and_reindexes(self, service, store, embedder):
        card = add_embedded_card(store, embedder, "original problem", "first thought")
        service.append_insight(card.id, "the essence is recognizing the inverse chain rule", now=T0 + 60)
        updated = store.get_card(card.id)
        assert "first thought" in updated.insight_text
        assert "inverse chain rule" in updated.insight_text
        hits = fulltext_recall(store, "essence inverse chain rule", k=5)
        assert hits and hits[0][0] == card.id
        service.wait_for_jobs()

    def test_append_unknown_card(self, service):
        with pytest.raises(UnknownCard):
            service.append_insight("ghost", "text")


class TestOpenResult:
    def _final_session(self, service, store, embedder):
        card = add_embedded_card(store, embedder, "openable problem text", "insight")
        session = service.submit_query("openable problem", synchronous=True)
        assert card.id in session.final_card_ids
        return session, card

    def test_open_increments_once(self, service, store, embedder):
        session, card = self._final_session(service, store, embedder)
        service.open_result(session.id, card.id, now=T0 + 5)
        assert store.get_card(card.id).access_count == 1
        assert store.get_card(card.id).last_accessed_at == T0 + 5

    def test_double_open_same_session_idempotent(self, service, store, embedder):
        session, card = self._final_session(service, store, embedder)
        service.open_result(session.id, card.id)
        service.open_result(session.id, card.id)
        assert store.get_card(card.id).access_count == 1

    def test_two_sessions_count_separately(self, service, store, embedder):
        session1, card = self._final_session(service, store, embedder)
        service.open_result(session1.id, card.id)
        session2 = service.submit_query("openable problem", synchronous=True)
        service.open_result(session2.id, card.id)
        assert store.get_card(card.id).access_count == 2

    def test_card_not_in_results_rejected(self, service, store, embedder):
        session, _ = self._final_session(service, store, embedder)
        stranger = store.create_card("unrelated", "i", set(), now=T0)
        with pytest.raises(NotInSession):
            service.open_result(session.id, stranger.id)

    def test_unknown_session(self, service):
        with pytest.raises(UnknownSession):
            service.open_result("ghost", "card")


class TestSessionLog:
    def test_completed_session_has_full_stage_checklist(self, service, store, embedder):
        add_embedded_card(store, embedder, "logged problem", "insight")
        session = service.submit_query("logged problem", synchronous=True)
        steps = service.get_session_log(session.id)
        names = [s.step_name for s in steps]
        assert set(STAGE_NAMES) <= set(names)
        assert all(s.duration_ms >= 0.0 for s in steps)

    def test_failed_session_logs_up_to_failure(self, service, store, embedder, monkeypatch):
        add_embedded_card(store, embedder, "crashing", "insight")
        monkeypatch.setattr(
            "irec.workflow.service.rerank",
            lambda *a, **k: (_ for _ in ()).throw(RuntimeError("stop")),
        )
        session = service.submit_query("crashing", synchronous=True)
        names = [s.step_name for s in service.get_session_log(session.id)]
        assert "recall.fulltext" in names
        assert "error" in names
        assert "filter" not in names

    def test_unknown_session(self, service):
        with pytest.raises(UnknownSession):
            service.get_session_log("ghost")


class TestInquiryThroughService:
    def test_open_and_reply(self, service, store, embedder):
        card = add_embedded_card(store, embedder, "old sub problem", "use u-substitution here")
        new_problem = store.create_card("new sin problem", "pending", set(), now=T0)
        inquiry = service.open_inquiry(card_id=card.id, problem_id=new_problem.id)
        assert inquiry.turns[0].role == "tutor"
        assert inquiry.context_refs == (new_problem.id, card.id)
        service.inquiry_reply(inquiry.id, "maybe u = x^2?")
        transcript = service.get_inquiry(inquiry.id)
        assert [t.role for t in transcript.turns] == ["tutor", "user", "tutor"]

    def test_inline_problem_text(self, service, store, embedder):
        card = add_embedded_card(store, embedder, "old", "insight")
        inquiry = service.open_inquiry(card_id=card.id, problem_text="an unsaved problem")
        assert inquiry.problem_ref == "inline"

    def test_requires_some_problem(self, service, store, embedder):
        card = add_embedded_card(store, embedder, "old", "insight")
        with pytest.raises(ValueError):
            service.open_inquiry(card_id=card.id)
