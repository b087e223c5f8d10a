"""Gateway operations over the scripted stub: parsing, assessment,
filtering, inquiry, and stub determinism."""

from __future__ import annotations

import pytest

from irec.errors import EmptyNote, LlmUnavailable, MalformedLlmResponse
from irec.llm.gateway import (
    LOOSE,
    STRICT,
    SimilarityAssessment,
    assess_similarity,
    filter_by_level,
    inquiry_turn,
    open_inquiry,
    parse_filter_level,
    parse_insight_note,
)
from irec.llm.stub import ScriptedStub, request_digest
from irec.rerank import LearningMode, RankedResult

from conftest import T0


def ranked(card_id: str, score: float = 0.5) -> RankedResult:
    return RankedResult(
        card_id=card_id,
        relevance=score,
        access=0.0,
        temporal=1.0,
        diversity=0.0,
        final_score=score,
        mode=LearningMode.BALANCED,
        path_set=frozenset({"vector"}),
    )


class TestParseNote:
    def test_stub_grammar(self, stub):
        parsed = parse_insight_note(stub, "p ||| i")
        assert parsed.problem == "p"
        assert parsed.insight == "i"
        assert parsed.suggested_tags == []
        assert not parsed.degraded

    def test_grammar_with_tags(self, stub):
        parsed = parse_insight_note(
            stub,
            "Compute the indefinite integral of x(x^2+1)^3 dx ||| "
            "One part of the integrand is a multiple of the derivative of another; "
            "substitute u = x^2+1. ||| u-substitution, Integration",
        )
        assert parsed.problem.startswith("Compute the indefinite integral")
        assert "u-substitution" in parsed.suggested_tags
        assert "Integration" in parsed.suggested_tags

    def test_tags_deduplicated_case_insensitively(self, stub):
        parsed = parse_insight_note(stub, "p ||| i ||| Algebra, algebra, ALGEBRA, Other")
        assert parsed.suggested_tags == ["Algebra", "Other"]

    def test_empty_note(self, stub):
        with pytest.raises(EmptyNote):
            parse_insight_note(stub, "  \n ")

    def test_provider_failure_degrades(self, stub):
        stub.fail_tasks("parse_note")
        parsed = parse_insight_note(stub, "the whole note body")
        assert parsed.degraded
        assert parsed.problem == ""
        assert parsed.insight == "the whole note body"

    def test_malformed_response_degrades(self, stub):
        note = "note text"
        stub.script({"task": "parse_note", "note": note}, {"problem": "", "insight": ""})
        parsed = parse_insight_note(stub, note)
        assert parsed.degraded


class TestAssessSimilarity:
    def test_identical_texts_score_zero(self, stub, store):
        card = store.create_card("exact same words", "i", set(), now=T0)
        out = assess_similarity(stub, "exact same words", card)
        assert out.score == 0

    def test_scripted_scores(self, stub, store):
        card = store.create_card("old problem", "old insight", set(), now=T0)
        stub.script(
            {
                "task": "assess_similarity",
                "new_problem": "new problem",
                "card_problem": "old problem",
                "card_insight": "old insight",
            },
            {"score": 1, "rationale": "same method, different surface form"},
        )
        out = assess_similarity(stub, "new problem", card)
        assert out == SimilarityAssessment(1, "same method, different surface form")

    def test_out_of_scale_score_is_malformed(self, stub, store):
        card = store.create_card("old", "i", set(), now=T0)
        stub.script(
            {
                "task": "assess_similarity",
                "new_problem": "new",
                "card_problem": "old",
                "card_insight": "i",
            },
            {"score": 7, "rationale": ""},
        )
        with pytest.raises(MalformedLlmResponse):
            assess_similarity(stub, "new", card)

    def test_provider_down_raises(self, stub, store):
        card = store.create_card("old", "i", set(), now=T0)
        stub.fail_tasks("assess_similarity")
        with pytest.raises(LlmUnavailable):
            assess_similarity(stub, "new", card)


class TestFilterByLevel:
    def test_strict_keeps_only_passing(self):
        rows = [
            (ranked("a"), SimilarityAssessment(1, "")),
            (ranked("b"), SimilarityAssessment(3, "")),
        ]
        assert [r.card_id for r in filter_by_level(rows, STRICT)] == ["a"]

    def test_loose_keeps_both(self):
        rows = [
            (ranked("a"), SimilarityAssessment(1, "")),
            (ranked("b"), SimilarityAssessment(3, "")),
        ]
        assert [r.card_id for r in filter_by_level(rows, LOOSE)] == ["a", "b"]

    def test_all_threes_strict_is_provide_nothing(self):
        rows = [(ranked(c), SimilarityAssessment(3, "")) for c in "abc"]
        assert filter_by_level(rows, STRICT) == []

    def test_unassessed_passes(self):
        rows = [(ranked("a"), None), (ranked("b"), SimilarityAssessment(3, ""))]
        assert [r.card_id for r in filter_by_level(rows, STRICT)] == ["a"]

    def test_loose_superset_of_strict(self, rng):
        for _ in range(300):
            rows = []
            for i in range(int(rng.integers(0, 12))):
                assessment = (
                    None if rng.random() < 0.2
                    else SimilarityAssessment(int(rng.integers(0, 4)), "")
                )
                rows.append((ranked(f"c{i}"), assessment))
            strict_ids = [r.card_id for r in filter_by_level(rows, STRICT)]
            loose_ids = [r.card_id for r in filter_by_level(rows, LOOSE)]
            assert set(strict_ids) <= set(loose_ids)
            # order preserved: surviving ids appear in original order
            original = [r.card_id for r, _ in rows]
            assert strict_ids == [c for c in original if c in set(strict_ids)]

    def test_parse_filter_level(self):
        assert parse_filter_level("Strict").threshold == 2
        assert parse_filter_level(" LOOSE ").threshold == 3
        with pytest.raises(ValueError):
            parse_filter_level("medium")


class TestInquiry:
    def test_opening_turn_references_both_contexts(self, stub, store):
        card = store.create_card(
            "integral of x(x^2+1)^3", "the u-substitution method works here", set(), now=T0
        )
        session = open_inquiry(stub, "problem-1", "integral of x sin(x^2)", card)
        assert len(session.turns) == 1
        first = session.turns[0]
        assert first.role == "tutor"
        assert first.context_refs == ("problem-1", card.id)
        assert "u-substitution" in first.text

    def test_history_carried_in_requests(self, stub, store):
        card = store.create_card("old problem", "old insight", set(), now=T0)
        session = open_inquiry(stub, "p", "new problem", card)
        inquiry_turn(stub, session, "I think u should be x squared")
        last_request = stub.calls_for("inquiry")[-1]
        roles = [t["role"] for t in last_request["history"]]
        assert roles == ["tutor", "user"]
        assert last_request["history"][1]["text"] == "I think u should be x squared"
        assert last_request["problem"] == "new problem"
        assert last_request["insight"] == "old insight"
        assert [t.role for t in session.turns] == ["tutor", "user", "tutor"]

    def test_provider_down_preserves_session(self, stub, store):
        card = store.create_card("old", "insight", set(), now=T0)
        session = open_inquiry(stub, "p", "new", card)
        stub.fail_tasks("inquiry")
        with pytest.raises(LlmUnavailable):
            inquiry_turn(stub, session, "hello?")
        assert [t.role for t in session.turns] == ["tutor"]  # nothing dangling
        stub.restore_tasks("inquiry")
        inquiry_turn(stub, session, "hello again")
        assert [t.role for t in session.turns] == ["tutor", "user", "tutor"]


class TestStubDeterminism:
    def test_identical_digests_identical_responses_across_instances(self, tmp_path):
        fixtures = str(tmp_path / "fx")
        first = ScriptedStub(fixtures_dir=fixtures)
        request = {"task": "assess_similarity", "new_problem": "a", "card_problem": "b", "card_insight": "c"}
        first.script(request, {"score": 2, "rationale": "r"}, persist=True)
        second = ScriptedStub(fixtures_dir=fixtures)  # fresh instance, file-backed
        assert second.complete(request) == {"score": 2, "rationale": "r"}
        assert second.complete(request) == second.complete(request)

    def test_digest_is_key_order_independent(self):
        a = {"task": "x", "alpha": 1, "beta": 2}
        b = {"beta": 2, "alpha": 1, "task": "x"}
        assert request_digest(a) == request_digest(b)

    def test_default_behaviors_are_deterministic(self, stub):
        req = {"task": "parse_note", "note": "p ||| i ||| t"}
        assert stub.complete(req) == stub.complete(req)
