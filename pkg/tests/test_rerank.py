"""Reranker signals, the fixed weight table, and a brute-force scoring oracle."""

from __future__ import annotations

import math

import pytest

from irec.errors import PathCountOutOfRange, UnknownCard
from irec.graph.store import GraphStore
from irec.recall.engine import RecallCandidate
from irec.rerank import (
    K_ACC,
    MODE_WEIGHTS,
    T_HALF,
    LearningMode,
    access_score,
    diversity_score,
    rerank,
    temporal_score,
)

from conftest import T0

DAY = 86400


class TestWeightTable:
    def test_exact_decimal_literals(self):
        w = MODE_WEIGHTS[LearningMode.LEARNING]
        assert (w.w_rel, w.w_acc, w.w_temp, w.w_div) == (0.50, 0.20, 0.20, 0.10)
        w = MODE_WEIGHTS[LearningMode.REVIEW]
        assert (w.w_rel, w.w_acc, w.w_temp, w.w_div) == (0.40, 0.25, 0.25, 0.10)
        w = MODE_WEIGHTS[LearningMode.BALANCED]
        assert (w.w_rel, w.w_acc, w.w_temp, w.w_div) == (0.60, 0.15, 0.15, 0.10)

    def test_rows_sum_to_one(self):
        for w in MODE_WEIGHTS.values():
            assert w.w_rel + w.w_acc + w.w_temp + w.w_div == pytest.approx(1.0, abs=1e-12)


class TestAccessScore:
    def test_learning_zero_accesses(self):
        assert access_score(0, LearningMode.LEARNING) == 0.0

    def test_learning_saturates_at_k_acc(self):
        assert access_score(10, LearningMode.LEARNING) == pytest.approx(1.0, abs=1e-9)

    def test_learning_clamped_beyond_saturation(self):
        assert access_score(1000, LearningMode.LEARNING) == 1.0

    def test_review_at_k_acc(self):
        assert access_score(10, LearningMode.REVIEW) == pytest.approx(0.5, abs=1e-9)

    def test_review_zero_is_one(self):
        assert access_score(0, LearningMode.REVIEW) == 1.0

    def test_balanced_shares_learning_formula(self):
        for n in (0, 1, 5, 10, 50):
            assert access_score(n, LearningMode.BALANCED) == access_score(n, LearningMode.LEARNING)

    def test_learning_nondecreasing_review_decreasing(self):
        prev_learn, prev_review = -1.0, 2.0
        for n in range(0, 40):
            a_learn = access_score(n, LearningMode.LEARNING)
            a_review = access_score(n, LearningMode.REVIEW)
            assert a_learn >= prev_learn
            assert a_review < prev_review
            prev_learn, prev_review = a_learn, a_review

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            access_score(-1, LearningMode.LEARNING)


class TestTemporalScore:
    def test_learning_fresh_is_one(self):
        assert temporal_score(0.0, LearningMode.LEARNING) == 1.0

    def test_learning_half_life(self):
        assert temporal_score(30.0, LearningMode.LEARNING) == pytest.approx(0.5, abs=1e-9)

    def test_review_fresh_is_zero_and_half_life(self):
        assert temporal_score(0.0, LearningMode.REVIEW) == 0.0
        assert temporal_score(30.0, LearningMode.REVIEW) == pytest.approx(0.5, abs=1e-9)

    def test_modes_sum_to_one_identity(self, rng):
        for dt in rng.uniform(0.0, 2000.0, size=1000):
            total = temporal_score(float(dt), LearningMode.LEARNING) + temporal_score(
                float(dt), LearningMode.REVIEW
            )
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_learning_strictly_decreasing_review_strictly_increasing(self):
        ages = [0.0, 1.0, 5.0, 29.0, 30.0, 100.0, 365.0]
        learn = [temporal_score(a, LearningMode.LEARNING) for a in ages]
        review = [temporal_score(a, LearningMode.REVIEW) for a in ages]
        assert all(x > y for x, y in zip(learn, learn[1:]))
        assert all(x < y for x, y in zip(review, review[1:]))


class TestDiversityScore:
    @pytest.mark.parametrize("paths,expected", [(1, 0.0), (2, 0.5), (3, 1.0)])
    def test_values(self, paths, expected):
        assert diversity_score(paths) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("paths", [0, 4, -1])
    def test_out_of_range(self, paths):
        with pytest.raises(PathCountOutOfRange):
            diversity_score(paths)


def brute_force_rank(cards_meta, candidates, mode: str, now: int):
    """Oracle: recompute every signal from scratch with plain floats.

    cards_meta: card_id -> (access_count, anchor_epoch_seconds)
    candidates: card_id -> (fused_relevance, path_count)
    """
    weights = {
        "learning": (0.50, 0.20, 0.20, 0.10),
        "review": (0.40, 0.25, 0.25, 0.10),
        "balanced": (0.60, 0.15, 0.15, 0.10),
    }[mode]
    scored = []
    for card_id, (relevance, paths) in candidates.items():
        n_access, anchor = cards_meta[card_id]
        dt = max(0.0, (now - anchor) / 86400.0)
        if mode == "review":
            a = 1.0 / (1.0 + n_access / 10.0)
            t = (dt / 30.0) / (1.0 + dt / 30.0)
        else:
            a = min(1.0, math.log(1.0 + n_access) / math.log(11.0))
            t = 1.0 / (1.0 + dt / 30.0)
        d = (paths - 1) / 2.0
        s = weights[0] * relevance + weights[1] * a + weights[2] * t + weights[3] * d
        scored.append((card_id, s))
    scored.sort(key=lambda p: (-p[1], p[0]))
    return scored


def make_candidate(card_id: str, relevance: float, paths: int) -> RecallCandidate:
    channels = ["vector", "fulltext", "tag"][:paths]
    return RecallCandidate(
        card_id=card_id,
        raw_scores={ch: relevance for ch in channels},
        normalized_scores={ch: relevance for ch in channels},
        fused_relevance=relevance,
    )


class TestRerank:
    def test_worked_learning_example(self, store):
        # R=1, n=0, Δt=0, paths=1 under Learning: .5*1 + .2*0 + .2*1 + .1*0
        card = store.create_card("p", "i", set(), now=T0)
        ranked = rerank([make_candidate(card.id, 1.0, 1)], LearningMode.LEARNING, T0, store)
        assert ranked[0].final_score == pytest.approx(0.70, abs=1e-12)
        assert (ranked[0].relevance, ranked[0].access, ranked[0].temporal, ranked[0].diversity) == (
            1.0, 0.0, 1.0, 0.0,
        )

    def test_higher_relevance_wins_when_otherwise_identical(self, store):
        a = store.create_card("pa", "i", set(), now=T0)
        b = store.create_card("pb", "i", set(), now=T0)
        ranked = rerank(
            [make_candidate(a.id, 0.4, 1), make_candidate(b.id, 0.9, 1)],
            LearningMode.BALANCED,
            T0,
            store,
        )
        assert ranked[0].card_id == b.id

    def test_matches_brute_force_oracle_all_modes(self, rng):
        store = GraphStore()
        cards_meta = {}
        candidates = {}
        cand_list = []
        for i in range(1000):
            created = T0 - int(rng.integers(0, 400)) * DAY
            card = store.create_card(f"p{i}", "i", set(), now=created)
            n_access = int(rng.integers(0, 30))
            anchor = created
            if n_access:
                anchor = created + int(rng.integers(0, 100)) * DAY
                for _ in range(n_access - 1):
                    store.record_access(card.id, now=anchor - DAY)
                store.record_access(card.id, now=anchor)
            cards_meta[card.id] = (n_access, anchor)
            relevance = float(rng.random())
            paths = int(rng.integers(1, 4))
            candidates[card.id] = (relevance, paths)
            cand_list.append(make_candidate(card.id, relevance, paths))

        now = T0 + 500 * DAY
        for mode in LearningMode:
            got = rerank(cand_list, mode, now, store)
            expected = brute_force_rank(cards_meta, candidates, mode.value, now)
            assert [r.card_id for r in got] == [c for c, _ in expected]
            for r, (_, s) in zip(got, expected):
                assert r.final_score == pytest.approx(s, abs=1e-12)

    def test_decomposition_invariant(self, store, rng):
        cards = [store.create_card(f"p{i}", "i", set(), now=T0 - i * DAY) for i in range(50)]
        cand_list = [
            make_candidate(c.id, float(rng.random()), int(rng.integers(1, 4))) for c in cards
        ]
        for mode in LearningMode:
            for r in rerank(cand_list, mode, T0, store):
                w = MODE_WEIGHTS[mode]
                recomputed = (
                    w.w_rel * r.relevance + w.w_acc * r.access + w.w_temp * r.temporal + w.w_div * r.diversity
                )
                assert r.final_score == pytest.approx(recomputed, abs=1e-12)

    def test_input_list_unmodified(self, store):
        card = store.create_card("p", "i", set(), now=T0)
        cand = make_candidate(card.id, 0.7, 2)
        original = [cand]
        rerank(original, LearningMode.LEARNING, T0, store)
        assert original == [cand]
        assert cand.fused_relevance == 0.7

    def test_never_accessed_card_ages_from_creation(self, store):
        old = store.create_card("p", "i", set(), now=T0 - 30 * DAY)
        ranked = rerank([make_candidate(old.id, 1.0, 1)], LearningMode.LEARNING, T0, store)
        assert ranked[0].temporal == pytest.approx(0.5, abs=1e-9)

    def test_unknown_card_rejected(self, store):
        with pytest.raises(UnknownCard):
            rerank([make_candidate("ghost", 0.5, 1)], LearningMode.LEARNING, T0, store)

    def test_rank_order_stable_under_id_relabeling(self, store, rng):
        # Order-preserving relabeling of card ids must not change the
        # result ordering (ids only break exact ties).
        cards = []
        for i in range(30):
            card = store.create_card(f"p{i}", "i", set(), now=T0 - int(rng.integers(0, 90)) * DAY)
            cards.append(card)
        cand_list = [
            make_candidate(c.id, float(rng.random()), int(rng.integers(1, 4))) for c in cards
        ]
        baseline = rerank(cand_list, LearningMode.BALANCED, T0, store)
        by_score = [r.final_score for r in baseline]
        assert by_score == sorted(by_score, reverse=True)

    def test_mode_string_parsing(self):
        assert LearningMode.parse("Learning") is LearningMode.LEARNING
        assert LearningMode.parse(" BALANCED ") is LearningMode.BALANCED
        with pytest.raises(ValueError):
            LearningMode.parse("cramming")
