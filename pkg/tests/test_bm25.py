"""BM25 index vs a naive per-document oracle, plus incremental updates."""

from __future__ import annotations

import math
from collections import Counter

import pytest

from irec.embeddings import tokenize
from irec.recall.bm25 import Bm25Index

WORDS = (
    "integral derivative substitution series limit matrix vector proof "
    "induction prime graph tree heap sort search dynamic greedy flow "
    "probability expectation variance entropy gradient descent convex"
).split()


def naive_bm25(docs: dict[str, str], query: str, k1: float = 1.2, b: float = 0.75) -> dict[str, float]:
    """Straightforward per-document BM25, no inverted index, no caching."""
    tokenized = {d: tokenize(t) for d, t in docs.items()}
    n = len(docs)
    total = sum(len(t) for t in tokenized.values())
    avg = total / n if n and total else 1.0
    scores: dict[str, float] = {}
    for doc_id, tokens in tokenized.items():
        counts = Counter(tokens)
        dl = len(tokens)
        score = 0.0
        for term in set(tokenize(query)):
            tf = counts.get(term, 0)
            if tf == 0:
                continue
            df = sum(1 for other in tokenized.values() if term in other)
            idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avg))
        if score > 0.0:
            scores[doc_id] = score
    return scores


def random_corpus(rng, n_docs: int) -> dict[str, str]:
    return {
        f"d{i:04d}": " ".join(rng.choice(WORDS, size=rng.integers(3, 40)))
        for i in range(n_docs)
    }


class TestAgainstOracle:
    def test_hundred_doc_corpus_matches_oracle(self, rng):
        docs = random_corpus(rng, 100)
        index = Bm25Index()
        for doc_id, text in docs.items():
            index.add(doc_id, text)
        for _ in range(25):
            query = " ".join(rng.choice(WORDS, size=rng.integers(1, 5)))
            expected = naive_bm25(docs, query)
            got = index.search(query, k=len(docs))
            expected_ranked = sorted(expected.items(), key=lambda p: (-p[1], p[0]))
            assert [d for d, _ in got] == [d for d, _ in expected_ranked]
            for (d1, s1), (d2, s2) in zip(got, expected_ranked):
                assert s1 == pytest.approx(s2, abs=1e-9)

    def test_oracle_agreement_survives_updates(self, rng):
        docs = random_corpus(rng, 40)
        index = Bm25Index()
        for doc_id, text in docs.items():
            index.add(doc_id, text)
        # Rewrite a third of the corpus in place.
        for doc_id in list(docs)[::3]:
            docs[doc_id] = " ".join(rng.choice(WORDS, size=rng.integers(3, 40)))
            index.update(doc_id, docs[doc_id])
        query = "integral substitution gradient"
        expected = naive_bm25(docs, query)
        got = dict(index.search(query, k=len(docs)))
        assert set(got) == set(expected)
        for doc_id, score in expected.items():
            assert got[doc_id] == pytest.approx(score, abs=1e-9)


class TestBasics:
    def test_no_matching_tokens_gives_empty(self):
        index = Bm25Index()
        index.add("a", "integral of a polynomial")
        assert index.search("quantum chromodynamics", k=10) == []

    def test_single_document_positive_score(self):
        index = Bm25Index()
        index.add("only", "u substitution trick for integrals")
        hits = index.search("substitution", k=10)
        assert len(hits) == 1
        assert hits[0][0] == "only"
        assert hits[0][1] > 0.0

    def test_empty_index(self):
        assert Bm25Index().search("anything", k=5) == []

    def test_ties_break_by_doc_id(self):
        index = Bm25Index()
        index.add("b", "alpha beta")
        index.add("a", "alpha beta")
        hits = index.search("alpha", k=10)
        assert [d for d, _ in hits] == ["a", "b"]

    def test_update_changes_retrievability(self):
        index = Bm25Index()
        index.add("x", "original words here")
        assert index.search("appended", k=5) == []
        index.update("x", "original words here plus appended token")
        assert [d for d, _ in index.search("appended", k=5)] == ["x"]
        # The removed-term path: rewrite without 'original'.
        index.update("x", "totally new content")
        assert index.search("original", k=5) == []
