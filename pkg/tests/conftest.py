"""Shared fixtures: deterministic embedder, stores, stub provider, clock."""

from __future__ import annotations

import numpy as np
import pytest

from irec.config import IrecConfig
from irec.embeddings import HashingEmbedder
from irec.graph.store import GraphStore
from irec.llm.stub import ScriptedStub
from irec.workflow.service import WorkflowService

# Fixed "now" for reproducible timestamps (2023-11-14T22:13:20Z).
T0 = 1_700_000_000


@pytest.fixture
def embedder():
    return HashingEmbedder(dim=256)


@pytest.fixture
def store(embedder):
    return GraphStore(dim=embedder.dim)


@pytest.fixture
def stub(tmp_path):
    return ScriptedStub(fixtures_dir=str(tmp_path / "fixtures"))


@pytest.fixture
def service(store, embedder, stub):
    svc = WorkflowService(store=store, config=IrecConfig(), embedder=embedder, llm=stub)
    yield svc
    svc.close()


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def unit_vectors(rng: np.random.Generator, n: int, dim: int = 256) -> np.ndarray:
    """Random unit-norm rows."""
    m = rng.normal(size=(n, dim))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def add_embedded_card(store: GraphStore, embedder, problem: str, insight: str = "",
                      tag_ids=(), now: int = T0):
    """Create a card and set its embedding synchronously (test shortcut)."""
    card = store.create_card(problem, insight or problem, tag_ids, now=now)
    store.set_card_embedding(card.id, embedder.embed(card.search_text()))
    return card
