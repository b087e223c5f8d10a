"""Maps loose AI-suggested tags onto the existing hierarchy.

Pipeline per batch of suggestions:

1. Pre-screen: score every embedded tag against the suggestion name and its
   problem context (0.7 name similarity + 0.3 context similarity), keep the
   top N as candidates.
2. Phase 1 — one LLM call for the whole batch assigns each suggestion to a
   top-level branch (or marks it unresolvable).
3. Phase 2 — one LLM call per (suggestion, branch) decides: map to an
   existing in-branch tag or create a new tag under an in-branch parent.
4. Deterministic fallback when a phase fails or returns garbage: pick the
   candidate maximizing 0.7 * prescreen_confidence + 0.3 / (1 + level),
   preferring shallow (more stable) tags.

Nothing touches the graph until a human confirms: every outcome becomes a
pending MappingDecision; accept/modify applies it, veto discards it.
"""

from __future__ import annotations

import logging
import uuid
from dataclasses import dataclass, field

from .embeddings import EmbeddingProvider, cosine
from .errors import (
    AlreadyConfirmed,
    EmptyText,
    IrecError,
    MalformedLlmResponse,
    UnknownDecision,
)
from .graph.store import GraphStore
from .llm.stub import LlmProvider

logger = logging.getLogger("irec.tagmap")

TOP_N = 5
W_NAME, W_CONTEXT = 0.7, 0.3
W_CONF, W_LEVEL = 0.7, 0.3
UNCATEGORIZED = "Uncategorized"


def level_weight(level: int) -> float:
    """Depth preference for fallback: 1/(1+level), shallower is better."""
    return 1.0 / (1.0 + level)


@dataclass(frozen=True)
class TagSuggestion:
    raw_name: str
    source_card_id: str
    problem_context: str = ""


@dataclass(frozen=True)
class CandidateScore:
    tag_id: str
    score_cand: float
    name_sim: float
    context_sim: float


@dataclass(frozen=True)
class Outcome:
    kind: str  # "map" | "create" | "rejected"
    tag_id: str | None = None       # map: existing tag
    parent_id: str | None = None    # create: parent (None = Uncategorized root)
    name: str | None = None         # create: new tag name

    @classmethod
    def map_to(cls, tag_id: str) -> "Outcome":
        return cls("map", tag_id=tag_id)

    @classmethod
    def create_under(cls, parent_id: str | None, name: str) -> "Outcome":
        return cls("create", parent_id=parent_id, name=name)

    @classmethod
    def rejected(cls) -> "Outcome":
        return cls("rejected")


@dataclass
class MappingDecision:
    id: str
    suggestion: TagSuggestion
    outcome: Outcome
    origin: str                    # "llm" | "fallback"
    confirmed: bool = False
    status: str = "pending"        # pending | accepted | modified | vetoed
    applied_tag_id: str | None = None
    candidates: list[CandidateScore] = field(default_factory=list)

    def as_dict(self, store: GraphStore | None = None) -> dict:
        out: dict = {
            "id": self.id,
            "tag": self.suggestion.raw_name,
            "card_id": self.suggestion.source_card_id,
            "outcome": {
                "kind": self.outcome.kind,
                "tag_id": self.outcome.tag_id,
                "parent_id": self.outcome.parent_id,
                "name": self.outcome.name,
            },
            "origin": self.origin,
            "confirmed": self.confirmed,
            "status": self.status,
            "applied_tag_id": self.applied_tag_id,
        }
        if store is not None and self.outcome.tag_id:
            try:
                out["outcome"]["tag_name"] = store.get_tag(self.outcome.tag_id).name
            except IrecError:
                pass
        return out


class TagMapper:
    def __init__(
        self,
        store: GraphStore,
        embedder: EmbeddingProvider,
        llm: LlmProvider,
        top_n: int = TOP_N,
    ):
        self.store = store
        self.embedder = embedder
        self.llm = llm
        self.top_n = top_n
        self._decisions: dict[str, MappingDecision] = {}

    # ------------------------------------------------------------------
    # Scoring
    # ------------------------------------------------------------------

    def prescreen(self, suggestion: TagSuggestion, top_n: int | None = None) -> list[CandidateScore]:
        """Top-N candidate tags by 0.7·name-sim + 0.3·context-sim.

        Only tags with embeddings can be scored. Ties break by tag id.
        """
        top_n = self.top_n if top_n is None else top_n
        name_vec = self.embedder.embed(suggestion.raw_name)
        try:
            ctx_vec = self.embedder.embed(suggestion.problem_context)
        except EmptyText:
            ctx_vec = None
        scored = []
        for tag in self.store.tags():
            if tag.embedding is None:
                continue
            name_sim = cosine(name_vec, tag.embedding)
            ctx_sim = cosine(ctx_vec, tag.embedding) if ctx_vec is not None else 0.0
            scored.append(
                CandidateScore(
                    tag_id=tag.id,
                    score_cand=W_NAME * name_sim + W_CONTEXT * ctx_sim,
                    name_sim=name_sim,
                    context_sim=ctx_sim,
                )
            )
        scored.sort(key=lambda c: (-c.score_cand, c.tag_id))
        return scored[:top_n]

    def fallback_select(self, candidates: list[CandidateScore]) -> Outcome:
        """Deterministic non-LLM choice: argmax of 0.7·Conf + 0.3·W_level,
        ties broken by ascending tag id."""
        if not candidates:
            return Outcome.rejected()
        def fallback_score(c: CandidateScore) -> float:
            return W_CONF * c.score_cand + W_LEVEL * level_weight(self.store.get_tag(c.tag_id).level)
        best = sorted(candidates, key=lambda c: (-fallback_score(c), c.tag_id))[0]
        return Outcome.map_to(best.tag_id)

    # ------------------------------------------------------------------
    # LLM phases
    # ------------------------------------------------------------------

    def phase1_branch_select(self, batch: list[TagSuggestion]) -> dict[int, list[str]]:
        """One LLM request assigning every suggestion to 0+ root branches.

        Returns {batch index: [branch ids]}; an empty list marks the
        suggestion unresolvable. Raises on provider failure or a
        contract-breaking response (caller falls back).
        """
        branches = self.store.root_tags()
        if not branches:
            return {i: [] for i in range(len(batch))}
        request = {
            "task": "branch_select",
            "items": [
                {"tag": s.raw_name, "context": s.problem_context} for s in batch
            ],
            "branches": [{"id": b.id, "name": b.name} for b in branches],
        }
        resp = self.llm.complete(request)
        items = resp.get("items") if isinstance(resp, dict) else None
        if not isinstance(items, list) or len(items) != len(batch):
            raise MalformedLlmResponse("branch_select: items missing or wrong length")
        valid_ids = {b.id for b in branches}
        result: dict[int, list[str]] = {}
        for i, item in enumerate(items):
            ids = item.get("branch_ids") if isinstance(item, dict) else None
            if not isinstance(ids, list):
                raise MalformedLlmResponse("branch_select: branch_ids must be a list")
            result[i] = [bid for bid in ids if bid in valid_ids]
        return result

    def phase2_precise_select(
        self,
        suggestion: TagSuggestion,
        branch_id: str,
        candidates: list[CandidateScore],
    ) -> Outcome:
        """One LLM request deciding map-vs-create within the chosen branch.

        The response must target the branch subtree; anything else raises
        MalformedLlmResponse (caller falls back).
        """
        subtree = self.store.tag_subtree(branch_id)
        in_branch = [c for c in candidates if c.tag_id in subtree]
        request = {
            "task": "precise_select",
            "tag": suggestion.raw_name,
            "context": suggestion.problem_context,
            "branch": branch_id,
            "candidates": [
                {
                    "id": c.tag_id,
                    "name": self.store.get_tag(c.tag_id).name,
                    "level": self.store.get_tag(c.tag_id).level,
                }
                for c in in_branch
            ],
        }
        resp = self.llm.complete(request)
        if not isinstance(resp, dict):
            raise MalformedLlmResponse("precise_select: response is not an object")
        action = resp.get("action")
        if action == "map":
            target = resp.get("target_id")
            if not isinstance(target, str) or target not in subtree:
                raise MalformedLlmResponse(f"precise_select: target {target!r} not in branch")
            return Outcome.map_to(target)
        if action == "create":
            parent = resp.get("parent_id") or branch_id
            if parent not in subtree:
                raise MalformedLlmResponse(f"precise_select: parent {parent!r} not in branch")
            name = resp.get("name") or suggestion.raw_name
            if not isinstance(name, str) or not name.strip():
                raise MalformedLlmResponse("precise_select: empty tag name")
            return Outcome.create_under(parent, name.strip())
        raise MalformedLlmResponse(f"precise_select: unknown action {action!r}")

    # ------------------------------------------------------------------
    # Batch orchestration
    # ------------------------------------------------------------------

    def map_batch(self, batch: list[TagSuggestion]) -> list[MappingDecision]:
        """Run the full pipeline for a batch; returns pending decisions.

        The graph is not touched here — decisions wait for confirmation.
        """
        if not batch:
            return []
        prescreens = [self.prescreen(s) for s in batch]
        try:
            assignments = self.phase1_branch_select(batch)
            phase1_failed = False
        except IrecError as e:
            logger.warning("phase 1 branch selection failed, using fallback: %s", e)
            assignments = {}
            phase1_failed = True

        decisions = []
        for i, suggestion in enumerate(batch):
            candidates = prescreens[i]
            if phase1_failed:
                outcome, origin = self.fallback_select(candidates), "fallback"
            else:
                branch_ids = assignments.get(i, [])
                if not branch_ids:
                    # Unresolvable: park under the Uncategorized root.
                    outcome, origin = Outcome.create_under(None, suggestion.raw_name), "llm"
                else:
                    try:
                        outcome = self.phase2_precise_select(suggestion, branch_ids[0], candidates)
                        origin = "llm"
                    except IrecError as e:
                        logger.warning(
                            "phase 2 failed for %r, using fallback: %s", suggestion.raw_name, e
                        )
                        outcome, origin = self.fallback_select(candidates), "fallback"
            decisions.append(self._register(suggestion, outcome, origin, candidates))
        return decisions

    def _register(
        self,
        suggestion: TagSuggestion,
        outcome: Outcome,
        origin: str,
        candidates: list[CandidateScore],
    ) -> MappingDecision:
        decision = MappingDecision(
            id=uuid.uuid4().hex,
            suggestion=suggestion,
            outcome=outcome,
            origin=origin,
            candidates=candidates,
        )
        self._decisions[decision.id] = decision
        return decision

    # ------------------------------------------------------------------
    # Persistence (embedded CLI keeps decisions across invocations)
    # ------------------------------------------------------------------

    def export_decisions(self) -> list[dict]:
        return [
            {
                "id": d.id,
                "suggestion": {
                    "raw_name": d.suggestion.raw_name,
                    "source_card_id": d.suggestion.source_card_id,
                    "problem_context": d.suggestion.problem_context,
                },
                "outcome": {
                    "kind": d.outcome.kind,
                    "tag_id": d.outcome.tag_id,
                    "parent_id": d.outcome.parent_id,
                    "name": d.outcome.name,
                },
                "origin": d.origin,
                "confirmed": d.confirmed,
                "status": d.status,
                "applied_tag_id": d.applied_tag_id,
            }
            for d in self._decisions.values()
        ]

    def import_decisions(self, state: list[dict]) -> None:
        for item in state:
            s = item["suggestion"]
            o = item["outcome"]
            decision = MappingDecision(
                id=item["id"],
                suggestion=TagSuggestion(s["raw_name"], s["source_card_id"], s["problem_context"]),
                outcome=Outcome(o["kind"], o["tag_id"], o["parent_id"], o["name"]),
                origin=item["origin"],
                confirmed=item["confirmed"],
                status=item["status"],
                applied_tag_id=item.get("applied_tag_id"),
            )
            self._decisions[decision.id] = decision

    # ------------------------------------------------------------------
    # Human-in-the-loop confirmation
    # ------------------------------------------------------------------

    def pending_decisions(self) -> list[MappingDecision]:
        return [d for d in self._decisions.values() if not d.confirmed]

    def all_decisions(self) -> list[MappingDecision]:
        return list(self._decisions.values())

    def get_decision(self, decision_id: str) -> MappingDecision:
        try:
            return self._decisions[decision_id]
        except KeyError:
            raise UnknownDecision(decision_id) from None

    def confirm_decision(
        self,
        decision_id: str,
        action: str,
        new_outcome: Outcome | None = None,
    ) -> MappingDecision:
        """Apply (accept/modify) or discard (veto) a pending decision.

        Accepted and modified outcomes mutate the graph: map adds a HAS_TAG
        edge; create makes the tag (under the Uncategorized root when no
        parent was resolved) and then links it.
        """
        decision = self.get_decision(decision_id)
        if decision.confirmed:
            raise AlreadyConfirmed(decision_id)
        if action == "veto":
            decision.confirmed = True
            decision.status = "vetoed"
            logger.info("decision %s vetoed (%r)", decision_id, decision.suggestion.raw_name)
            return decision
        if action == "modify":
            if new_outcome is None:
                raise ValueError("modify requires a new outcome")
            decision.outcome = new_outcome
            decision.status = "modified"
        elif action == "accept":
            decision.status = "accepted"
        else:
            raise ValueError(f"unknown decision action {action!r}")

        self._apply(decision)
        decision.confirmed = True
        logger.info(
            "decision %s %s: %r -> %s",
            decision_id, decision.status, decision.suggestion.raw_name, decision.outcome.kind,
        )
        return decision

    def _apply(self, decision: MappingDecision) -> None:
        outcome = decision.outcome
        card_id = decision.suggestion.source_card_id
        if outcome.kind == "rejected":
            return
        if outcome.kind == "map":
            tag = self.store.get_tag(outcome.tag_id)
        else:
            parent_id = outcome.parent_id
            if parent_id is None:
                parent_id = self.store.upsert_tag(
                    UNCATEGORIZED, embedding=self.embedder.embed(UNCATEGORIZED)
                ).id
            name = outcome.name or decision.suggestion.raw_name
            tag = self.store.upsert_tag(name, parent_id, embedding=self.embedder.embed(name))
        self.store.add_card_tag(card_id, tag.id)
        decision.applied_tag_id = tag.id
