"""Language-model-backed operations: note parsing, pairwise similarity
assessment with ordinal filtering, and guided-inquiry dialogue.

All payloads are JSON dicts with a ``task`` discriminator so any provider
(scripted stub or external) can serve them. Responses are validated here;
a response that breaks the contract raises MalformedLlmResponse, which
callers treat like provider unavailability (degrade, never crash the
pipeline).
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field

from ..config import FilterConfig
from ..errors import EmptyNote, IrecError, LlmUnavailable, MalformedLlmResponse
from ..graph.models import ProblemCard
from ..rerank import RankedResult
from .stub import LlmProvider

# Ordinal similarity scale: 0 = essentially identical, 1 = slight variation,
# 2 = same core method with different surface, 3 = different method or topic.
SIMILARITY_SCORES = (0, 1, 2, 3)

SOCRATIC_DIRECTIVE = (
    "You are a Socratic tutor. Never hand over the solution. Use the "
    "learner's own recorded insight and the current problem to ask one "
    "question at a time that leads them to transfer the old idea to the "
    "new context."
)


@dataclass
class ParsedInsight:
    problem: str
    insight: str
    suggested_tags: list[str]
    degraded: bool = False  # provider failed; problem left empty for the user


@dataclass
class SimilarityAssessment:
    score: int
    rationale: str


@dataclass(frozen=True)
class FilterLevel:
    name: str
    threshold: int

    def passes(self, score: int) -> bool:
        return score <= self.threshold


STRICT = FilterLevel("strict", 2)
LOOSE = FilterLevel("loose", 3)


def parse_filter_level(value: str, cfg: FilterConfig | None = None) -> FilterLevel:
    cfg = cfg or FilterConfig()
    levels = {
        "strict": FilterLevel("strict", cfg.strict_threshold),
        "loose": FilterLevel("loose", cfg.loose_threshold),
    }
    try:
        return levels[value.strip().lower()]
    except KeyError:
        raise ValueError(
            f"unknown filter level {value!r}; expected one of {', '.join(levels)}"
        ) from None


def _dedup_tags(tags: list[str]) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []
    for tag in tags:
        key = tag.strip().casefold()
        if key and key not in seen:
            seen.add(key)
            out.append(tag.strip())
    return out


def parse_insight_note(provider: LlmProvider, raw_note: str) -> ParsedInsight:
    """Parse a free-text note into problem / insight / suggested tags.

    Provider failure (or a contract-breaking response) degrades instead of
    failing: the whole note becomes the insight and the empty problem field
    flags the card for user completion.
    """
    if not raw_note or not raw_note.strip():
        raise EmptyNote("insight note is empty")
    try:
        resp = provider.complete({"task": "parse_note", "note": raw_note})
        problem = resp["problem"]
        insight = resp["insight"]
        tags = resp.get("tags", [])
        if not isinstance(problem, str) or not isinstance(insight, str):
            raise MalformedLlmResponse("parse_note: problem/insight must be strings")
        if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
            raise MalformedLlmResponse("parse_note: tags must be a list of strings")
        if not problem.strip() or not insight.strip():
            raise MalformedLlmResponse("parse_note: empty problem or insight")
        return ParsedInsight(
            problem=problem.strip(),
            insight=insight.strip(),
            suggested_tags=_dedup_tags(tags),
        )
    except (KeyError, TypeError, IrecError):
        return ParsedInsight("", raw_note.strip(), [], degraded=True)


def assess_similarity(
    provider: LlmProvider, new_problem_text: str, card: ProblemCard
) -> SimilarityAssessment:
    """Ordinal similarity of the new problem to one historical card.

    Raises LlmUnavailable / MalformedLlmResponse; callers fail open by
    passing the card through unassessed.
    """
    if not new_problem_text.strip() or not card.problem_text.strip():
        raise ValueError("both problem texts must be non-empty")
    resp = provider.complete(
        {
            "task": "assess_similarity",
            "new_problem": new_problem_text,
            "card_problem": card.problem_text,
            "card_insight": card.insight_text,
        }
    )
    try:
        score = resp["score"]
        rationale = str(resp.get("rationale", ""))
    except (KeyError, TypeError) as e:
        raise MalformedLlmResponse(f"assess_similarity: {e}") from e
    if not isinstance(score, int) or score not in SIMILARITY_SCORES:
        raise MalformedLlmResponse(f"assess_similarity: score {score!r} not in {SIMILARITY_SCORES}")
    return SimilarityAssessment(score=score, rationale=rationale)


def filter_by_level(
    assessed: list[tuple[RankedResult, SimilarityAssessment | None]],
    level: FilterLevel,
) -> list[RankedResult]:
    """Keep results whose score passes the level; unassessed results pass
    (fail-open). Rank order is preserved; an empty output is a legal
    provide-nothing outcome."""
    return [
        result
        for result, assessment in assessed
        if assessment is None or level.passes(assessment.score)
    ]


@dataclass
class InquiryTurn:
    role: str  # "user" | "tutor"
    text: str
    context_refs: tuple[str, str]  # (current problem ref, recalled card id)


@dataclass
class InquirySession:
    id: str
    problem_ref: str
    problem_text: str
    card_id: str
    insight_text: str
    turns: list[InquiryTurn] = field(default_factory=list)

    @property
    def context_refs(self) -> tuple[str, str]:
        return (self.problem_ref, self.card_id)


def open_inquiry(
    provider: LlmProvider,
    problem_ref: str,
    problem_text: str,
    card: ProblemCard,
) -> InquirySession:
    """Start a guided-inquiry dialogue; the first turn is tutor-initiated
    and carries both context refs."""
    session = InquirySession(
        id=uuid.uuid4().hex,
        problem_ref=problem_ref,
        problem_text=problem_text,
        card_id=card.id,
        insight_text=card.insight_text,
    )
    inquiry_turn(provider, session, None)
    return session


def inquiry_turn(
    provider: LlmProvider, session: InquirySession, user_message: str | None
) -> InquiryTurn:
    """Advance the dialogue by one tutor reply.

    The request carries the full history plus both contexts. On provider
    failure nothing is appended, so the session survives for a retry.
    """
    history = [{"role": t.role, "text": t.text} for t in session.turns]
    if user_message is not None:
        history.append({"role": "user", "text": user_message})
    resp = provider.complete(
        {
            "task": "inquiry",
            "system": SOCRATIC_DIRECTIVE,
            "problem": session.problem_text,
            "insight": session.insight_text,
            "history": history,
        }
    )
    try:
        text = resp["text"]
        if not isinstance(text, str) or not text.strip():
            raise MalformedLlmResponse("inquiry: empty tutor reply")
    except (KeyError, TypeError) as e:
        raise MalformedLlmResponse(f"inquiry: {e}") from e
    if user_message is not None:
        session.turns.append(InquiryTurn("user", user_message, session.context_refs))
    turn = InquiryTurn("tutor", text, session.context_refs)
    session.turns.append(turn)
    return turn
