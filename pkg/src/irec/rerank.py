"""Mode-aware multi-signal reranking of fused recall candidates.

The final score is a weighted sum of four signals in [0, 1]:

    S = w_rel * R + w_acc * A + w_temp * T + w_div * D

R is the fused relevance from recall; A (access frequency) and T (temporal
recency) swap formulas with the selected learning mode; D rewards cards
found by multiple recall channels. Learning and Balanced favor popular,
recent cards; Review inverts both to resurface neglected, stale ones. The
per-mode weight vectors are fixed constants, not tunables.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import PathCountOutOfRange
from .graph.store import GraphStore
from .recall.engine import RecallCandidate

# Access-count saturation constant: Learning-mode A reaches 1.0 at this count.
K_ACC = 10.0
# Temporal half-life in days: Learning-mode T decays to 0.5 here.
T_HALF = 30.0
# Total number of recall channels.
N_PATHS = 3


class LearningMode(enum.Enum):
    LEARNING = "learning"
    REVIEW = "review"
    BALANCED = "balanced"

    @classmethod
    def parse(cls, value: str) -> "LearningMode":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown learning mode {value!r}; expected one of "
                f"{', '.join(m.value for m in cls)}"
            ) from None


@dataclass(frozen=True)
class RerankWeights:
    w_rel: float
    w_acc: float
    w_temp: float
    w_div: float


MODE_WEIGHTS: dict[LearningMode, RerankWeights] = {
    LearningMode.LEARNING: RerankWeights(0.50, 0.20, 0.20, 0.10),
    LearningMode.REVIEW: RerankWeights(0.40, 0.25, 0.25, 0.10),
    LearningMode.BALANCED: RerankWeights(0.60, 0.15, 0.15, 0.10),
}


def access_score(n_access: int, mode: LearningMode) -> float:
    """Access-frequency signal A in [0, 1].

    Learning/Balanced grow logarithmically, saturating (clamped) at K_ACC
    accesses; Review decreases so rarely-opened cards surface.
    """
    if n_access < 0:
        raise ValueError("access count must be >= 0")
    if mode is LearningMode.REVIEW:
        return 1.0 / (1.0 + n_access / K_ACC)
    return min(1.0, math.log(1.0 + n_access) / math.log(1.0 + K_ACC))


def temporal_score(delta_days: float, mode: LearningMode) -> float:
    """Temporal-recency signal T in [0, 1].

    Learning/Balanced decay with age (0.5 at T_HALF days); Review grows with
    age toward 1. The two formulas sum to exactly 1 at every age.
    """
    if delta_days < 0:
        raise ValueError("delta_days must be >= 0")
    ratio = delta_days / T_HALF
    if mode is LearningMode.REVIEW:
        return ratio / (1.0 + ratio)
    return 1.0 / (1.0 + ratio)


def diversity_score(path_count: int) -> float:
    """Diversity signal D in [0, 1]: fraction of extra channels that hit."""
    if not 1 <= path_count <= N_PATHS:
        raise PathCountOutOfRange(path_count, N_PATHS)
    return (path_count - 1) / (N_PATHS - 1)


@dataclass
class RankedResult:
    card_id: str
    relevance: float        # R: fused recall relevance
    access: float           # A
    temporal: float         # T
    diversity: float        # D
    final_score: float      # S = w·(R, A, T, D)
    mode: LearningMode
    path_set: frozenset[str]

    def as_dict(self) -> dict:
        return {
            "card_id": self.card_id,
            "relevance": self.relevance,
            "access": self.access,
            "temporal": self.temporal,
            "diversity": self.diversity,
            "final_score": self.final_score,
            "mode": self.mode.value,
            "paths": sorted(self.path_set),
        }


def rerank(
    candidates: Sequence[RecallCandidate],
    mode: LearningMode,
    now: int,
    store: GraphStore,
) -> list[RankedResult]:
    """Score every candidate under the mode's weights and sort.

    Sorted by final score descending, card id ascending on ties. The input
    list is left untouched. Raises UnknownCard if a candidate's card is not
    in the store.
    """
    weights = MODE_WEIGHTS[mode]
    results: list[RankedResult] = []
    for cand in candidates:
        card = store.get_card(cand.card_id)  # raises UnknownCard
        r = cand.fused_relevance
        a = access_score(card.access_count, mode)
        t = temporal_score(card.age_days(now), mode)
        d = diversity_score(cand.path_count)
        s = weights.w_rel * r + weights.w_acc * a + weights.w_temp * t + weights.w_div * d
        results.append(
            RankedResult(
                card_id=cand.card_id,
                relevance=r,
                access=a,
                temporal=t,
                diversity=d,
                final_score=s,
                mode=mode,
                path_set=cand.path_set,
            )
        )
    results.sort(key=lambda x: (-x.final_score, x.card_id))
    return results
