"""Domain records stored in the graph: problem cards and hierarchy tags."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SECONDS_PER_DAY = 86400.0


@dataclass
class ProblemCard:
    """A captured problem + insight; the unit of recall.

    ``embedding`` is absent (None) until the embed job completes. Timestamps
    are UTC integer seconds. ``access_count`` only moves through
    ``GraphStore.record_access`` so it tracks genuine opens.
    """

    id: str
    problem_text: str
    insight_text: str
    created_at: int
    last_accessed_at: int
    access_count: int = 0
    embedding: np.ndarray | None = None
    tag_ids: set[str] = field(default_factory=set)

    def age_days(self, now: int) -> float:
        """Days since last access; never-accessed cards age from creation."""
        anchor = self.created_at if self.access_count == 0 else self.last_accessed_at
        return max(0.0, (now - anchor) / SECONDS_PER_DAY)

    def search_text(self) -> str:
        return f"{self.problem_text}\n{self.insight_text}"


@dataclass
class Tag:
    """A node in the tag hierarchy (a forest linked by PARENT_OF edges)."""

    id: str
    name: str
    parent_id: str | None = None
    level: int = 0
    embedding: np.ndarray | None = None


@dataclass
class ImportReport:
    imported: int
    failed: int
    elapsed: float
    errors: list[str] = field(default_factory=list)
