"""Graph storage: cards, tags, snapshots, bulk import."""

from .models import ImportReport, ProblemCard, Tag
from .store import GraphStore

__all__ = ["GraphStore", "ImportReport", "ProblemCard", "Tag"]
