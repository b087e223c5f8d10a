"""Session orchestration and the HTTP API."""

from .service import WorkflowService
from .session import QuerySession, SessionEvent, StepLog

__all__ = ["WorkflowService", "QuerySession", "SessionEvent", "StepLog"]
