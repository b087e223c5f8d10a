"""Query sessions, their progressively emitted event streams, and the
per-session workflow logger."""

from __future__ import annotations

import logging
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator

from ..llm.gateway import FilterLevel
from ..rerank import LearningMode

logger = logging.getLogger("irec.workflow")

EVENT_KINDS = (
    "preliminary_results",
    "tags_resolved",
    "reranked_results",
    "assessments_ready",
    "final_results",
    "error",
)
TERMINAL_KINDS = ("final_results", "error")

# Every completed query session logs exactly these stages, in this order.
STAGE_NAMES = (
    "embed",
    "recall.fulltext",
    "recall.vector",
    "recall.tag",
    "fuse",
    "rerank",
    "assess",
    "filter",
)


@dataclass(frozen=True)
class SessionEvent:
    session_id: str
    seq: int
    kind: str
    payload: dict
    emitted_at: float

    def as_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "seq": self.seq,
            "kind": self.kind,
            "payload": self.payload,
            "emitted_at": self.emitted_at,
        }


@dataclass
class StepLog:
    session_id: str
    step_name: str
    duration_ms: float
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "step_name": self.step_name,
            "duration_ms": self.duration_ms,
            "detail": self.detail,
        }


class QuerySession:
    """One submitted query: ordered event log plus lifecycle state.

    Event emission is serialized; seq starts at 0 and increases strictly.
    After a terminal event (final_results or error) the session is frozen —
    further emits are programming errors and raise.
    """

    def __init__(
        self,
        session_id: str,
        query_text: str,
        mode: LearningMode,
        filter_level: FilterLevel,
        started_at: float,
    ):
        self.id = session_id
        self.query_text = query_text
        self.mode = mode
        self.filter_level = filter_level
        self.started_at = started_at
        self.state = "running"  # running | complete | failed
        self.opened_cards: set[str] = set()
        self.final_card_ids: set[str] = set()
        self._events: list[SessionEvent] = []
        self._cond = threading.Condition()

    # -- emission ----------------------------------------------------------

    def emit(self, kind: str, payload: dict) -> SessionEvent:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        with self._cond:
            if self.state != "running":
                raise RuntimeError(f"session {self.id} is terminal ({self.state})")
            event = SessionEvent(
                session_id=self.id,
                seq=len(self._events),
                kind=kind,
                payload=payload,
                emitted_at=time.time(),
            )
            self._events.append(event)
            if kind == "final_results":
                self.state = "complete"
            elif kind == "error":
                self.state = "failed"
            self._cond.notify_all()
            return event

    # -- consumption ---------------------------------------------------------

    @property
    def is_terminal(self) -> bool:
        return self.state in ("complete", "failed")

    def events(self, after_seq: int = -1) -> list[SessionEvent]:
        """Snapshot of events with seq > after_seq (non-blocking)."""
        with self._cond:
            return [e for e in self._events if e.seq > after_seq]

    def stream(self, after_seq: int = -1, timeout: float = 30.0) -> Iterator[SessionEvent]:
        """Yield events in order, blocking for new ones until the terminal
        event (or the timeout, which simply ends the iteration)."""
        next_seq = after_seq + 1
        deadline = time.monotonic() + timeout
        while True:
            with self._cond:
                while len(self._events) <= next_seq and not self.is_terminal:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        return
                    self._cond.wait(remaining)
                batch = self._events[next_seq:]
            for event in batch:
                yield event
                next_seq = event.seq + 1
                if event.kind in TERMINAL_KINDS:
                    return
            if self.is_terminal and next_seq >= len(self._events):
                return

    def final_event(self) -> SessionEvent | None:
        with self._cond:
            for event in reversed(self._events):
                if event.kind in TERMINAL_KINDS:
                    return event
        return None

    def wait_terminal(self, timeout: float = 30.0) -> bool:
        deadline = time.monotonic() + timeout
        with self._cond:
            while not self.is_terminal:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return False
                self._cond.wait(remaining)
        return True


class WorkflowLogger:
    """Collects one StepLog per executed pipeline stage, per session."""

    def __init__(self):
        self._logs: dict[str, list[StepLog]] = {}
        self._lock = threading.Lock()

    @contextmanager
    def step(self, session_id: str, step_name: str):
        start = time.perf_counter()
        detail = _StepDetail()
        try:
            yield detail
        finally:
            entry = StepLog(
                session_id=session_id,
                step_name=step_name,
                duration_ms=(time.perf_counter() - start) * 1000.0,
                detail=detail.text,
            )
            with self._lock:
                self._logs.setdefault(session_id, []).append(entry)
            logger.debug("session %s %s: %.2fms %s", session_id, step_name, entry.duration_ms, detail.text)

    def record(self, session_id: str, step_name: str, detail: str = "") -> None:
        with self._lock:
            self._logs.setdefault(session_id, []).append(
                StepLog(session_id=session_id, step_name=step_name, duration_ms=0.0, detail=detail)
            )

    def logs(self, session_id: str) -> list[StepLog]:
        with self._lock:
            return list(self._logs.get(session_id, ()))


class _StepDetail:
    def __init__(self):
        self.text = ""

    def set(self, text: str) -> None:
        self.text = text
