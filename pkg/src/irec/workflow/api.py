"""HTTP/JSON API over the workflow service.

One event stream per query session (server-sent events), with a polling
fallback at the same path (``?stream=false``). All bodies are UTF-8 JSON.
"""

from __future__ import annotations

import json
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from ..errors import (
    AlreadyConfirmed,
    EmptyNote,
    EmptyQuery,
    IrecError,
    LlmUnavailable,
    NotInSession,
    UnknownCard,
    UnknownDecision,
    UnknownSession,
    UnknownTag,
)
from ..tagmap import Outcome
from .service import WorkflowService

_STATUS_OF = {
    UnknownCard: 404,
    UnknownTag: 404,
    UnknownSession: 404,
    UnknownDecision: 404,
    EmptyQuery: 400,
    EmptyNote: 400,
    NotInSession: 409,
    AlreadyConfirmed: 409,
    LlmUnavailable: 503,
}


class QueryBody(BaseModel):
    query: str
    mode: str = "balanced"
    filter_level: str = "strict"


class NoteBody(BaseModel):
    note: str


class InsightBody(BaseModel):
    text: str


class OpenBody(BaseModel):
    card_id: str


class OutcomeBody(BaseModel):
    kind: str
    tag_id: Optional[str] = None
    parent_id: Optional[str] = None
    name: Optional[str] = None


class DecisionBody(BaseModel):
    action: str  # accept | veto | modify
    outcome: Optional[OutcomeBody] = None


class InquiryBody(BaseModel):
    card_id: str
    problem_id: Optional[str] = None
    problem_text: Optional[str] = None


class TurnBody(BaseModel):
    text: str


def create_app(service: WorkflowService) -> FastAPI:
    app = FastAPI(title="irec", version="0.1.0")
    app.state.service = service

    @app.exception_handler(IrecError)
    async def irec_error_handler(request: Request, exc: IrecError):
        status = _STATUS_OF.get(type(exc), 422)
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    # -- queries -----------------------------------------------------------

    @app.post("/query")
    def submit_query(body: QueryBody):
        session = service.submit_query(body.query, body.mode, body.filter_level)
        return {"session_id": session.id}

    @app.get("/sessions/{session_id}/events")
    def session_events(
        session_id: str,
        after: int = Query(-1),
        stream: bool = Query(True),
        timeout: float = Query(30.0),
    ):
        session = service.get_session(session_id)
        if not stream:
            return {
                "session_id": session.id,
                "state": session.state,
                "events": [e.as_dict() for e in session.events(after)],
            }

        def sse():
            for event in session.stream(after_seq=after, timeout=timeout):
                data = json.dumps(event.as_dict(), ensure_ascii=False)
                yield f"id: {event.seq}\nevent: {event.kind}\ndata: {data}\n\n"

        return StreamingResponse(sse(), media_type="text/event-stream")

    @app.post("/sessions/{session_id}/open")
    def open_result(session_id: str, body: OpenBody):
        card = service.open_result(session_id, body.card_id)
        return {"card_id": card.id, "access_count": card.access_count}

    @app.get("/sessions/{session_id}/log")
    def session_log(session_id: str):
        return {"steps": [s.as_dict() for s in service.get_session_log(session_id)]}

    # -- capture / cards -----------------------------------------------------

    @app.post("/insights")
    def capture(body: NoteBody):
        return service.capture_insight(body.note).as_dict()

    @app.post("/cards/{card_id}/insights")
    def append_insight(card_id: str, body: InsightBody):
        card = service.append_insight(card_id, body.text)
        return {"card_id": card.id, "insight_text": card.insight_text}

    @app.get("/cards/{card_id}")
    def get_card(card_id: str):
        card = service.store.get_card(card_id)
        return {
            "card_id": card.id,
            "problem_text": card.problem_text,
            "insight_text": card.insight_text,
            "created_at": card.created_at,
            "last_accessed_at": card.last_accessed_at,
            "access_count": card.access_count,
            "tags": sorted(service.store.get_tag(t).name for t in card.tag_ids),
            "embedded": card.embedding is not None,
        }

    # -- tag decisions ---------------------------------------------------------

    @app.get("/decisions")
    def decisions(pending: bool = Query(True)):
        items = (
            service.tag_mapper.pending_decisions()
            if pending
            else service.tag_mapper.all_decisions()
        )
        return {"decisions": [d.as_dict(service.store) for d in items]}

    @app.post("/decisions/{decision_id}")
    def confirm_decision(decision_id: str, body: DecisionBody):
        outcome = None
        if body.outcome is not None:
            outcome = Outcome(
                kind=body.outcome.kind,
                tag_id=body.outcome.tag_id,
                parent_id=body.outcome.parent_id,
                name=body.outcome.name,
            )
        decision = service.tag_mapper.confirm_decision(decision_id, body.action, outcome)
        return decision.as_dict(service.store)

    # -- guided inquiry ----------------------------------------------------------

    @app.post("/inquiry")
    def open_inquiry(body: InquiryBody):
        inquiry = service.open_inquiry(
            card_id=body.card_id,
            problem_id=body.problem_id,
            problem_text=body.problem_text,
        )
        return _inquiry_payload(inquiry)

    @app.post("/inquiry/{inquiry_id}/turns")
    def inquiry_turn(inquiry_id: str, body: TurnBody):
        service.inquiry_reply(inquiry_id, body.text)
        return _inquiry_payload(service.get_inquiry(inquiry_id))

    @app.get("/inquiry/{inquiry_id}")
    def get_inquiry(inquiry_id: str):
        return _inquiry_payload(service.get_inquiry(inquiry_id))

    # -- misc ------------------------------------------------------------------

    @app.get("/stats")
    def stats():
        return service.store.stats()

    @app.get("/health")
    def health():
        return {"status": "ok"}

    return app


def _inquiry_payload(inquiry) -> dict:
    return {
        "inquiry_id": inquiry.id,
        "problem_ref": inquiry.problem_ref,
        "card_id": inquiry.card_id,
        "turns": [
            {"role": t.role, "text": t.text, "context_refs": list(t.context_refs)}
            for t in inquiry.turns
        ],
    }
