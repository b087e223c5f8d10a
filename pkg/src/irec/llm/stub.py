"""Deterministic scripted stub for the language-model provider.

Responses are resolved in order:

1. In-memory scripts registered with ``script(request, response)``.
2. Fixture files ``<digest>.json`` in the fixture directory, where the
   digest is the SHA-256 of the canonical (sorted-keys, compact) JSON
   request.
3. Built-in per-task heuristics, so the stub stays usable without any
   scripting: notes split on "|||", branch selection by name-token overlap,
   similarity from token overlap, templated tutor replies.

Every request is recorded in ``calls`` (tests count them), and failures can
be injected per task to exercise fallback paths.
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Protocol

from ..embeddings import tokenize
from ..errors import LlmUnavailable


class LlmProvider(Protocol):
    def complete(self, request: dict) -> dict: ...


def request_digest(request: dict) -> str:
    canonical = json.dumps(request, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ScriptedStub:
    def __init__(self, fixtures_dir: str | None = None):
        self.fixtures_dir = fixtures_dir or ""
        self._scripts: dict[str, dict] = {}
        self.calls: list[dict] = []
        self._fail_tasks: set[str] = set()
        self._fail_remaining = 0

    # -- scripting hooks -------------------------------------------------

    def script(self, request: dict, response: dict, persist: bool = False) -> str:
        """Register (and optionally write to the fixture dir) a canned
        response for this exact request. Returns the digest key."""
        digest = request_digest(request)
        self._scripts[digest] = response
        if persist and self.fixtures_dir:
            os.makedirs(self.fixtures_dir, exist_ok=True)
            with open(os.path.join(self.fixtures_dir, f"{digest}.json"), "w", encoding="utf-8") as f:
                json.dump(response, f, ensure_ascii=False)
        return digest

    def fail_tasks(self, *tasks: str) -> None:
        """Make requests for these task types raise LlmUnavailable."""
        self._fail_tasks.update(tasks)

    def restore_tasks(self, *tasks: str) -> None:
        self._fail_tasks.difference_update(tasks)

    def fail_next(self, n: int = 1) -> None:
        self._fail_remaining += n

    # -- provider interface ----------------------------------------------

    def complete(self, request: dict) -> dict:
        self.calls.append(json.loads(json.dumps(request)))
        task = request.get("task", "")
        if self._fail_remaining > 0:
            self._fail_remaining -= 1
            raise LlmUnavailable("stub: injected failure")
        if task in self._fail_tasks:
            raise LlmUnavailable(f"stub: injected failure for task {task!r}")

        digest = request_digest(request)
        if digest in self._scripts:
            return json.loads(json.dumps(self._scripts[digest]))
        if self.fixtures_dir:
            path = os.path.join(self.fixtures_dir, f"{digest}.json")
            if os.path.isfile(path):
                with open(path, encoding="utf-8") as f:
                    return json.load(f)
        return self._default(task, request)

    def calls_for(self, task: str) -> list[dict]:
        return [c for c in self.calls if c.get("task") == task]

    # -- built-in behaviors ----------------------------------------------

    def _default(self, task: str, request: dict) -> dict:
        if task == "parse_note":
            return _default_parse_note(request["note"])
        if task == "branch_select":
            return _default_branch_select(request)
        if task == "precise_select":
            return _default_precise_select(request)
        if task == "assess_similarity":
            return _default_assess(request)
        if task == "inquiry":
            return _default_inquiry(request)
        raise LlmUnavailable(f"stub: no behavior for task {task!r}")


def _default_parse_note(note: str) -> dict:
    if "|||" in note:
        parts = [p.strip() for p in note.split("|||")]
        problem = parts[0]
        insight = parts[1] if len(parts) > 1 else ""
        tags = [t.strip() for t in parts[2].split(",")] if len(parts) > 2 else []
        return {"problem": problem, "insight": insight, "tags": [t for t in tags if t]}
    # Unscripted free text: first line is the problem, the rest the insight.
    lines = note.strip().splitlines()
    problem = lines[0].strip()
    insight = "\n".join(lines[1:]).strip() or problem
    return {"problem": problem, "insight": insight, "tags": []}


def _default_branch_select(request: dict) -> dict:
    branches = request.get("branches", [])
    items = []
    for item in request.get("items", []):
        tag_tokens = set(tokenize(item["tag"]))
        hits = [b["id"] for b in branches if tag_tokens & set(tokenize(b["name"]))]
        items.append({"tag": item["tag"], "branch_ids": hits})
    return {"items": items}


def _default_precise_select(request: dict) -> dict:
    wanted = " ".join(tokenize(request["tag"]))
    for cand in request.get("candidates", []):
        if " ".join(tokenize(cand["name"])) == wanted:
            return {"action": "map", "target_id": cand["id"]}
    return {"action": "create", "parent_id": request["branch"], "name": request["tag"]}


def _default_assess(request: dict) -> dict:
    a = tokenize(request["new_problem"])
    b = tokenize(request.get("card_problem", "") + " " + request.get("card_insight", ""))
    if a == tokenize(request.get("card_problem", "")):
        return {"score": 0, "rationale": "stub: texts are identical"}
    sa, sb = set(a), set(b)
    overlap = len(sa & sb) / len(sa | sb) if sa | sb else 0.0
    if overlap >= 0.6:
        score = 1
    elif overlap >= 0.25:
        score = 2
    else:
        score = 3
    return {"score": score, "rationale": f"stub: token overlap {overlap:.2f}"}


def _default_inquiry(request: dict) -> dict:
    history = request.get("history", [])
    problem = request.get("problem", "")[:80]
    insight = request.get("insight", "")[:80]
    if not history:
        text = (
            f"I see you previously noted: \"{insight}\". Looking at your current "
            f"problem \"{problem}\", can you spot a similar relationship between "
            f"its parts?"
        )
    else:
        last_user = next((t["text"] for t in reversed(history) if t["role"] == "user"), "")
        text = (
            f"You said \"{last_user[:60]}\". Good — how does that connect back to "
            f"the idea in your earlier insight?"
        )
    return {"text": text}


class ExternalLlm:
    """Placeholder for a real provider endpoint behind the same interface."""

    def __init__(self, endpoint: str, model: str = ""):
        self.endpoint = endpoint
        self.model = model

    def complete(self, request: dict) -> dict:
        raise LlmUnavailable(
            f"no external LLM reachable (endpoint={self.endpoint!r}, model={self.model!r})"
        )
