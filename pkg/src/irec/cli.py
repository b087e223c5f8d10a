"""Command-line front door: capture, query, bulk import, decision review,
store maintenance, and the API server.

Every subcommand is a thin wrapper over the workflow service (embedded
mode, default) or the HTTP API (client mode via --api); no scoring or
mapping logic lives here. Exit codes: 0 success, 1 missing/unreadable
file, 2 note parse failure, 3 query session error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .config import ENV_CONFIG, IrecConfig, load_config
from .errors import ConfigError, EmptyNote, IrecError
from .graph.store import GraphStore
from .workflow.service import WorkflowService

EXIT_OK = 0
EXIT_IO = 1
EXIT_PARSE = 2
EXIT_SESSION = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="irec", description="Personal insight recall engine")
    p.add_argument("--config", help=f"config file path (or ${ENV_CONFIG})")
    p.add_argument("--store", help="snapshot file (overrides config store_path)")
    p.add_argument("--api", help="run against a remote API instead of an embedded store")
    sub = p.add_subparsers(dest="command", required=True)

    cap = sub.add_parser("capture", help="capture an insight note (file or stdin)")
    cap.add_argument("note_file", nargs="?", help="note file; omit or '-' for stdin")
    cap.add_argument("--json", action="store_true", help="machine-readable output")
    cap.add_argument("--epoch", type=int, help="fixed timestamp for reproducible output")

    q = sub.add_parser("query", help="recall insights for a problem")
    q.add_argument("text")
    q.add_argument("--mode", default="balanced", choices=["learning", "review", "balanced"])
    q.add_argument("--filter", default="strict", choices=["strict", "loose"], dest="filter_level")
    q.add_argument("--json", action="store_true", help="final results as JSON (no progressive output)")
    q.add_argument("--epoch", type=int, help="fixed timestamp for reproducible output")

    imp = sub.add_parser("import", help="bulk import JSONL card records")
    imp.add_argument("jsonl_path")
    imp.add_argument("--parallelism", type=int, default=4)
    imp.add_argument("--json", action="store_true")
    imp.add_argument("--no-progress", action="store_true")

    dec = sub.add_parser("decisions", help="review pending tag-mapping decisions")
    dec_sub = dec.add_subparsers(dest="decision_command", required=True)
    dec_list = dec_sub.add_parser("list")
    dec_list.add_argument("--all", action="store_true", help="include confirmed decisions")
    dec_list.add_argument("--json", action="store_true")
    for name in ("accept", "veto"):
        d = dec_sub.add_parser(name)
        d.add_argument("decision_id")
        d.add_argument("--json", action="store_true")
    mod = dec_sub.add_parser("modify")
    mod.add_argument("decision_id")
    mod.add_argument("--map-to", help="map to this existing tag id")
    mod.add_argument("--create", help="create a tag with this name")
    mod.add_argument("--parent", help="parent tag id for --create")
    mod.add_argument("--json", action="store_true")

    st = sub.add_parser("stats", help="store statistics")
    st.add_argument("--json", action="store_true")

    srv = sub.add_parser("serve", help="run the HTTP API server")
    srv.add_argument("--address", help="host:port (default from config)")

    return p


# ----------------------------------------------------------------------
# Embedded-mode plumbing
# ----------------------------------------------------------------------

def _decisions_path(store_path: str) -> str:
    return store_path + ".decisions"


def _load_service(args, config: IrecConfig) -> tuple[WorkflowService, str]:
    store_path = args.store or config.store_path
    if store_path and os.path.exists(store_path):
        store = GraphStore.load_snapshot(store_path, dim=config.embedding.dim)
    else:
        store = GraphStore(dim=config.embedding.dim)
    service = WorkflowService(store=store, config=config)
    if store_path and os.path.exists(_decisions_path(store_path)):
        with open(_decisions_path(store_path), encoding="utf-8") as f:
            service.tag_mapper.import_decisions(json.load(f))
    return service, store_path


def _save_store(service: WorkflowService, store_path: str) -> None:
    if store_path:
        service.store.save_snapshot(store_path)
        with open(_decisions_path(store_path), "w", encoding="utf-8") as f:
            json.dump(service.tag_mapper.export_decisions(), f, ensure_ascii=False)


def _print(data, as_json: bool, text_fn) -> None:
    if as_json:
        print(json.dumps(data, ensure_ascii=False, indent=2))
    else:
        text_fn(data)


# ----------------------------------------------------------------------
# Subcommands (embedded mode)
# ----------------------------------------------------------------------

def cmd_capture(args, config: IrecConfig) -> int:
    if args.note_file and args.note_file != "-":
        try:
            with open(args.note_file, encoding="utf-8") as f:
                note = f.read()
        except OSError as e:
            print(f"irec capture: cannot read {args.note_file}: {e}", file=sys.stderr)
            return EXIT_IO
    else:
        note = sys.stdin.read()

    service, store_path = _load_service(args, config)
    try:
        result = service.capture_insight(note, now=args.epoch)
    except EmptyNote:
        print("irec capture: note is empty", file=sys.stderr)
        return EXIT_PARSE
    service.wait_for_jobs()
    if result.parsed.degraded:
        print("irec capture: provider failed; problem field needs completion", file=sys.stderr)
    _save_store(service, store_path)

    def text(data):
        print(f"card {data['card_id']}")
        if data["suggested_tags"]:
            print(f"suggested tags: {', '.join(data['suggested_tags'])}")
        for d in data["pending_decisions"]:
            out = d["outcome"]
            target = out.get("tag_name") or out.get("name") or out.get("tag_id") or ""
            print(f"pending decision {d['id']}: {out['kind']} {target} [{d['origin']}]")

    _print(result.as_dict(), args.json, text)
    return EXIT_PARSE if result.parsed.degraded else EXIT_OK


def cmd_query(args, config: IrecConfig) -> int:
    service, _ = _load_service(args, config)
    try:
        session = service.submit_query(
            args.text, args.mode, args.filter_level, now=args.epoch, synchronous=args.json
        )
    except (IrecError, ValueError) as e:
        print(f"irec query: {e}", file=sys.stderr)
        return EXIT_SESSION

    final_payload = None
    if args.json:
        event = session.final_event()
        if event is None or event.kind == "error":
            print(f"irec query: session failed: {event.payload if event else 'no terminal event'}",
                  file=sys.stderr)
            return EXIT_SESSION
        final_payload = event.payload
        print(json.dumps(final_payload, ensure_ascii=False, indent=2))
        return EXIT_OK

    for event in session.stream(timeout=60.0):
        if event.kind == "preliminary_results":
            n = len(event.payload["results"])
            print(f"… fulltext preview: {n} hit(s)", file=sys.stderr)
        elif event.kind == "tags_resolved":
            entries = event.payload["entry_tags"]
            if entries:
                names = ", ".join(e["name"] for e in entries)
                print(f"… entry tags: {names}", file=sys.stderr)
        elif event.kind == "reranked_results":
            print(f"… reranked {len(event.payload['results'])} candidate(s)", file=sys.stderr)
        elif event.kind == "assessments_ready":
            print("… similarity assessments ready", file=sys.stderr)
        elif event.kind == "error":
            print(f"irec query: {event.payload['message']}", file=sys.stderr)
            return EXIT_SESSION
        elif event.kind == "final_results":
            final_payload = event.payload

    if final_payload is None:
        print("irec query: no terminal event", file=sys.stderr)
        return EXIT_SESSION
    if final_payload["provide_nothing"]:
        print("no results (provide-nothing)")
        return EXIT_OK
    for i, r in enumerate(final_payload["results"], 1):
        sim = "unassessed" if r["unassessed"] else f"sim={r['similarity_score']}"
        print(f"{i}. [{r['final_score']:.4f}] {r['problem_excerpt']}")
        print(
            f"   R={r['relevance']:.4f} A={r['access']:.4f} "
            f"T={r['temporal']:.4f} D={r['diversity']:.4f} ({sim})"
        )
        print(f"   insight: {r['insight_text']}")
        if r["tags"]:
            print(f"   tags: {', '.join(r['tags'])}")
    return EXIT_OK


def cmd_import(args, config: IrecConfig) -> int:
    if not os.path.isfile(args.jsonl_path):
        print(f"irec import: no such file: {args.jsonl_path}", file=sys.stderr)
        return EXIT_IO
    service, store_path = _load_service(args, config)

    last_render = [0.0]

    def progress(done: int, total: int) -> None:
        now = time.monotonic()
        if now - last_render[0] >= 0.1 or total >= 0:
            last_render[0] = now
            end = "\n" if total >= 0 else "\r"
            print(f"imported {done} record(s)…", end=end, file=sys.stderr, flush=True)

    with open(args.jsonl_path, encoding="utf-8") as f:
        report = service.store.bulk_import(
            f,
            parallelism=args.parallelism,
            progress_sink=None if args.no_progress else progress,
            embedder=service.embedder,
        )
    _save_store(service, store_path)

    data = {
        "imported": report.imported,
        "failed": report.failed,
        "elapsed_seconds": round(report.elapsed, 3),
        "errors": report.errors[:20],
    }
    _print(
        data,
        args.json,
        lambda d: print(
            f"imported={d['imported']} failed={d['failed']} elapsed={d['elapsed_seconds']}s"
        ),
    )
    return EXIT_OK


def cmd_decisions(args, config: IrecConfig) -> int:
    service, store_path = _load_service(args, config)

    def render(decisions):
        if not decisions:
            print("no decisions")
            return
        for d in decisions:
            out = d["outcome"]
            target = out.get("tag_name") or out.get("name") or out.get("tag_id") or ""
            print(
                f"{d['id']}  {d['status']:<9} {d['tag']!r} -> {out['kind']} {target} [{d['origin']}]"
            )

    if args.decision_command == "list":
        items = (
            service.tag_mapper.all_decisions()
            if args.all
            else service.tag_mapper.pending_decisions()
        )
        data = [d.as_dict(service.store) for d in items]
        _print(data, args.json, render)
        return EXIT_OK

    from .tagmap import Outcome

    if args.decision_command == "modify":
        if args.map_to:
            outcome = Outcome.map_to(args.map_to)
        elif args.create:
            outcome = Outcome.create_under(args.parent, args.create)
        else:
            print("irec decisions modify: need --map-to or --create", file=sys.stderr)
            return EXIT_IO
        decision = service.tag_mapper.confirm_decision(args.decision_id, "modify", outcome)
    else:
        decision = service.tag_mapper.confirm_decision(args.decision_id, args.decision_command)
    _save_store(service, store_path)
    _print([decision.as_dict(service.store)], args.json, render)
    return EXIT_OK


def cmd_stats(args, config: IrecConfig) -> int:
    service, _ = _load_service(args, config)
    data = service.store.stats()
    _print(
        data,
        args.json,
        lambda d: print(
            f"cards={d['cards']} tags={d['tags']} edges={d['edges']} embedded={d['embedded_cards']}"
        ),
    )
    return EXIT_OK


def cmd_serve(args, config: IrecConfig) -> int:
    import uvicorn

    from .workflow.api import create_app

    service, _ = _load_service(args, config)
    address = args.address or config.api_address
    host, _, port = address.partition(":")
    app = create_app(service)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8750), log_level="warning")
    return EXIT_OK


# ----------------------------------------------------------------------
# Client mode: same subcommands, served over HTTP
# ----------------------------------------------------------------------

def _client_dispatch(args) -> int:
    import requests

    base = args.api.rstrip("/")

    if args.command == "capture":
        if args.note_file and args.note_file != "-":
            with open(args.note_file, encoding="utf-8") as f:
                note = f.read()
        else:
            note = sys.stdin.read()
        resp = requests.post(f"{base}/insights", json={"note": note})
        if resp.status_code == 400:
            print(f"irec capture: {resp.json().get('error')}", file=sys.stderr)
            return EXIT_PARSE
        resp.raise_for_status()
        print(json.dumps(resp.json(), ensure_ascii=False, indent=2))
        return EXIT_OK

    if args.command == "query":
        resp = requests.post(
            f"{base}/query",
            json={"query": args.text, "mode": args.mode, "filter_level": args.filter_level},
        )
        resp.raise_for_status()
        sid = resp.json()["session_id"]
        while True:
            poll = requests.get(
                f"{base}/sessions/{sid}/events", params={"stream": "false", "after": -1}
            )
            poll.raise_for_status()
            body = poll.json()
            if body["state"] != "running":
                break
            time.sleep(0.05)
        terminal = [e for e in body["events"] if e["kind"] in ("final_results", "error")]
        if not terminal or terminal[-1]["kind"] == "error":
            print("irec query: session failed", file=sys.stderr)
            return EXIT_SESSION
        print(json.dumps(terminal[-1]["payload"], ensure_ascii=False, indent=2))
        return EXIT_OK

    if args.command == "stats":
        resp = requests.get(f"{base}/stats")
        resp.raise_for_status()
        print(json.dumps(resp.json(), ensure_ascii=False, indent=2))
        return EXIT_OK

    if args.command == "decisions":
        if args.decision_command == "list":
            resp = requests.get(f"{base}/decisions", params={"pending": not args.all})
        else:
            body = {"action": args.decision_command}
            if args.decision_command == "modify":
                if args.map_to:
                    body["outcome"] = {"kind": "map", "tag_id": args.map_to}
                else:
                    body["outcome"] = {"kind": "create", "parent_id": args.parent, "name": args.create}
            resp = requests.post(f"{base}/decisions/{args.decision_id}", json=body)
        resp.raise_for_status()
        print(json.dumps(resp.json(), ensure_ascii=False, indent=2))
        return EXIT_OK

    print(f"irec: {args.command} is not available in client mode", file=sys.stderr)
    return EXIT_IO


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.api:
            return _client_dispatch(args)
        config = load_config(args.config)
        handler = {
            "capture": cmd_capture,
            "query": cmd_query,
            "import": cmd_import,
            "decisions": cmd_decisions,
            "stats": cmd_stats,
            "serve": cmd_serve,
        }[args.command]
        return handler(args, config)
    except ConfigError as e:
        print(f"irec: {e}", file=sys.stderr)
        return EXIT_IO
    except IrecError as e:
        print(f"irec: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
