"""HTTP/JSON surface over the session engine.

Every response body is serialized canonically (sorted keys, compact
separators, UTF-8). Action posts return once the trigger is enqueued; in the
default profile loops run on worker threads and clients poll
`GET /sessions/{id}/state?since=<version>` for updates.

Server config is a JSON file:

    {"provider": {"kind": "scripted", "fixtures": ["fixtures/demo.json"]},
     "deterministic": true,
     "host": "127.0.0.1", "port": 8642,
     "catalogs": {"platforms": "...", "tasks": "...", "apis": "..."}}

provider.kind "remote" takes {"url", "model", "timeout_ms"} and reads the
bearer token from DUET_LLM_TOKEN. "deterministic": true swaps in the fake
clock, sequential ids, and synchronous in-request loop execution, which makes
server state reproducible run to run.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, Optional

from fastapi import FastAPI, Request, Response

from ..agents import load_catalog
from ..clock import FakeClock, SequentialIdFactory
from ..errors import (
    DanglingTarget,
    DuetError,
    EmptyGoal,
    IllegalTransition,
    MalformedDocument,
    UnknownSession,
)
from ..gateway import Gateway, RemoteProvider, load_fixture_files
from ..orchestrator import NO_LOOP, NEEDS_TASK, SessionEngine
from ..schema import ActionTarget, TaskStage, serialize

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8642


def load_config(path: Path | str) -> Dict[str, Any]:
    raw = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"config {path}: {exc}") from exc
    if not isinstance(doc, dict) or "provider" not in doc:
        raise MalformedDocument(f"config {path}: needs a provider section")
    return doc


def build_engine(config: Dict[str, Any], base_dir: Path | str = ".") -> SessionEngine:
    base = Path(base_dir)
    provider_cfg = config["provider"]
    kind = provider_cfg.get("kind")
    if kind == "scripted":
        paths = [base / p for p in provider_cfg.get("fixtures", [])]
        files = []
        for p in paths:
            files.extend(sorted(p.glob("*.json")) if p.is_dir() else [p])
        provider = load_fixture_files(files)
    elif kind == "remote":
        provider = RemoteProvider(url=provider_cfg["url"], model=provider_cfg.get("model", ""),
                                  timeout_ms=provider_cfg.get("timeout_ms", 30_000))
    else:
        raise MalformedDocument(f"unknown provider kind {kind!r}")

    catalogs = config.get("catalogs") or {}
    catalog = load_catalog(
        platforms_path=base / catalogs["platforms"] if "platforms" in catalogs else None,
        tasks_path=base / catalogs["tasks"] if "tasks" in catalogs else None,
        apis_path=base / catalogs["apis"] if "apis" in catalogs else None,
    )

    if config.get("deterministic"):
        clock = FakeClock()
        return SessionEngine(Gateway(provider, clock=clock), catalog=catalog,
                             clock=clock, id_factory=SequentialIdFactory())
    return SessionEngine(Gateway(provider), catalog=catalog, auto_drain=False,
                         executor=ThreadPoolExecutor(max_workers=4, thread_name_prefix="loops"))


def _canonical(doc: Any, status_code: int = 200) -> Response:
    return Response(content=serialize(doc), status_code=status_code,
                    media_type="application/json")


def _error(status_code: int, exc: Exception) -> Response:
    return _canonical({"error": type(exc).__name__, "detail": str(exc)}, status_code)


def create_app(engine: SessionEngine) -> FastAPI:
    app = FastAPI(title="duet", docs_url=None, redoc_url=None)
    app.state.engine = engine

    @app.exception_handler(DuetError)
    async def _duet_error(_request: Request, exc: DuetError) -> Response:
        return _error(500, exc)

    @app.post("/sessions")
    async def create_session(request: Request) -> Response:
        body = await request.json()
        goal = body.get("goal", "") if isinstance(body, dict) else ""
        try:
            snapshot = engine.create_session(goal)
        except EmptyGoal as exc:
            return _error(400, exc)
        return _canonical({
            "sessionId": snapshot.session_id,
            "stage": snapshot.stage.value,
            "interfaceVersion": snapshot.interface_version,
        })

    @app.get("/sessions/{session_id}/state")
    async def get_state(session_id: str, since: Optional[int] = None) -> Response:
        try:
            snapshot = engine.manager.snapshot(session_id)
        except UnknownSession as exc:
            return _error(404, exc)
        if since is not None and snapshot.interface_version <= since:
            return _canonical({"unchanged": True, "interfaceVersion": snapshot.interface_version})
        interface = snapshot.interface.doc()
        return _canonical({
            "stage": snapshot.stage.value,
            "navigation": interface["navigation"],
            "pageStates": interface["pages"],
            "components": interface["components"],
            "taskVersion": snapshot.task_version,
            "interfaceVersion": snapshot.interface_version,
        })

    @app.post("/sessions/{session_id}/actions")
    async def post_action(session_id: str, request: Request) -> Response:
        body = await request.json()
        if not isinstance(body, dict) or "kind" not in body:
            return _canonical({"error": "MalformedDocument", "detail": "body needs kind"}, 400)
        if body.get("actor", "user") != "user":
            return _canonical({"error": "MalformedDocument",
                               "detail": "only user actions may be posted"}, 400)
        target = None
        if body.get("target"):
            try:
                target = ActionTarget.model_validate(body["target"])
            except Exception as exc:
                return _canonical({"error": "MalformedDocument", "detail": str(exc)}, 400)
        try:
            seq, classification = engine.submit_action(
                session_id, body["kind"], target=target, payload=body.get("payload"))
        except UnknownSession as exc:
            return _error(404, exc)
        except DanglingTarget as exc:
            return _error(409, exc)
        except ValueError as exc:
            return _canonical({"error": "MalformedDocument", "detail": str(exc)}, 400)
        scheduled = 0 if classification == NO_LOOP else 2 if classification == NEEDS_TASK else 1
        return _canonical({"seq": seq, "loopsScheduled": scheduled})

    @app.post("/sessions/{session_id}/stage")
    async def post_stage(session_id: str, request: Request) -> Response:
        body = await request.json()
        raw = body.get("target") if isinstance(body, dict) else None
        try:
            target = TaskStage(raw)
        except ValueError:
            return _canonical({"error": "MalformedDocument",
                               "detail": f"unknown stage {raw!r}"}, 400)
        try:
            stage = engine.advance_stage(session_id, target)
        except UnknownSession as exc:
            return _error(404, exc)
        except IllegalTransition as exc:
            return _error(409, exc)
        return _canonical({"stage": stage.value})

    @app.get("/sessions/{session_id}/history")
    async def get_history(session_id: str, since: int = 0) -> Response:
        try:
            snapshot = engine.manager.snapshot(session_id, since_seq=since)
        except UnknownSession as exc:
            return _error(404, exc)
        records = [r.model_dump(mode="json") for r in snapshot.history if r.seq > since]
        latest = snapshot.history[-1].seq if snapshot.history else 0
        return _canonical({"records": records, "latestSeq": max(latest, since)})

    @app.get("/status")
    async def status() -> Response:
        return _canonical({
            "provider": engine.gateway.provider.name,
            "sessions": len(engine.manager.session_ids()),
            "lagging": engine.lagging_sessions(),
        })

    return app
