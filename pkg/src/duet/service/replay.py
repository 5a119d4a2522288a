"""Trace replay: drive a deterministic engine through a scripted session.

A trace is a JSON document:

    {"meta": {"name": "...", "seed": 7, "goal": "...",
              "fixtures": ["fixtures/foo.json"]},      # reference only
     "steps": [
        {"action": {"kind": "select",
                    "target": {"pageStateId": "...", "componentId": "...",
                               "valueKey": "..."},
                    "payload": {"value": "..."}},
         "expect_stage": "Define"},                    # optional, any step
        {"advance": "Empathize"},
        {"assert": {"check": "stage_is", "stage": "Empathize"}},
        {"assert": "duality_empty"}                    # bare form, no args
     ]}

Steps run in order on a fresh engine (fake clock, sequential ids, synchronous
loop drain), quiescing after every action/advance. The first failing step
stops the run; later steps are reported as skipped. Two replays of the same
trace and fixtures produce byte-identical reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from ..agents import Catalog
from ..clock import FakeClock, SequentialIdFactory
from ..errors import AssertionFailed, DuetError, MalformedDocument, MissingFixture
from ..gateway import CompletionProvider, Gateway
from ..orchestrator import SessionEngine
from ..schema import ActionTarget, TaskStage, check_duality, serialize

CheckFn = Callable[[SessionEngine, str, Dict[str, Any]], Optional[str]]


def _snap(engine: SessionEngine, sid: str):
    return engine.manager.snapshot(sid)


def _check_duality_empty(engine: SessionEngine, sid: str, args: Dict[str, Any]) -> Optional[str]:
    snap = _snap(engine, sid)
    flat = [c for cs in snap.interface.components.values() for c in cs]
    report = check_duality(snap.task, snap.interface.navigation,
                           snap.interface.pages.values(), flat)
    return None if report.empty else str(report)


def _check_stage_is(engine: SessionEngine, sid: str, args: Dict[str, Any]) -> Optional[str]:
    want = args["stage"]
    got = _snap(engine, sid).stage.value
    return None if got == want else f"stage is {got}, expected {want}"


def _check_page_count(engine: SessionEngine, sid: str, args: Dict[str, Any]) -> Optional[str]:
    want = int(args["count"])
    got = len(_snap(engine, sid).interface.pages)
    return None if got == want else f"{got} pages, expected {want}"


def _payload_superset(payload: Dict[str, Any], subset: Dict[str, Any]) -> bool:
    return all(key in payload and payload[key] == value for key, value in subset.items())


def _check_history_contains(engine: SessionEngine, sid: str, args: Dict[str, Any]) -> Optional[str]:
    kind = args["kind"]
    actor = args.get("actor")
    subset = args.get("payload_subset", {})
    for record in _snap(engine, sid).history:
        if record.kind != kind:
            continue
        if actor is not None and record.actor != actor:
            continue
        if _payload_superset(record.payload, subset):
            return None
    return f"no {kind} record matching {subset!r}"


def _check_snapshot_hash(engine: SessionEngine, sid: str, args: Dict[str, Any]) -> Optional[str]:
    want = args["hash"]
    got = engine.manager.session_hash(sid)
    return None if got == want else f"hash {got}, expected {want}"


def _check_task_contains(engine: SessionEngine, sid: str, args: Dict[str, Any]) -> Optional[str]:
    subtasks = _snap(engine, sid).task.subtasks
    if "subtask_id" in args:
        if any(s.subtask_id == args["subtask_id"] for s in subtasks):
            return None
        return f"no subtask with id {args['subtask_id']!r}"
    needle = args["name_contains"].lower()
    if any(needle in s.subtask_name.lower() for s in subtasks):
        return None
    return f"no subtask name containing {args['name_contains']!r}"


def _check_summary_refs_live(engine: SessionEngine, sid: str, args: Dict[str, Any]) -> Optional[str]:
    snap = _snap(engine, sid)
    live = set(snap.interface.pages)
    found = False
    for page in snap.interface.pages.values():
        doc = page.stateDetail.get("summary")
        if not isinstance(doc, dict):
            continue
        found = True
        for block_id, block in (doc.get("navigationBlocks") or {}).items():
            psid = block.get("pageStateId") if isinstance(block, dict) else None
            if psid not in live:
                return f"summary block {block_id} references dead page {psid!r}"
    return None if found else "no summary present on any page"


def _check_component_present(engine: SessionEngine, sid: str, args: Dict[str, Any]) -> Optional[str]:
    psid = args["pageStateId"]
    want_type = args["componentType"]
    want_key = args.get("valueKey")
    configs = _snap(engine, sid).interface.components.get(psid, [])
    for config in configs:
        if getattr(config, "componentType", None) != want_type:
            continue
        if want_key is not None and getattr(config, "valueKey", None) != want_key:
            continue
        return None
    return f"page {psid} has no {want_type}" + (f" with valueKey {want_key}" if want_key else "")


def _check_state_value(engine: SessionEngine, sid: str, args: Dict[str, Any]) -> Optional[str]:
    psid = args["pageStateId"]
    page = _snap(engine, sid).interface.pages.get(psid)
    if page is None:
        return f"no page {psid}"
    got = page.stateDetail.get("values", {}).get(args["key"])
    want = args["value"]
    return None if got == want else f"{psid}.values[{args['key']!r}] = {got!r}, expected {want!r}"


def _check_subtask_order(engine: SessionEngine, sid: str, args: Dict[str, Any]) -> Optional[str]:
    want = list(args["ids"])
    got = [s.subtask_id for s in _snap(engine, sid).task.subtasks]
    return None if got == want else f"subtask order {got}, expected {want}"


def _check_task_api_payload(engine: SessionEngine, sid: str, args: Dict[str, Any]) -> Optional[str]:
    key, want = args["key"], args["value"]
    api_name = args.get("api_name")
    for subtask in _snap(engine, sid).task.subtasks:
        for api in subtask.matched_apis:
            if api_name is not None and api.api_name != api_name:
                continue
            if api.payload.get(key) == want:
                return None
    scope = f" on {api_name}" if api_name else ""
    return f"no api payload{scope} with {key}={want!r}"


CHECKS: Dict[str, CheckFn] = {
    "duality_empty": _check_duality_empty,
    "stage_is": _check_stage_is,
    "page_count": _check_page_count,
    "history_contains": _check_history_contains,
    "snapshot_hash": _check_snapshot_hash,
    "task_contains": _check_task_contains,
    "summary_refs_live": _check_summary_refs_live,
    "component_present": _check_component_present,
    "state_value": _check_state_value,
    "subtask_order": _check_subtask_order,
    "task_api_payload": _check_task_api_payload,
}


@dataclass
class ReplayReport:
    doc: Dict[str, Any]

    def to_bytes(self) -> bytes:
        return serialize(self.doc) + b"\n"

    @property
    def ok(self) -> bool:
        return self.doc["assertionsFailed"] == 0 and all(
            step["ok"] or step["detail"] == "skipped" for step in self.doc["steps"])

    @property
    def failed_index(self) -> Optional[int]:
        for step in self.doc["steps"]:
            if not step["ok"] and step["detail"] != "skipped":
                return step["index"]
        return None


def load_trace(path: Path | str) -> Dict[str, Any]:
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedDocument(f"trace {path}: {exc}") from exc
    return validate_trace(doc, source=str(path))


def validate_trace(doc: Any, source: str = "<trace>") -> Dict[str, Any]:
    if not isinstance(doc, dict) or "meta" not in doc or "steps" not in doc:
        raise MalformedDocument(f"{source}: trace needs meta and steps")
    meta = doc["meta"]
    for key in ("name", "goal"):
        if not isinstance(meta.get(key), str) or not meta[key]:
            raise MalformedDocument(f"{source}: meta.{key} must be a non-empty string")
    if not isinstance(doc["steps"], list):
        raise MalformedDocument(f"{source}: steps must be a list")
    for i, step in enumerate(doc["steps"]):
        if not isinstance(step, dict):
            raise MalformedDocument(f"{source}: step {i} must be an object")
        heads = [k for k in ("action", "advance", "assert") if k in step]
        if len(heads) != 1:
            raise MalformedDocument(
                f"{source}: step {i} needs exactly one of action/advance/assert, got {heads}")
        if "assert" in step:
            spec = step["assert"]
            name = spec if isinstance(spec, str) else spec.get("check")
            if name not in CHECKS:
                raise MalformedDocument(
                    f"{source}: step {i} asserts unknown check {name!r} "
                    f"(known: {', '.join(sorted(CHECKS))})")
    return doc


def _apply_action(engine: SessionEngine, sid: str, body: Dict[str, Any]) -> str:
    target = None
    if body.get("target"):
        target = ActionTarget.model_validate(body["target"])
    seq, classification = engine.submit_action(
        sid, body["kind"], target=target, payload=body.get("payload"))
    return f"{body['kind']} seq={seq} {classification}"


def replay(trace: Dict[str, Any], provider: CompletionProvider,
           catalog: Optional[Catalog] = None) -> ReplayReport:
    if hasattr(provider, "reset"):
        provider.reset()
    clock = FakeClock()
    engine = SessionEngine(Gateway(provider, clock=clock), catalog=catalog,
                           clock=clock, id_factory=SequentialIdFactory())

    meta = trace["meta"]
    steps_out: List[Dict[str, Any]] = []
    assertions_passed = 0
    assertions_failed = 0
    failed: Optional[Tuple[int, str]] = None

    sid = engine.create_session(meta["goal"]).session_id
    engine.quiesce(sid)

    for index, step in enumerate(trace["steps"]):
        if failed is not None:
            kind = "action" if "action" in step else "advance" if "advance" in step else "assert"
            steps_out.append({"index": index, "kind": kind, "label": "",
                              "ok": False, "detail": "skipped"})
            continue

        ok = True
        detail = ""
        label = ""
        kind = ""
        try:
            if "action" in step:
                kind = "action"
                label = step["action"]["kind"]
                detail = _apply_action(engine, sid, step["action"])
                engine.quiesce(sid)
            elif "advance" in step:
                kind = "advance"
                label = step["advance"]
                engine.advance_stage(sid, TaskStage(step["advance"]))
                engine.quiesce(sid)
                detail = f"stage={step['advance']}"
            else:
                kind = "assert"
                spec = step["assert"]
                name = spec if isinstance(spec, str) else spec["check"]
                args = {} if isinstance(spec, str) else {k: v for k, v in spec.items() if k != "check"}
                label = name
                failure = CHECKS[name](engine, sid, args)
                if failure is None:
                    assertions_passed += 1
                    detail = "pass"
                else:
                    assertions_failed += 1
                    ok = False
                    detail = failure
        except MissingFixture:
            raise
        except DuetError as exc:
            ok = False
            detail = f"{type(exc).__name__}: {exc}"

        if ok and "expect_stage" in step:
            got = engine.manager.snapshot(sid).stage.value
            if got != step["expect_stage"]:
                ok = False
                detail = f"stage is {got}, expected {step['expect_stage']}"

        steps_out.append({"index": index, "kind": kind, "label": label,
                          "ok": ok, "detail": detail})
        if not ok:
            failed = (index, detail)

    snap = engine.manager.snapshot(sid)
    report = ReplayReport(doc={
        "trace": meta["name"],
        "seed": meta.get("seed", 0),
        "goal": meta["goal"],
        "steps": steps_out,
        "assertionsPassed": assertions_passed,
        "assertionsFailed": assertions_failed,
        "finalStage": snap.stage.value,
        "finalTaskVersion": snap.task_version,
        "finalInterfaceVersion": snap.interface_version,
        "finalHash": engine.manager.session_hash(sid),
    })
    return report


def replay_or_raise(trace: Dict[str, Any], provider: CompletionProvider,
                    catalog: Optional[Catalog] = None) -> ReplayReport:
    report = replay(trace, provider, catalog)
    if not report.ok:
        index = report.failed_index
        step = report.doc["steps"][index]
        raise AssertionFailed(index, step["detail"])
    return report
