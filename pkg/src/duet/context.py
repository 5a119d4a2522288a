"""Per-session source of truth.

Holds, for every session: the stage, the current plan and interface (each
versioned), and the append-only action log. Every mutation appends exactly
one log record, so seq numbers stay gapless from 1. All mutating operations
on one session serialize behind its lock; snapshots are deep copies and are
never touched by later commits.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .clock import Clock, IdFactory, SystemClock, UuidIdFactory
from .errors import (
    DanglingTarget,
    DualityViolated,
    EmptyGoal,
    IllegalTransition,
    StaleBase,
    UnknownSession,
    ValidationFailed,
)
from .schema import (
    AGENT_KINDS,
    USER_KINDS,
    ActionRecord,
    ActionTarget,
    DualityEntry,
    DualityReport,
    Navigation,
    PageState,
    TaskDecomposition,
    TaskStage,
    check_duality,
    check_invariants,
    parse_component,
    sha256_hex,
    stage_index,
    validate,
)
from .schema.duality import DANGLING_COMPONENT_REF

# How many superseded description versions are kept around for debugging.
VERSION_RETENTION = 8


@dataclass
class InterfaceBundle:
    """The interface side of a session: menu, pages, per-page components."""

    navigation: Navigation = field(default_factory=Navigation)
    pages: Dict[str, PageState] = field(default_factory=dict)
    components: Dict[str, List[Any]] = field(default_factory=dict)

    def deep_copy(self) -> "InterfaceBundle":
        return InterfaceBundle(
            navigation=self.navigation.model_copy(deep=True),
            pages={k: v.model_copy(deep=True) for k, v in self.pages.items()},
            components={k: [c.model_copy(deep=True) for c in v] for k, v in self.components.items()},
        )

    def doc(self) -> Dict[str, Any]:
        return {
            "navigation": self.navigation.model_dump(mode="json"),
            "pages": {k: v.model_dump(mode="json") for k, v in self.pages.items()},
            "components": {k: [c.model_dump(mode="json") for c in v] for k, v in self.components.items()},
        }


@dataclass(frozen=True)
class ContextSnapshot:
    """Immutable view of one session at a point in the log."""

    session_id: str
    goal: str
    stage: TaskStage
    task: TaskDecomposition
    task_version: int
    interface: InterfaceBundle
    interface_version: int
    history: Tuple[ActionRecord, ...]
    pending_loop: Optional[str]

    def doc(self) -> Dict[str, Any]:
        return {
            "sessionId": self.session_id,
            "goal": self.goal,
            "stage": self.stage.value,
            "task": self.task.model_dump(mode="json"),
            "taskVersion": self.task_version,
            "interface": self.interface.doc(),
            "interfaceVersion": self.interface_version,
            "history": [r.model_dump(mode="json") for r in self.history],
            "pendingLoop": self.pending_loop,
        }

    def content_hash(self) -> str:
        return sha256_hex(self.doc())


@dataclass
class _Session:
    session_id: str
    goal: str
    stage: TaskStage
    task: TaskDecomposition
    task_version: int
    interface: InterfaceBundle
    interface_version: int
    history: List[ActionRecord]
    pending_loop: Optional[str] = None
    task_audit: deque = field(default_factory=lambda: deque(maxlen=VERSION_RETENTION))
    interface_audit: deque = field(default_factory=lambda: deque(maxlen=VERSION_RETENTION))
    lock: threading.RLock = field(default_factory=threading.RLock)


class ContextManager:
    def __init__(self, clock: Optional[Clock] = None, id_factory: Optional[IdFactory] = None):
        self._clock = clock or SystemClock()
        self._ids = id_factory or UuidIdFactory()
        self._sessions: Dict[str, _Session] = {}
        self._registry_lock = threading.Lock()

    # -- helpers ---------------------------------------------------------

    def _get(self, session_id: str) -> _Session:
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(session_id)
        return session

    def _append(self, s: _Session, actor: str, kind: str,
                target: Optional[ActionTarget], payload: Dict[str, Any]) -> int:
        record = ActionRecord(
            seq=len(s.history) + 1,
            actor=actor,
            kind=kind,
            target=target,
            payload=payload or {},
            at=self._clock.now_ms(),
        )
        s.history.append(record)
        return record.seq

    # -- operations ------------------------------------------------------

    def create_session(self, goal: str) -> ContextSnapshot:
        if not goal or not goal.strip():
            raise EmptyGoal("session goal must be non-empty")
        goal = goal.strip()
        session_id = self._ids.new_id("session")
        s = _Session(
            session_id=session_id,
            goal=goal,
            stage=TaskStage.Define,
            task=TaskDecomposition(goal=goal, subtasks=[]),
            task_version=0,
            interface=InterfaceBundle(),
            interface_version=0,
            history=[],
        )
        self._append(s, "user", "input", None, {"text": goal})
        with self._registry_lock:
            self._sessions[session_id] = s
        return self.snapshot(session_id)

    def session_ids(self) -> List[str]:
        with self._registry_lock:
            return sorted(self._sessions)

    def record_action(self, session_id: str, kind: str, actor: str = "user",
                      target: Optional[ActionTarget] = None,
                      payload: Optional[Dict[str, Any]] = None) -> int:
        allowed = USER_KINDS if actor == "user" else AGENT_KINDS
        if kind not in allowed:
            raise ValueError(f"kind {kind!r} is not a legal {actor} action")
        s = self._get(session_id)
        with s.lock:
            if target is not None:
                self._resolve_target(s, target)
            return self._append(s, actor, kind, target, payload or {})

    def _resolve_target(self, s: _Session, target: ActionTarget) -> None:
        if target.pageStateId is None:
            if target.componentId is not None:
                raise DanglingTarget("componentId given without a pageStateId")
            return
        page = s.interface.pages.get(target.pageStateId)
        if page is None:
            raise DanglingTarget(f"no live page state {target.pageStateId!r}")
        if target.componentId is not None:
            ids = set()
            for comp in s.interface.components.get(target.pageStateId, []):
                for attr in ("actionId", "valueKey", "itemDataKey"):
                    v = getattr(comp, attr, None)
                    if v:
                        ids.add(v)
                ids.add(getattr(comp, "componentType", None))
            if target.componentId not in ids:
                raise DanglingTarget(
                    f"no component {target.componentId!r} on page {target.pageStateId!r}")

    def snapshot(self, session_id: str, since_seq: Optional[int] = None) -> ContextSnapshot:
        s = self._get(session_id)
        with s.lock:
            if since_seq is None:
                window = tuple(r.model_copy(deep=True) for r in s.history)
            else:
                window = tuple(r.model_copy(deep=True) for r in s.history if r.seq > since_seq)
            return ContextSnapshot(
                session_id=s.session_id,
                goal=s.goal,
                stage=s.stage,
                task=s.task.model_copy(deep=True),
                task_version=s.task_version,
                interface=s.interface.deep_copy(),
                interface_version=s.interface_version,
                history=window,
                pending_loop=s.pending_loop,
            )

    def commit_task(self, session_id: str, td: TaskDecomposition, base_version: int) -> int:
        result = validate("TaskDecomposition", td)
        if not result.ok:
            raise ValidationFailed(result.issues)
        td = result.value
        s = self._get(session_id)
        with s.lock:
            if base_version != s.task_version:
                raise StaleBase(base_version, s.task_version)
            s.task_audit.append((s.task_version, s.task))
            s.task = td.model_copy(deep=True)
            s.task_version += 1
            self._append(s, "agent", "agent_commit_task", None, {"taskVersion": s.task_version})
            return s.task_version

    def commit_interface(self, session_id: str, navigation: Navigation,
                         pages: Dict[str, PageState], components: Dict[str, List[Any]],
                         base_version: int, for_task_version: int) -> int:
        issues = []
        nav_result = validate("Navigation", navigation)
        if not nav_result.ok:
            issues.extend(nav_result.issues)
        else:
            navigation = nav_result.value
        for psid, page in pages.items():
            page_result = validate("PageState", page)
            if not page_result.ok:
                issues.extend(page_result.issues)
            elif page.pageStateId != psid:
                raise ValueError(f"pages map key {psid!r} != pageStateId {page.pageStateId!r}")
        for configs in components.values():
            for config in configs:
                issues.extend(check_invariants(config))
        if issues:
            raise ValidationFailed(issues)

        s = self._get(session_id)
        with s.lock:
            if base_version != s.interface_version:
                raise StaleBase(base_version, s.interface_version)
            if for_task_version != s.task_version:
                # The plan moved while this interface was being generated.
                raise StaleBase(for_task_version, s.task_version)
            orphan_keys = sorted(set(components) - set(pages))
            flat = [c for configs in components.values() for c in configs]
            report = check_duality(s.task, navigation, pages.values(), flat)
            if orphan_keys:
                report = DualityReport(entries=report.entries + [
                    DualityEntry(DANGLING_COMPONENT_REF, k, "components keyed to a missing page")
                    for k in orphan_keys
                ])
            if not report.empty:
                raise DualityViolated(report)

            now = self._clock.now_ms()
            s.interface_audit.append((s.interface_version, s.interface))
            stored = InterfaceBundle(
                navigation=navigation.model_copy(deep=True),
                pages={k: v.model_copy(deep=True) for k, v in pages.items()},
                components={k: [c.model_copy(deep=True) for c in v] for k, v in components.items()},
            )
            for page in stored.pages.values():
                page.lastUpdated = now
            s.interface = stored
            s.interface_version += 1
            self._append(s, "agent", "agent_commit_interface", None,
                         {"interfaceVersion": s.interface_version, "forTaskVersion": for_task_version})
            return s.interface_version

    def advance_stage(self, session_id: str, target: TaskStage, actor: str = "user") -> TaskStage:
        if isinstance(target, str):
            target = TaskStage(target)
        s = self._get(session_id)
        with s.lock:
            current = s.stage
            ci, ti = stage_index(current), stage_index(target)
            backtrack = ti < ci
            if not backtrack and ti != ci + 1:
                raise IllegalTransition(current.value, target.value)
            s.stage = target
            self._append(s, actor, "stage_change", None,
                         {"from": current.value, "to": target.value, "backtrack": backtrack})
            return target

    def set_pending_loop(self, session_id: str, value: Optional[str]) -> None:
        s = self._get(session_id)
        with s.lock:
            s.pending_loop = value

    # -- persistence support ----------------------------------------------

    def session_doc(self, session_id: str) -> Dict[str, Any]:
        """Canonical JSON-able form of the session (audit trail excluded)."""
        return self.snapshot(session_id).doc()

    def session_hash(self, session_id: str) -> str:
        return sha256_hex(self.session_doc(session_id))

    def restore_session(self, doc: Dict[str, Any]) -> str:
        """Re-register a session from its canonical doc (see session_doc)."""
        interface = InterfaceBundle(
            navigation=Navigation.model_validate(doc["interface"]["navigation"]),
            pages={k: PageState.model_validate(v) for k, v in doc["interface"]["pages"].items()},
            components={
                k: [parse_component(c) for c in v]
                for k, v in doc["interface"]["components"].items()
            },
        )
        s = _Session(
            session_id=doc["sessionId"],
            goal=doc["goal"],
            stage=TaskStage(doc["stage"]),
            task=TaskDecomposition.model_validate(doc["task"]),
            task_version=doc["taskVersion"],
            interface=interface,
            interface_version=doc["interfaceVersion"],
            history=[ActionRecord.model_validate(r) for r in doc["history"]],
            pending_loop=doc.get("pendingLoop"),
        )
        with self._registry_lock:
            self._sessions[s.session_id] = s
        return s.session_id
