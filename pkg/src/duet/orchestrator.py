"""The bidirectional loop driver.

Classifies committed actions, queues triggers, and runs the two loops with
strict per-session serialization:

- a task run proposes a plan revision, fetches data for changed subtasks,
  commits the plan, and is always followed by an interface run;
- an interface run rebuilds navigation/pages/components from the committed
  plan (injecting a fresh summary in Duet once something was confirmed);
- a stale commit re-snapshots and retries, at most twice, then the run is
  recorded as failed and the session stays at its last consistent versions.
"""

from __future__ import annotations

import logging
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .agents import (
    Catalog,
    interface_agent_step,
    load_catalog,
    service_agent_fetch,
    summary_agent_step,
    task_agent_step,
)
from .agents.intent import latest_values
from .clock import Clock, IdFactory, SystemClock
from .context import ContextManager, ContextSnapshot, InterfaceBundle
from .errors import DuetError, MissingFixture, QuiesceTimeout, StaleBase
from .gateway import Gateway, GatewayBudget
from .schema import (
    ActionRecord,
    ActionTarget,
    BasicItem,
    Subtask,
    TaskStage,
    canonical_text,
)

logger = logging.getLogger(__name__)

NEEDS_TASK = "needs_task_loop"
NEEDS_INTERFACE = "needs_interface_loop"
NO_LOOP = "no_loop"

TASK_LOOP_KINDS = frozenset({"select", "slide", "pick_date", "input", "reorder", "confirm"})
DATA_DEPENDENT_COMPONENTS = frozenset({"card_view", "dashboard"})

MAX_STALE_RETRIES = 2


@dataclass(frozen=True)
class LoopTrigger:
    cause: str                      # user_action | stage_advance | task_committed | bootstrap
    classification: str
    seq: Optional[int] = None       # the triggering action, for user_action


@dataclass
class LoopRun:
    loop: str                       # task | interface
    base_task_version: int
    base_interface_version: int
    outcome: str                    # committed | stale_retry | failed
    stale_retries: int = 0
    detail: str = ""

    def doc(self) -> Dict[str, Any]:
        return {
            "loop": self.loop,
            "baseTaskVersion": self.base_task_version,
            "baseInterfaceVersion": self.base_interface_version,
            "outcome": self.outcome,
            "staleRetries": self.stale_retries,
            "detail": self.detail,
        }


def _component_kind_for_target(interface: InterfaceBundle, target: Optional[ActionTarget]) -> Optional[str]:
    if target is None or target.pageStateId is None:
        return None
    configs = interface.components.get(target.pageStateId, [])
    if target.componentId is not None:
        for config in configs:
            ids = {getattr(config, a, None) for a in ("actionId", "valueKey", "itemDataKey")}
            ids.add(getattr(config, "componentType", None))
            if target.componentId in ids:
                return getattr(config, "componentType", None)
        return None
    return None


def classify(action: ActionRecord, interface: InterfaceBundle) -> str:
    """Pure decision table from (kind, target, component kind)."""
    kind = action.kind
    if kind in TASK_LOOP_KINDS:
        return NEEDS_TASK
    if kind == "navigate":
        return NO_LOOP
    if kind in ("click", "favorite"):
        component = _component_kind_for_target(interface, action.target)
        if kind == "click" and component == "action_button":
            return NEEDS_TASK
        if component in DATA_DEPENDENT_COMPONENTS:
            return NEEDS_INTERFACE
        if kind == "favorite" and action.target is not None and action.target.pageStateId:
            # A favorite without a resolvable component still lands on item data.
            has_data = any(
                getattr(c, "componentType", "") in DATA_DEPENDENT_COMPONENTS
                for c in interface.components.get(action.target.pageStateId, []))
            if has_data:
                return NEEDS_INTERFACE
        return NO_LOOP
    return NO_LOOP


@dataclass
class _SessionLoopState:
    queue: deque = field(default_factory=deque)
    runs: List[LoopRun] = field(default_factory=list)
    draining: bool = False
    lock: threading.RLock = field(default_factory=threading.RLock)


class SessionEngine:
    """Owns the manager, gateway, catalog, and per-session trigger queues."""

    def __init__(self, gateway: Gateway, catalog: Optional[Catalog] = None,
                 clock: Optional[Clock] = None, id_factory: Optional[IdFactory] = None,
                 budget: Optional[GatewayBudget] = None, auto_drain: bool = True,
                 executor: Optional[Any] = None):
        self.clock = clock or SystemClock()
        self.manager = ContextManager(clock=self.clock, id_factory=id_factory)
        self.gateway = gateway
        self.catalog = catalog or load_catalog()
        self.budget = budget or GatewayBudget()
        self.auto_drain = auto_drain
        self.executor = executor            # drains on worker threads when set
        self._loops: Dict[str, _SessionLoopState] = {}
        self._state_lock = threading.Lock()

    # -- session lifecycle -------------------------------------------------

    def _loop_state(self, session_id: str) -> _SessionLoopState:
        with self._state_lock:
            state = self._loops.get(session_id)
            if state is None:
                state = _SessionLoopState()
                self._loops[session_id] = state
            return state

    def _kick(self, session_id: str) -> None:
        if self.executor is not None:
            self.executor.submit(self._drain_logged, session_id)
        elif self.auto_drain:
            self.drain(session_id)

    def _drain_logged(self, session_id: str) -> None:
        try:
            self.drain(session_id)
        except Exception:
            logger.exception("background drain for %s failed", session_id)

    def create_session(self, goal: str) -> ContextSnapshot:
        snapshot = self.manager.create_session(goal)
        self._enqueue(snapshot.session_id, LoopTrigger(cause="bootstrap", classification=NEEDS_TASK))
        self._kick(snapshot.session_id)
        return self.manager.snapshot(snapshot.session_id)

    def submit_action(self, session_id: str, kind: str,
                      target: Optional[ActionTarget] = None,
                      payload: Optional[Dict[str, Any]] = None) -> Tuple[int, str]:
        seq = self.manager.record_action(session_id, kind, actor="user",
                                         target=target, payload=payload)
        snap = self.manager.snapshot(session_id)
        record = next(r for r in snap.history if r.seq == seq)
        classification = classify(record, snap.interface)
        if classification != NO_LOOP:
            self._enqueue(session_id, LoopTrigger(cause="user_action",
                                                  classification=classification, seq=seq))
            self._kick(session_id)
        return seq, classification

    def advance_stage(self, session_id: str, target: TaskStage, actor: str = "user") -> TaskStage:
        stage = self.manager.advance_stage(session_id, target, actor=actor)
        self._enqueue(session_id, LoopTrigger(cause="stage_advance", classification=NEEDS_TASK))
        self._kick(session_id)
        return stage

    def notify_task_committed(self, session_id: str) -> None:
        """Schedule the interface to catch up with an externally committed plan."""
        self._enqueue(session_id, LoopTrigger(cause="task_committed", classification=NEEDS_INTERFACE))
        self._kick(session_id)

    def runs(self, session_id: str) -> List[LoopRun]:
        return list(self._loop_state(session_id).runs)

    # -- trigger queue -------------------------------------------------------

    def _enqueue(self, session_id: str, trigger: LoopTrigger) -> None:
        state = self._loop_state(session_id)
        with state.lock:
            state.queue.append(trigger)
            self.manager.set_pending_loop(
                session_id, "task" if trigger.classification == NEEDS_TASK else "interface")

    def drain(self, session_id: str) -> List[LoopRun]:
        """Process queued triggers until none are left. Serial per session."""
        state = self._loop_state(session_id)
        produced: List[LoopRun] = []
        with state.lock:
            if state.draining:
                return produced
            state.draining = True
        try:
            while True:
                with state.lock:
                    if not state.queue:
                        self.manager.set_pending_loop(session_id, None)
                        break
                    trigger = state.queue.popleft()
                    # Burst edits coalesce: one task run covers every task
                    # trigger queued behind this one (history carries them all).
                    if trigger.classification == NEEDS_TASK:
                        while state.queue and state.queue[0].classification == NEEDS_TASK:
                            state.queue.popleft()
                runs = self._process(session_id, trigger)
                produced.extend(runs)
                with state.lock:
                    state.runs.extend(runs)
        finally:
            with state.lock:
                state.draining = False
        return produced

    def _process(self, session_id: str, trigger: LoopTrigger) -> List[LoopRun]:
        runs: List[LoopRun] = []
        try:
            if trigger.classification == NEEDS_TASK:
                task_run, fetched = self._run_task_loop(session_id)
                runs.append(task_run)
                runs.append(self._run_interface_loop(session_id, fetched))
            elif trigger.classification == NEEDS_INTERFACE:
                runs.append(self._run_interface_loop(session_id, None))
        except MissingFixture:
            raise
        except DuetError as exc:
            logger.exception("trigger %s failed", trigger)
            loop = "task" if trigger.classification == NEEDS_TASK else "interface"
            self.manager.record_action(session_id, "loop_failed", actor="agent",
                                       payload={"loop": loop, "reason": f"{type(exc).__name__}: {exc}"})
            snap = self.manager.snapshot(session_id)
            runs.append(LoopRun(loop=loop, base_task_version=snap.task_version,
                                base_interface_version=snap.interface_version,
                                outcome="failed", detail=type(exc).__name__))
        return runs

    # -- the loops ----------------------------------------------------------

    def _task_definition(self, snapshot: ContextSnapshot):
        values = latest_values(snapshot.history)
        hints = " ".join(str(r.payload.get("value", "")) for _, r in sorted(
            values.items(), key=lambda kv: kv[1].seq))
        return self.catalog.match_task(f"{snapshot.goal} {hints}")

    def _run_task_loop(self, session_id: str) -> Tuple[LoopRun, Dict[str, List[BasicItem]]]:
        fetched: Dict[str, List[BasicItem]] = {}
        stale = 0
        while True:
            snap = self.manager.snapshot(session_id)
            td, _signals = task_agent_step(snap, self.gateway, self.catalog, self.budget)
            fetched = self._fetch_for_changed(session_id, snap, td.subtasks)
            try:
                self.manager.commit_task(session_id, td, base_version=snap.task_version)
                return LoopRun(loop="task", base_task_version=snap.task_version,
                               base_interface_version=snap.interface_version,
                               outcome="committed", stale_retries=stale), fetched
            except StaleBase:
                if stale >= MAX_STALE_RETRIES:
                    self.manager.record_action(
                        session_id, "loop_failed", actor="agent",
                        payload={"loop": "task", "reason": "StaleBase after retries"})
                    return LoopRun(loop="task", base_task_version=snap.task_version,
                                   base_interface_version=snap.interface_version,
                                   outcome="failed", stale_retries=stale,
                                   detail="StaleBase"), fetched
                stale += 1

    def _fetch_for_changed(self, session_id: str, snap: ContextSnapshot,
                           proposed: Sequence[Subtask]) -> Dict[str, List[BasicItem]]:
        old = {s.subtask_id: s for s in snap.task.subtasks}
        task_def = self._task_definition(snap)
        fetched: Dict[str, List[BasicItem]] = {}
        for subtask in proposed:
            if subtask.page_state_id is None or not subtask.matched_apis:
                continue
            if subtask.page_type not in ("list", "detail"):
                continue
            previous = old.get(subtask.subtask_id)
            unchanged = previous is not None and canonical_text(
                [a.model_dump(mode="json") for a in previous.matched_apis]) == canonical_text(
                [a.model_dump(mode="json") for a in subtask.matched_apis])
            page = snap.interface.pages.get(subtask.page_state_id)
            has_items = bool(page is not None and page.stateDetail.get("items"))
            if unchanged and has_items:
                continue
            items = self._fetch_subtask(session_id, subtask, task_def)
            fetched[subtask.page_state_id] = items
        return fetched

    def _fetch_subtask(self, session_id: str, subtask: Subtask, task_def) -> List[BasicItem]:
        merged: List[BasicItem] = []
        seen = set()
        for api in subtask.matched_apis:
            if not self.catalog.has_api(api.api_name):
                continue
            self.manager.record_action(session_id, "agent_search", actor="agent", payload={
                "api_name": api.api_name,
                "subtaskId": subtask.subtask_id,
                "pageStateId": subtask.page_state_id,
                "params": dict(api.payload),
            })
            items = service_agent_fetch(
                api, task_def, None, self.gateway, self.catalog, self.budget,
                expect_nonempty=(subtask.page_type == "list"))
            for item in items:
                if item.id not in seen:
                    seen.add(item.id)
                    merged.append(item)
        if merged:
            self.manager.record_action(session_id, "agent_recommend", actor="agent", payload={
                "pageStateId": subtask.page_state_id,
                "itemIds": [str(i.id) for i in merged[:3]],
            })
        return merged

    def _carried_items(self, snap: ContextSnapshot) -> Dict[str, List[BasicItem]]:
        carried: Dict[str, List[BasicItem]] = {}
        for psid, page in snap.interface.pages.items():
            docs = page.stateDetail.get("items")
            if not docs:
                continue
            try:
                carried[psid] = [BasicItem.model_validate(d) for d in docs]
            except Exception:
                logger.warning("page %s carries unparseable items; dropping", psid)
        return carried

    @staticmethod
    def _summary_active(history: Sequence[ActionRecord]) -> bool:
        """True once any confirm has happened while the session was in Duet."""
        stage = TaskStage.Define
        for record in history:
            if record.kind == "stage_change":
                stage = TaskStage(record.payload["to"])
            elif record.kind == "confirm" and stage == TaskStage.Duet:
                return True
        return False

    def _run_interface_loop(self, session_id: str,
                            fetched: Optional[Dict[str, List[BasicItem]]]) -> LoopRun:
        stale = 0
        while True:
            snap = self.manager.snapshot(session_id)
            service_data = self._carried_items(snap)
            if fetched:
                service_data.update(fetched)
            proposal = interface_agent_step(snap, self.gateway, self.catalog,
                                            service_data=service_data, budget=self.budget)

            if snap.stage == TaskStage.Duet and self._summary_active(snap.history):
                summary_page = next(
                    (s.page_state_id for s in snap.task.subtasks if s.page_type == "summary"), None)
                if summary_page and summary_page in proposal.pages:
                    override = InterfaceBundle(navigation=proposal.navigation,
                                               pages=proposal.pages,
                                               components=proposal.components)
                    summary = summary_agent_step(snap, self.gateway, self.budget,
                                                 interface_override=override)
                    proposal.pages[summary_page].stateDetail["summary"] = summary.model_dump(mode="json")

            try:
                self.manager.commit_interface(
                    session_id, proposal.navigation, proposal.pages, proposal.components,
                    base_version=snap.interface_version, for_task_version=snap.task_version)
                return LoopRun(loop="interface", base_task_version=snap.task_version,
                               base_interface_version=snap.interface_version,
                               outcome="committed", stale_retries=stale)
            except StaleBase:
                if stale >= MAX_STALE_RETRIES:
                    self.manager.record_action(
                        session_id, "loop_failed", actor="agent",
                        payload={"loop": "interface", "reason": "StaleBase after retries"})
                    return LoopRun(loop="interface", base_task_version=snap.task_version,
                                   base_interface_version=snap.interface_version,
                                   outcome="failed", stale_retries=stale, detail="StaleBase")
                stale += 1

    # -- quiescence -----------------------------------------------------------

    def _idle(self, session_id: str) -> bool:
        state = self._loop_state(session_id)
        with state.lock:
            return not state.queue and not state.draining

    def _interface_lags(self, session_id: str) -> bool:
        snap = self.manager.snapshot(session_id)
        last_task = last_iface = 0
        for record in snap.history:
            if record.kind == "agent_commit_task":
                last_task = record.seq
            elif record.kind == "agent_commit_interface":
                last_iface = record.seq
        return last_task > last_iface

    def lagging_sessions(self) -> List[str]:
        """Sessions with queued triggers, an in-flight drain, or a stale interface."""
        return [sid for sid in self.manager.session_ids()
                if not self._idle(sid) or self._interface_lags(sid)]

    def quiesce(self, session_id: str, timeout_ms: int = 30_000) -> Tuple[int, int]:
        deadline = self.clock.now_ms() + timeout_ms
        while True:
            if self._idle(session_id):
                if self._interface_lags(session_id):
                    self._enqueue(session_id, LoopTrigger(cause="task_committed",
                                                          classification=NEEDS_INTERFACE))
                    self.drain(session_id)
                else:
                    break
            else:
                self.drain(session_id)
            if self.clock.now_ms() > deadline:
                raise QuiesceTimeout(f"session {session_id} still busy after {timeout_ms}ms")
            self.clock.sleep(0.01)
        snap = self.manager.snapshot(session_id)
        return snap.task_version, snap.interface_version
