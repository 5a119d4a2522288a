"""Shared builders: scripted tables, deterministic engines, random plan generators."""

from __future__ import annotations

import random
from pathlib import Path
from typing import Any, Dict, List, Optional

import pytest

from duet.clock import FakeClock, SequentialIdFactory
from duet.context import ContextSnapshot, InterfaceBundle
from duet.gateway import Gateway, scripted_provider
from duet.orchestrator import SessionEngine
from duet.schema import STAGE_ORDER, ActionTarget, Subtask, TaskDecomposition, TaskStage

ROOT = Path(__file__).resolve().parent.parent
FIXTURES_DIR = ROOT / "fixtures"
TRACES_DIR = ROOT / "traces"

TRIP_GOAL = "Plan a city break in Rome"

# Two-subtask plan reused across tests: one form page, one list page with an api.
TRIP_PLAN: Dict[str, Any] = {
    "goal": TRIP_GOAL,
    "subtasks": [
        {"subtask_name": "Set preferences", "subtask_id": "st-choose", "step_id": 1,
         "page_type": "form", "page_state_id": "ps-choose",
         "matched_apis": [], "dependent_subtasks": []},
        {"subtask_name": "Browse attractions", "subtask_id": "st-results", "step_id": 2,
         "page_type": "list", "page_state_id": "ps-results",
         "matched_apis": [{"api_name": "search_attractions", "payload": {"city": "Rome"}}],
         "dependent_subtasks": ["st-choose"]},
    ],
}

FORM_FIELDS: List[Dict[str, Any]] = [
    {"component": "selection", "label": "Transport", "valueKey": "transport",
     "options": ["train", "plane", "car"]},
    {"component": "slider", "label": "Budget", "valueKey": "budget",
     "min": 0, "max": 3000, "step": 50, "unit": "EUR"},
    {"component": "input_field", "label": "Notes", "valueKey": "notes"},
    {"component": "date_picker", "label": "Departure", "valueKey": "depart"},
    {"component": "action_button", "label": "Start planning", "actionId": "go"},
]

TRIP_ITEMS: List[Dict[str, Any]] = [
    {"id": "it-1", "title": "Colosseum underground tour", "price": 25.0,
     "extended_attributes": [{"key": "category", "value": "history"}]},
    {"id": "it-2", "title": "Trevi Fountain walk", "price": 0.0},
    {"id": "it-3", "title": "Borghese Gallery", "price": 15.0},
]


def trip_table() -> Dict[str, Any]:
    """Catch-all fixture set that answers every call the trip plan can make."""
    return {"fixtures": [
        {"template_id": "task_decompose", "responses": [TRIP_PLAN]},
        {"template_id": "page_state_gen", "when_contains": "st-choose",
         "responses": [{"sessionId": "x", "pageStateId": "x", "pageType": "form",
                        "stateDetail": {"fields": FORM_FIELDS}}]},
        {"template_id": "page_state_gen",
         "responses": [{"sessionId": "x", "pageStateId": "x", "pageType": "list",
                        "stateDetail": {}}]},
        {"template_id": "navigation_gen",
         "responses": [{"pageGroups": [], "initialGroupIndex": 0}]},
        {"template_id": "cardview_gen",
         "responses": [{"pageStateId": "x", "itemDataKey": "items",
                        "displayedAttributes": ["id", "title", "price"]}]},
        {"template_id": "service_mock", "responses": [TRIP_ITEMS]},
        {"template_id": "summary_gen",
         "responses": [{"content": "Everything is booked.",
                        "dashboardConfig": {"items": [
                            {"id": "total", "label": "Total", "value": 40.0,
                             "type": "number"}]}}]},
    ]}


def build_engine(table: Optional[Dict[str, Any]] = None, **kwargs: Any) -> SessionEngine:
    provider = scripted_provider(table if table is not None else trip_table())
    clock = FakeClock()
    return SessionEngine(Gateway(provider, clock=clock), clock=clock,
                         id_factory=SequentialIdFactory(), **kwargs)


@pytest.fixture
def engine() -> SessionEngine:
    return build_engine()


def bare_snapshot(td: TaskDecomposition, stage: TaskStage = TaskStage.Plan,
                  history: Any = (), interface: Optional[InterfaceBundle] = None,
                  ) -> ContextSnapshot:
    """Snapshot wrapper for driving agents directly, without a manager."""
    return ContextSnapshot(session_id="session-0001", goal=td.goal or "trip", stage=stage,
                           task=td, task_version=1, interface=interface or InterfaceBundle(),
                           interface_version=0, history=tuple(history), pending_loop=None)


NAVIGABLE_PAGE_KINDS = ("list", "detail", "form")


def make_plan(rng: random.Random, n_navigable: int, n_terminal: int = 0,
              n_unpaged: int = 0) -> TaskDecomposition:
    """Random plan that satisfies every structural invariant by construction."""
    kinds: List[Optional[str]] = [rng.choice(NAVIGABLE_PAGE_KINDS) for _ in range(n_navigable)]
    kinds += [rng.choice(("summary", "confirmation")) for _ in range(n_terminal)]
    kinds += [None for _ in range(n_unpaged)]
    rng.shuffle(kinds)
    subtasks: List[Subtask] = []
    for i, page_type in enumerate(kinds):
        deps: List[str] = []
        if i > 0 and rng.random() < 0.4:
            deps = [f"st-{rng.randrange(i) + 1:02d}"]  # earlier ids only: acyclic
        subtasks.append(Subtask(
            subtask_name=f"Step {i + 1}", subtask_id=f"st-{i + 1:02d}", step_id=i + 1,
            dependent_subtasks=deps, page_type=page_type,
            page_state_id=f"ps-{i + 1:02d}" if page_type else None))
    return TaskDecomposition(goal="generated trip", subtasks=subtasks)


# --- random session driver ----------------------------------------------------

OPS = ("select", "slide", "input", "pick_date", "navigate", "favorite",
       "click_button", "click_cards", "confirm", "reorder", "advance", "backtrack")


def apply_random_op(engine: SessionEngine, sid: str, rng: random.Random,
                    stage_idx: int) -> int:
    """One random legal user operation; returns the updated stage index."""
    op = rng.choice(OPS)
    if op == "advance":
        if stage_idx == len(STAGE_ORDER) - 1:
            return stage_idx
        engine.advance_stage(sid, STAGE_ORDER[stage_idx + 1])
        return stage_idx + 1
    if op == "backtrack":
        if stage_idx == 0:
            return stage_idx
        back = rng.randrange(stage_idx)
        engine.advance_stage(sid, STAGE_ORDER[back])
        return back

    form = lambda key: ActionTarget(pageStateId="ps-choose", componentId=key, valueKey=key)
    if op == "select":
        engine.submit_action(sid, "select", target=form("transport"),
                             payload={"value": rng.choice(["train", "plane", "car"])})
    elif op == "slide":
        engine.submit_action(sid, "slide", target=form("budget"),
                             payload={"value": rng.randrange(0, 3001, 50)})
    elif op == "input":
        engine.submit_action(sid, "input", target=form("notes"),
                             payload={"value": f"note {rng.randrange(100)}"})
    elif op == "pick_date":
        engine.submit_action(sid, "pick_date", target=form("depart"),
                             payload={"value": f"2026-09-{rng.randrange(1, 29):02d}"})
    elif op == "navigate":
        engine.submit_action(sid, "navigate",
                             target=ActionTarget(pageStateId=rng.choice(["ps-choose", "ps-results"])))
    elif op == "favorite":
        engine.submit_action(sid, "favorite",
                             target=ActionTarget(pageStateId="ps-results", componentId="items"),
                             payload={"itemId": rng.choice(["it-1", "it-2", "it-3"]),
                                      "favorited": rng.random() < 0.8})
    elif op == "click_button":
        engine.submit_action(sid, "click",
                             target=ActionTarget(pageStateId="ps-choose", componentId="go"))
    elif op == "click_cards":
        engine.submit_action(sid, "click",
                             target=ActionTarget(pageStateId="ps-results", componentId="items"),
                             payload={"sort": rng.choice(["price_asc", "price_desc"])})
    elif op == "confirm":
        engine.submit_action(sid, "confirm",
                             target=ActionTarget(pageStateId="ps-results"),
                             payload={"itemId": rng.choice(["it-1", "it-2", "it-3"])})
    elif op == "reorder":
        order = ["st-choose", "st-results"]
        rng.shuffle(order)
        engine.submit_action(sid, "reorder", payload={"newOrder": order})
    return stage_idx
