"""Acceptance gate: the seven load-bearing guarantees, one test each.

Every test here runs offline (the autouse fixture below turns any socket use
into a hard failure) and prints one [PASS] line with its measured numbers.
"""

from __future__ import annotations

import json
import random
import socket
import time
from typing import Any, Dict, List, Optional, Tuple

import pytest

from conftest import (
    ROOT,
    TRIP_GOAL,
    apply_random_op,
    bare_snapshot,
    build_engine,
    make_plan,
    trip_table,
)
from duet.agents import (
    cardview_config_for,
    heuristic_navigation,
    interface_agent_step,
    load_catalog,
)
from duet.agents.interface_agent import NAV_CAPACITY
from duet.clock import FakeClock, SequentialIdFactory
from duet.context import ContextManager
from duet.errors import CapacityExceeded, ExhaustedAttempts
from duet.gateway import Gateway, GatewayBudget, load_fixture_files, scripted_provider
from duet.orchestrator import SessionEngine
from duet.schema import (
    ActionTarget,
    Subtask,
    TaskStage,
    check_duality,
    serialize,
    validate,
)
from duet.service import load_trace, replay, save_session
from duet.service.persistence import load_session

CATALOG = load_catalog()
GOLDEN_TRACE = ROOT / "traces" / "barcelona.trace"
GOLDEN_FIXTURES = ROOT / "fixtures" / "barcelona.json"

STAGE_LADDER = ["Define", "Empathize", "Plan", "Explore", "Refine", "Duet"]


@pytest.fixture(autouse=True)
def no_network(monkeypatch):
    """Any socket use inside an acceptance test is a failure, not a slow test."""
    def refuse(*args: Any, **kwargs: Any):
        raise RuntimeError("network access attempted during acceptance run")
    monkeypatch.setattr(socket, "getaddrinfo", refuse)
    monkeypatch.setattr(socket.socket, "connect", refuse)


def passline(name: str, detail: str) -> None:
    print(f"[PASS] {name}: {detail}")


# --- 1. golden trace ----------------------------------------------------------


def drive_trace(trace: Dict[str, Any]) -> Tuple[SessionEngine, str, List[Any], Dict[str, int]]:
    """Re-run the trace's actions on a fresh engine, keeping the plan after each step."""
    clock = FakeClock()
    engine = SessionEngine(Gateway(load_fixture_files([GOLDEN_FIXTURES]), clock=clock),
                           clock=clock, id_factory=SequentialIdFactory())
    sid = engine.create_session(trace["meta"]["goal"]).session_id
    engine.quiesce(sid)
    tasks: List[Any] = []
    marks: Dict[str, int] = {}
    for step in trace["steps"]:
        if "action" in step:
            body = step["action"]
            target = ActionTarget.model_validate(body["target"]) if body.get("target") else None
            seq, _ = engine.submit_action(sid, body["kind"], target=target,
                                          payload=body.get("payload"))
            engine.quiesce(sid)
            if body["kind"] == "reorder":
                marks["reorder"] = seq
            if body["kind"] == "select" and body.get("payload", {}).get("value") == "airplane":
                marks["airplane"] = seq
        elif "advance" in step:
            engine.advance_stage(sid, TaskStage(step["advance"]))
            engine.quiesce(sid)
        tasks.append(engine.manager.snapshot(sid).task)
    return engine, sid, tasks, marks


def test_criterion_1_golden_trace_replay():
    trace = load_trace(GOLDEN_TRACE)
    started = time.monotonic()
    report = replay(trace, load_fixture_files([GOLDEN_FIXTURES]))
    elapsed = time.monotonic() - started

    assert report.ok, f"replay failed at step {report.failed_index}"
    assert report.doc["assertionsFailed"] == 0
    assert report.doc["assertionsPassed"] == 36
    assert elapsed < 10.0, f"replay took {elapsed:.2f}s"

    engine, sid, tasks, marks = drive_trace(trace)
    snap = engine.manager.snapshot(sid)

    # The session walks the whole stage ladder in order, never backtracking.
    changes = [r for r in snap.history if r.kind == "stage_change"]
    assert [r.payload["to"] for r in changes] == STAGE_LADDER[1:]
    assert changes[0].payload["from"] == "Define"
    assert all(not r.payload["backtrack"] for r in changes)
    assert snap.stage == TaskStage.Duet

    # The reorder beat swaps the lodging and itinerary steps, nothing else.
    i_reorder = next(i for i, s in enumerate(trace["steps"])
                     if "action" in s and s["action"]["kind"] == "reorder")
    before = [(s.subtask_id, s.step_id) for s in tasks[i_reorder - 1].subtasks]
    after = [(s.subtask_id, s.step_id) for s in tasks[i_reorder].subtasks]
    assert before == [("st-profile", 1), ("st-flights", 2), ("st-itinerary", 3),
                      ("st-lodging", 4)]
    assert after == [("st-profile", 1), ("st-flights", 2), ("st-lodging", 3),
                     ("st-itinerary", 4)]

    # Choosing the airplane flows into a plan commit, then an interface commit.
    airplane_seq = marks["airplane"]
    i_airplane = next(i for i, s in enumerate(trace["steps"])
                      if "action" in s and s["action"].get("payload", {}).get("value") == "airplane")
    committed = tasks[i_airplane]
    assert any(api.payload.get("transport") == "airplane"
               for s in committed.subtasks for api in s.matched_apis)
    task_commit = next(r.seq for r in snap.history
                       if r.kind == "agent_commit_task" and r.seq > airplane_seq)
    assert any(r.kind == "agent_commit_interface" and r.seq > task_commit
               for r in snap.history)

    # The closing summary points only at pages that exist.
    live = set(snap.interface.pages)
    summaries = [page.stateDetail["summary"] for page in snap.interface.pages.values()
                 if isinstance(page.stateDetail.get("summary"), dict)]
    assert summaries, "no summary was injected in Duet"
    for doc in summaries:
        for block in (doc.get("navigationBlocks") or {}).values():
            assert block["pageStateId"] in live

    passline("golden trace", f"{report.doc['assertionsPassed']} assertions, "
             f"{elapsed:.2f}s, stages {'>'.join(STAGE_LADDER)}")


# --- 2. duality suite ------------------------------------------------------------


def duality_gateway() -> Gateway:
    table = {"fixtures": [
        {"template_id": "navigation_gen",
         "responses": [{"pageGroups": [], "initialGroupIndex": 0}]},
        {"template_id": "page_state_gen",
         "responses": [{"sessionId": "x", "pageStateId": "x", "pageType": "form",
                        "stateDetail": {}}]},
    ]}
    return Gateway(scripted_provider(table), clock=FakeClock())


def flat_components(bundle: Any) -> List[Any]:
    return [c for configs in bundle.components.values() for c in configs]


def test_criterion_2_duality_suite():
    started = time.monotonic()
    rng = random.Random(20260819)
    gateway = duality_gateway()
    clean = 0
    drop_entries: List[int] = []
    orphan_entries: List[int] = []

    for _ in range(500):
        n_nav = rng.randint(0, 10)
        n_term = rng.randint(0, min(2, 10 - n_nav))
        n_unpaged = rng.randint(0, min(2, 10 - n_nav - n_term))
        td = make_plan(rng, n_navigable=n_nav, n_terminal=n_term, n_unpaged=n_unpaged)
        bundle = interface_agent_step(bare_snapshot(td), gateway, CATALOG)
        components = flat_components(bundle)
        report = check_duality(td, bundle.navigation, bundle.pages.values(), components)
        assert report.empty, f"duality broke on a clean build: {report}"
        clean += 1

        nav_ids = [p.pageStateId for g in bundle.navigation.pageGroups for p in g.pages]
        if nav_ids:
            victim = rng.choice(nav_ids)
            # Dropping the page from the menu leaves its subtask stranded.
            mutated = bundle.navigation.model_copy(deep=True)
            for group in mutated.pageGroups:
                group.pages = [p for p in group.pages if p.pageStateId != victim]
            broken = check_duality(td, mutated, bundle.pages.values(), components)
            assert len(broken.entries) >= 1 and "MissingPage" in broken.kinds()
            drop_entries.append(len(broken.entries))

        # A subtask added behind the interface's back must be flagged.
        grown = td.model_copy(deep=True)
        grown.subtasks.append(Subtask(
            subtask_name="Stowaway", subtask_id="st-stowaway",
            step_id=len(grown.subtasks) + 1,
            page_type="list", page_state_id="ps-stowaway"))
        broken = check_duality(grown, bundle.navigation, bundle.pages.values(), components)
        assert len(broken.entries) >= 1
        assert any(e.kind == "MissingPage" and e.page_state_id == "ps-stowaway"
                   for e in broken.entries)
        orphan_entries.append(len(broken.entries))

    elapsed = time.monotonic() - started
    assert clean == 500
    assert drop_entries and min(drop_entries) >= 1
    assert orphan_entries and min(orphan_entries) >= 1
    assert elapsed < 30.0, f"duality suite took {elapsed:.2f}s"
    passline("duality suite", f"500/500 clean, {len(drop_entries)} drop mutations, "
             f"{len(orphan_entries)} orphan mutations, {elapsed:.2f}s")


# --- 3. history laws ------------------------------------------------------------------


def test_criterion_3_history_laws():
    engine = build_engine()
    sid = engine.create_session(TRIP_GOAL).session_id
    rng = random.Random(424242)
    stage_idx = 0
    checkpoint: List[Tuple[int, str, str]] = []

    def fingerprinted() -> List[Tuple[int, str, str]]:
        snap = engine.manager.snapshot(sid)
        return [(r.seq, r.actor, r.kind) for r in snap.history]

    for i in range(1000):
        stage_idx = apply_random_op(engine, sid, rng, stage_idx)
        if (i + 1) % 100 == 0:
            current = fingerprinted()
            assert current[: len(checkpoint)] == checkpoint, "history prefix was rewritten"
            assert [seq for seq, _, _ in current] == list(range(1, len(current) + 1))
            checkpoint = current

    engine.quiesce(sid)
    snap = engine.manager.snapshot(sid)
    seqs = [r.seq for r in snap.history]
    assert seqs == list(range(1, len(seqs) + 1)), "gap or reorder in seq"

    task_commits = [r.seq for r in snap.history if r.kind == "agent_commit_task"]
    iface_commits = [r.seq for r in snap.history if r.kind == "agent_commit_interface"]
    # One version per commit record means versions moved monotonically by +1.
    assert snap.task_version == len(task_commits)
    assert snap.interface_version == len(iface_commits)
    task_payload_versions = [r.payload["taskVersion"] for r in snap.history
                             if r.kind == "agent_commit_task"]
    assert task_payload_versions == list(range(1, len(task_commits) + 1))

    # Every plan commit is answered by an interface commit before the next one.
    for current, following in zip(task_commits, task_commits[1:] + [None]):
        upper = following if following is not None else float("inf")
        assert any(current < seq < upper for seq in iface_commits), \
            f"plan commit at seq {current} was never reflected in the interface"

    passline("history laws", f"{len(seqs)} records, {len(task_commits)} plan commits, "
             f"{len(iface_commits)} interface commits, gapless and ordered")


# --- 4. navigation caps ------------------------------------------------------------------


def test_criterion_4_navigation_caps():
    rng = random.Random(1618)
    checked = 0
    for _ in range(500):
        n_nav = rng.randint(0, NAV_CAPACITY)
        td = make_plan(rng, n_navigable=n_nav, n_terminal=rng.randint(0, 2),
                       n_unpaged=rng.randint(0, 2))
        nav = heuristic_navigation(td)
        assert len(nav.pageGroups) <= 3
        assert all(len(g.pages) <= 5 for g in nav.pageGroups)
        listed = [p.pageStateId for g in nav.pageGroups for p in g.pages]
        assert len(listed) <= 15
        assert len(listed) == len(set(listed))
        expected = {s.page_state_id for s in td.subtasks
                    if s.page_state_id and s.page_type not in ("summary", "confirmation")}
        assert set(listed) == expected, "navigation must cover exactly the navigable pages"
        assert validate("Navigation", nav.model_dump(mode="json")).ok
        checked += 1

    oversized = make_plan(random.Random(16), n_navigable=NAV_CAPACITY + 1)
    outcomes = set()
    for _ in range(3):
        with pytest.raises(CapacityExceeded) as exc:
            heuristic_navigation(oversized)
        outcomes.add((exc.value.count, exc.value.capacity))
    with pytest.raises(CapacityExceeded):
        interface_agent_step(bare_snapshot(oversized), duality_gateway(), CATALOG)
    assert outcomes == {(16, 15)}, "the refusal must be deterministic"

    passline("navigation caps", f"{checked} plans within 3 groups / 5 pages / 15 total; "
             f"16 navigable pages refused with (16, 15)")


# --- 5. cardview rules -----------------------------------------------------------------------


# Twenty item models spanning every boolean combination, written out by hand.
CARD_MODELS: List[Dict[str, List[str]]] = [
    {"fields": ["id", "title", "price"], "concepts": ["booking"]},
    {"fields": ["id", "title", "rating"], "concepts": ["saving"]},
    {"fields": ["id", "title", "date"], "concepts": ["products"]},
    {"fields": ["id", "title", "listPrice"], "concepts": ["weather"]},
    {"fields": ["id", "title", "RATING_avg"], "concepts": []},
    {"fields": ["id", "title", "release_date"], "concepts": ["navigation"]},
    {"fields": ["id", "title", "name"], "concepts": ["booking"]},
    {"fields": ["id", "title", "blurb"], "concepts": ["saving", "weather"]},
    {"fields": ["id", "title", "summary"], "concepts": ["products", "booking"]},
    {"fields": ["id", "title", "address"], "concepts": []},
    {"fields": ["id", "title", "description"], "concepts": ["sightseeing"]},
    {"fields": ["id", "title", "distance"], "concepts": ["lodging"]},
    {"fields": ["title", "nightly_price", "city"], "concepts": ["lodging", "booking"]},
    {"fields": ["title", "user_rating", "city"], "concepts": ["reviews"]},
    {"fields": ["title", "start_date", "end_date"], "concepts": ["itinerary"]},
    {"fields": ["title", "priceRange", "cuisine"], "concepts": ["dining", "saving"]},
    {"fields": ["title", "stars", "amenities"], "concepts": ["products"]},
    {"fields": ["title", "duration", "stops"], "concepts": ["transport"]},
    {"fields": ["title", "updated", "author"], "concepts": ["booking", "saving", "products"]},
    {"fields": ["title", "category", "venue"], "concepts": []},
]


def rule_oracle(fields: List[str], concepts: List[str]) -> Tuple[bool, bool]:
    """Independent restatement of the card behavior rules."""
    favorites = any(c in ("booking", "saving", "products") for c in concepts)
    sortable = any(marker in f.lower() for f in fields
                   for marker in ("price", "rating", "date"))
    return favorites, sortable


def test_criterion_5_cardview_rules():
    subtask = validate("TaskDecomposition", {
        "goal": "g", "subtasks": [{"subtask_name": "Browse", "subtask_id": "st-b",
                                   "step_id": 1, "page_type": "list",
                                   "page_state_id": "ps-b"}]}).value.subtasks[0]
    agreements = 0
    for model in CARD_MODELS:
        fields, concepts = model["fields"], model["concepts"]
        want_fav, want_sort = rule_oracle(fields, concepts)
        # The scripted model argues for the opposite of both booleans.
        proposal: Dict[str, Any] = {"pageStateId": "ps-b", "itemDataKey": "items",
                                    "enableFavorites": not want_fav,
                                    "isSortEnabled": not want_sort}
        proposal["displayedAttributes"] = fields[:3] if len(fields) >= 3 else ["x"]
        gateway = Gateway(scripted_provider([{"template_id": "cardview_gen",
                                              "responses": [proposal]}]),
                          clock=FakeClock())
        config = cardview_config_for(subtask, model, {"id": "i-1"}, gateway)
        agreements += int(config.enableFavorites == want_fav)
        agreements += int(config.isSortEnabled == want_sort)
        assert 3 <= len(config.displayedAttributes) <= 5

    assert agreements == 2 * len(CARD_MODELS), \
        f"only {agreements}/{2 * len(CARD_MODELS)} booleans match the rule oracle"
    passline("cardview rules", f"{len(CARD_MODELS)} item models, "
             f"{agreements}/{2 * len(CARD_MODELS)} booleans agree with the oracle "
             "despite adversarial proposals")


# --- 6. gateway determinism and bounds ------------------------------------------------------


NAV_4G = {"pageGroups": [
    {"groupname": f"g{i}", "groupicon": "map",
     "pages": [{"pagename": f"p{i}", "pageStateId": f"ps-{i}"}]}
    for i in range(4)], "initialGroupIndex": 0}
NAV_3G = {"pageGroups": NAV_4G["pageGroups"][:3], "initialGroupIndex": 0}
NAV_BINDINGS = {"task_decomposition_json": "{}"}


def nav_gateway(responses: List[Any]) -> Gateway:
    provider = scripted_provider([{"template_id": "navigation_gen", "responses": responses}])
    return Gateway(provider, clock=FakeClock())


def test_criterion_6_gateway_determinism_and_bounds():
    def one_trace() -> bytes:
        result = nav_gateway([NAV_4G, "not json", NAV_3G]).complete_validated(
            "navigation_gen", NAV_BINDINGS)
        return json.dumps([a.doc() for a in result.attempts], sort_keys=True).encode()

    traces = {one_trace() for _ in range(5)}
    assert len(traces) == 1, "attempt traces differ between identical runs"

    for budget in (1, 2, 3):
        with pytest.raises(ExhaustedAttempts) as exc:
            nav_gateway(["junk"]).complete_validated(
                "navigation_gen", NAV_BINDINGS, GatewayBudget(max_attempts=budget))
        assert len(exc.value.attempt_errors) == budget, "attempts exceeded the budget"

    result = nav_gateway([NAV_4G, NAV_3G]).complete_validated("navigation_gen", NAV_BINDINGS)
    assert len(result.value.pageGroups) == 3
    assert len(result.attempts) == 2
    assert not result.attempts[0].ok
    assert result.attempts[0].constraints == ("max-3-groups at pageGroups",)
    assert result.attempts[1].ok and result.attempts[1].attempt == 2

    passline("gateway determinism", "5 identical attempt traces; budgets 1-3 respected; "
             "over-wide menu repaired on attempt 2")


# --- 7. persistence and replay ----------------------------------------------------------------


def test_criterion_7_persistence_and_replay():
    engine = build_engine()
    sid = engine.create_session(TRIP_GOAL).session_id
    rng = random.Random(777)
    stage_idx = 0
    states = 0
    for _ in range(100):
        stage_idx = apply_random_op(engine, sid, rng, stage_idx)
        persisted = save_session(engine.manager, sid, saved_at=engine.clock.now_ms())
        fresh = ContextManager(clock=FakeClock(), id_factory=SequentialIdFactory())
        load_session(fresh, persisted)
        assert fresh.session_hash(sid) == engine.manager.session_hash(sid)
        assert serialize(fresh.session_doc(sid)) == serialize(engine.manager.session_doc(sid))
        states += 1

    shipped = sorted((ROOT / "traces").glob("*.trace"))
    assert shipped, "no shipped traces found"
    for path in shipped:
        trace = load_trace(path)
        provider = load_fixture_files([GOLDEN_FIXTURES])
        first = replay(trace, provider)
        second = replay(trace, provider)
        assert first.to_bytes() == second.to_bytes(), f"{path.name} replays differently"
        assert first.ok, f"{path.name} does not pass its own assertions"

    passline("persistence and replay", f"{states}/100 mid-session saves restore hash-identical; "
             f"{len(shipped)} shipped trace(s) replay byte-identical")
