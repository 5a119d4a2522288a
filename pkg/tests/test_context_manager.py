"""Session state: history log, versioned commits, stage policy, persistence doc."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duet.clock import FakeClock, SequentialIdFactory
from duet.context import VERSION_RETENTION, ContextManager
from duet.errors import (
    DanglingTarget,
    DualityViolated,
    EmptyGoal,
    IllegalTransition,
    StaleBase,
    UnknownSession,
    ValidationFailed,
)
from duet.schema import (
    ActionTarget,
    Navigation,
    NavigationPage,
    PageGroup,
    PageState,
    SelectionConfig,
    Subtask,
    TaskDecomposition,
    TaskStage,
    TitleComponentConfig,
    serialize,
)


@pytest.fixture
def manager() -> ContextManager:
    return ContextManager(clock=FakeClock(), id_factory=SequentialIdFactory())


def new_session(manager: ContextManager, goal: str = "Plan a trip") -> str:
    return manager.create_session(goal).session_id


def one_page_plan(goal: str = "Plan a trip") -> TaskDecomposition:
    return TaskDecomposition(goal=goal, subtasks=[
        Subtask(subtask_name="Choose", subtask_id="st-1", step_id=1,
                page_type="form", page_state_id="ps-1")])


def interface_for(sid: str):
    nav = Navigation(pageGroups=[PageGroup(groupname="Choose", groupicon="user", pages=[
        NavigationPage(pagename="Choose", pageStateId="ps-1")])], initialGroupIndex=0)
    pages = {"ps-1": PageState(sessionId=sid, pageStateId="ps-1", pageType="form",
                               stateDetail={})}
    comps = {"ps-1": [TitleComponentConfig(value="Choose", level=2),
                      SelectionConfig(label="T", options=["a"], valueKey="transport")]}
    return nav, pages, comps


def committed_session(manager: ContextManager) -> str:
    sid = new_session(manager)
    manager.commit_task(sid, one_page_plan(), base_version=0)
    nav, pages, comps = interface_for(sid)
    manager.commit_interface(sid, nav, pages, comps, base_version=0, for_task_version=1)
    return sid


# --- session creation ---------------------------------------------------------


def test_new_session_starts_at_define_with_goal_logged(manager):
    snap = manager.create_session("  Plan a trip  ")
    assert snap.goal == "Plan a trip"
    assert snap.stage == TaskStage.Define
    assert snap.task_version == 0 and snap.interface_version == 0
    assert len(snap.history) == 1
    first = snap.history[0]
    assert (first.seq, first.actor, first.kind) == (1, "user", "input")
    assert first.payload["text"] == "Plan a trip"


def test_blank_goal_rejected(manager):
    for goal in ("", "   ", "\n\t"):
        with pytest.raises(EmptyGoal):
            manager.create_session(goal)


def test_sessions_get_distinct_ids(manager):
    ids = {new_session(manager) for _ in range(5)}
    assert len(ids) == 5
    assert sorted(ids) == manager.session_ids()


def test_unknown_session_raises(manager):
    with pytest.raises(UnknownSession):
        manager.snapshot("session-missing")


# --- action log -----------------------------------------------------------------


def test_seq_numbers_are_gapless_from_one(manager):
    sid = new_session(manager)
    for _ in range(5):
        manager.record_action(sid, "navigate")
    seqs = [r.seq for r in manager.snapshot(sid).history]
    assert seqs == list(range(1, 7))


def test_actor_kind_pairing_enforced(manager):
    sid = new_session(manager)
    with pytest.raises(ValueError):
        manager.record_action(sid, "agent_search", actor="user")
    with pytest.raises(ValueError):
        manager.record_action(sid, "select", actor="agent")
    assert manager.record_action(sid, "agent_search", actor="agent",
                                 payload={"api_name": "x"}) == 2


def test_target_must_point_at_live_page(manager):
    sid = committed_session(manager)
    with pytest.raises(DanglingTarget):
        manager.record_action(sid, "click", target=ActionTarget(pageStateId="ps-gone"))
    with pytest.raises(DanglingTarget):
        manager.record_action(sid, "click", target=ActionTarget(componentId="transport"))
    ok = manager.record_action(sid, "select",
                               target=ActionTarget(pageStateId="ps-1", componentId="transport",
                                                   valueKey="transport"),
                               payload={"value": "a"})
    assert ok > 0


def test_component_id_resolves_by_any_handle(manager):
    sid = committed_session(manager)
    # valueKey and componentType both resolve; anything else does not.
    manager.record_action(sid, "click",
                          target=ActionTarget(pageStateId="ps-1", componentId="selection"))
    with pytest.raises(DanglingTarget):
        manager.record_action(sid, "click",
                              target=ActionTarget(pageStateId="ps-1", componentId="nope"))


def test_target_dies_with_its_page(manager):
    sid = committed_session(manager)
    manager.record_action(sid, "select",
                          target=ActionTarget(pageStateId="ps-1", valueKey="transport"),
                          payload={"value": "a"})
    # New plan drops the page; the stale target must now be refused.
    td = TaskDecomposition(goal="Plan a trip", subtasks=[
        Subtask(subtask_name="Other", subtask_id="st-2", step_id=1,
                page_type="form", page_state_id="ps-2")])
    manager.commit_task(sid, td, base_version=1)
    nav = Navigation(pageGroups=[PageGroup(groupname="Other", groupicon="user", pages=[
        NavigationPage(pagename="Other", pageStateId="ps-2")])], initialGroupIndex=0)
    pages = {"ps-2": PageState(sessionId=sid, pageStateId="ps-2", pageType="form",
                               stateDetail={})}
    manager.commit_interface(sid, nav, pages, {"ps-2": []}, base_version=1, for_task_version=2)
    with pytest.raises(DanglingTarget):
        manager.record_action(sid, "select",
                              target=ActionTarget(pageStateId="ps-1", valueKey="transport"),
                              payload={"value": "b"})


# --- snapshots --------------------------------------------------------------------


def test_snapshot_is_isolated_from_later_mutation(manager):
    sid = committed_session(manager)
    snap = manager.snapshot(sid)
    before = snap.content_hash()
    snap.task.subtasks[0].subtask_name = "Hacked"
    snap.interface.pages["ps-1"].stateDetail["values"] = {"x": 1}
    snap.history[0].payload["text"] = "Hacked"
    assert manager.snapshot(sid).content_hash() == before


def test_windowed_snapshot_is_a_suffix_slice(manager):
    sid = new_session(manager)
    for _ in range(6):
        manager.record_action(sid, "navigate")
    full = manager.snapshot(sid).history
    for cut in (0, 3, 7):
        window = manager.snapshot(sid, since_seq=cut).history
        assert [r.seq for r in window] == [r.seq for r in full if r.seq > cut]


# --- task commits -------------------------------------------------------------------


def test_commit_task_bumps_version_and_logs(manager):
    sid = new_session(manager)
    assert manager.commit_task(sid, one_page_plan(), base_version=0) == 1
    snap = manager.snapshot(sid)
    assert snap.task_version == 1
    last = snap.history[-1]
    assert last.kind == "agent_commit_task" and last.actor == "agent"
    assert last.payload == {"taskVersion": 1}


def test_identical_commit_still_increments(manager):
    sid = new_session(manager)
    manager.commit_task(sid, one_page_plan(), base_version=0)
    assert manager.commit_task(sid, one_page_plan(), base_version=1) == 2


def test_commit_task_on_stale_base_refused(manager):
    sid = new_session(manager)
    manager.commit_task(sid, one_page_plan(), base_version=0)
    with pytest.raises(StaleBase):
        manager.commit_task(sid, one_page_plan(), base_version=0)
    assert manager.snapshot(sid).task_version == 1


def test_commit_task_validates_the_plan(manager):
    sid = new_session(manager)
    bad = one_page_plan()
    bad.subtasks[0].step_id = 7
    with pytest.raises(ValidationFailed):
        manager.commit_task(sid, bad, base_version=0)


# --- interface commits ----------------------------------------------------------------


def test_commit_interface_bumps_and_stamps(manager):
    sid = new_session(manager)
    manager.commit_task(sid, one_page_plan(), base_version=0)
    nav, pages, comps = interface_for(sid)
    assert manager.commit_interface(sid, nav, pages, comps,
                                    base_version=0, for_task_version=1) == 1
    snap = manager.snapshot(sid)
    last = snap.history[-1]
    assert last.kind == "agent_commit_interface"
    assert last.payload == {"interfaceVersion": 1, "forTaskVersion": 1}
    assert snap.interface.pages["ps-1"].lastUpdated is not None


def test_commit_interface_on_stale_base_refused(manager):
    sid = committed_session(manager)
    nav, pages, comps = interface_for(sid)
    with pytest.raises(StaleBase):
        manager.commit_interface(sid, nav, pages, comps, base_version=0, for_task_version=1)


def test_commit_interface_built_for_an_old_plan_refused(manager):
    sid = committed_session(manager)
    nav, pages, comps = interface_for(sid)
    manager.commit_task(sid, one_page_plan(), base_version=1)  # plan moved to v2
    with pytest.raises(StaleBase):
        manager.commit_interface(sid, nav, pages, comps, base_version=1, for_task_version=1)


def test_commit_interface_must_mirror_the_plan(manager):
    sid = new_session(manager)
    manager.commit_task(sid, one_page_plan(), base_version=0)
    nav, pages, comps = interface_for(sid)
    bare = Navigation(pageGroups=[], initialGroupIndex=0)
    with pytest.raises(DualityViolated) as exc:
        manager.commit_interface(sid, bare, pages, comps, base_version=0, for_task_version=1)
    assert "MissingPage" in exc.value.report.kinds()
    assert manager.snapshot(sid).interface_version == 0


def test_components_keyed_to_a_missing_page_refused(manager):
    sid = new_session(manager)
    manager.commit_task(sid, one_page_plan(), base_version=0)
    nav, pages, comps = interface_for(sid)
    comps["ps-ghost"] = [TitleComponentConfig(value="?", level=2)]
    with pytest.raises(DualityViolated) as exc:
        manager.commit_interface(sid, nav, pages, comps, base_version=0, for_task_version=1)
    assert "DanglingComponentRef" in exc.value.report.kinds()


def test_commit_interface_validates_documents(manager):
    sid = new_session(manager)
    manager.commit_task(sid, one_page_plan(), base_version=0)
    nav, pages, comps = interface_for(sid)
    comps["ps-1"].append(TitleComponentConfig(value="Bad", level=9))
    with pytest.raises(ValidationFailed):
        manager.commit_interface(sid, nav, pages, comps, base_version=0, for_task_version=1)


def test_audit_retention_is_bounded(manager):
    sid = new_session(manager)
    for version in range(12):
        manager.commit_task(sid, one_page_plan(), base_version=version)
    audit = manager._get(sid).task_audit
    assert len(audit) == VERSION_RETENTION
    assert [v for v, _ in audit] == list(range(12 - VERSION_RETENTION, 12))


# --- stage policy ------------------------------------------------------------------


def test_forward_one_step_at_a_time(manager):
    sid = new_session(manager)
    walk = [TaskStage.Empathize, TaskStage.Plan, TaskStage.Explore,
            TaskStage.Refine, TaskStage.Duet]
    for stage in walk:
        assert manager.advance_stage(sid, stage) == stage
    assert manager.snapshot(sid).stage == TaskStage.Duet


def test_skipping_ahead_refused(manager):
    sid = new_session(manager)
    with pytest.raises(IllegalTransition):
        manager.advance_stage(sid, TaskStage.Plan)
    assert manager.snapshot(sid).stage == TaskStage.Define


def test_backtracking_is_free_and_marked(manager):
    sid = new_session(manager)
    for stage in (TaskStage.Empathize, TaskStage.Plan, TaskStage.Explore):
        manager.advance_stage(sid, stage)
    manager.advance_stage(sid, TaskStage.Define)
    last = manager.snapshot(sid).history[-1]
    assert last.kind == "stage_change"
    assert last.payload == {"from": "Explore", "to": "Define", "backtrack": True}


def test_staying_put_is_not_a_transition(manager):
    sid = new_session(manager)
    with pytest.raises(IllegalTransition):
        manager.advance_stage(sid, TaskStage.Define)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=5), min_size=1, max_size=20))
def test_any_recorded_stage_walk_is_legal(targets):
    manager = ContextManager(clock=FakeClock(), id_factory=SequentialIdFactory())
    sid = new_session(manager)
    order = list(TaskStage)
    current = 0
    for t in targets:
        try:
            manager.advance_stage(sid, order[t])
        except IllegalTransition:
            continue
        current = t
    # Replaying the log must show only single forward steps or backtracks.
    idx = 0
    for record in manager.snapshot(sid).history:
        if record.kind != "stage_change":
            continue
        nxt = order.index(TaskStage(record.payload["to"]))
        assert nxt == idx + 1 or nxt < idx
        assert record.payload["backtrack"] is (nxt < idx)
        idx = nxt
    assert idx == current


# --- persistence doc ------------------------------------------------------------------


def test_session_doc_round_trips_bit_for_bit(manager):
    sid = committed_session(manager)
    manager.record_action(sid, "select",
                          target=ActionTarget(pageStateId="ps-1", valueKey="transport"),
                          payload={"value": "a"})
    doc = manager.session_doc(sid)
    other = ContextManager(clock=FakeClock(), id_factory=SequentialIdFactory())
    assert other.restore_session(doc) == sid
    assert other.session_hash(sid) == manager.session_hash(sid)
    assert serialize(other.session_doc(sid)) == serialize(doc)


def test_restored_session_keeps_working(manager):
    sid = committed_session(manager)
    doc = manager.session_doc(sid)
    other = ContextManager(clock=FakeClock(), id_factory=SequentialIdFactory())
    other.restore_session(doc)
    other.commit_task(sid, one_page_plan(), base_version=1)
    assert other.snapshot(sid).task_version == 2
    assert manager.snapshot(sid).task_version == 1


def test_random_histories_stay_gapless(manager):
    rng = random.Random(13)
    sid = committed_session(manager)
    for _ in range(120):
        roll = rng.random()
        if roll < 0.5:
            manager.record_action(sid, rng.choice(["navigate", "reorder", "confirm"]))
        elif roll < 0.8:
            manager.record_action(sid, "agent_search", actor="agent")
        else:
            snap = manager.snapshot(sid)
            manager.commit_task(sid, one_page_plan(), base_version=snap.task_version)
    seqs = [r.seq for r in manager.snapshot(sid).history]
    assert seqs == list(range(1, len(seqs) + 1))
