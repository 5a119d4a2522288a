"""Plan-side agent: proposes TaskDecomposition revisions.

Proposes via the gateway, then disposes by rule: unknown APIs are dropped,
the user's latest reorder is applied, step_ids are renumbered, and fresh
preference values are folded into the payloads of the subtasks that own the
pages those preferences were expressed on. The snapshot is never mutated;
the orchestrator owns the commit.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional, Sequence, Tuple

from ..context import ContextSnapshot
from ..errors import EmptyPlan, UnknownSubtask, ValidationFailed
from ..gateway import Gateway, GatewayBudget
from ..schema import (
    ActionRecord,
    Subtask,
    TaskDecomposition,
    TaskStage,
    canonical_text,
    stage_index,
    validate,
)
from .catalog import Catalog
from .intent import IntentSignal, infer_signals, latest_values, window_since_last_task_commit

logger = logging.getLogger(__name__)


def compose_goal_context(snapshot: ContextSnapshot, window: Sequence[ActionRecord]) -> str:
    """Goal plus flat key=value context lines (stable order, no escaping)."""
    lines = [snapshot.goal, f"stage={snapshot.stage.value}"]
    flat: Dict[str, object] = {}
    for (_, value_key), record in sorted(latest_values(window).items(), key=lambda kv: kv[1].seq):
        flat[value_key] = record.payload.get("value")
    for key in sorted(flat):
        lines.append(f"{key}={flat[key]}")
    confirmed = []
    for record in window:
        if record.kind == "confirm":
            what = record.payload.get("itemId") or (record.target.pageStateId if record.target else "")
            if what:
                confirmed.append(str(what))
    for what in confirmed:
        lines.append(f"confirmed={what}")
    return "\n".join(lines)


def latest_reorder(history: Sequence[ActionRecord]) -> Optional[ActionRecord]:
    found = None
    for record in history:
        if record.kind == "reorder":
            found = record
    return found


def apply_reorder(subtasks: List[Subtask], new_order: List[str]) -> List[Subtask]:
    """Reseat the listed subtasks in the given relative order; unlisted keep their slots."""
    listed_ids = {sid for sid in new_order}
    by_id = {s.subtask_id: s for s in subtasks if s.subtask_id in listed_ids}
    if not by_id:
        return subtasks
    queue = [by_id[sid] for sid in new_order if sid in by_id]
    result: List[Subtask] = []
    qi = 0
    for s in subtasks:
        if s.subtask_id in by_id:
            result.append(queue[qi])
            qi += 1
        else:
            result.append(s)
    return result


def renumber_steps(subtasks: List[Subtask]) -> None:
    for i, s in enumerate(subtasks):
        s.step_id = i + 1


def _drop_unknown_apis(td: TaskDecomposition, catalog: Catalog) -> None:
    for s in td.subtasks:
        kept = [a for a in s.matched_apis if catalog.has_api(a.api_name)]
        dropped = [a.api_name for a in s.matched_apis if not catalog.has_api(a.api_name)]
        if dropped:
            logger.warning("subtask %s: dropped unknown apis %s", s.subtask_id, dropped)
            s.matched_apis = kept


def _bias_payloads(td: TaskDecomposition, window: Sequence[ActionRecord]) -> None:
    by_psid = {s.page_state_id: s for s in td.subtasks if s.page_state_id}
    for (psid, value_key), record in latest_values(window).items():
        if psid is None:
            continue
        subtask = by_psid.get(psid)
        if subtask is None:
            continue
        for api in subtask.matched_apis:
            api.payload[value_key] = record.payload.get("value")


def task_agent_step(snapshot: ContextSnapshot, gateway: Gateway, catalog: Catalog,
                    budget: Optional[GatewayBudget] = None,
                    ) -> Tuple[TaskDecomposition, List[IntentSignal]]:
    window = window_since_last_task_commit(snapshot.history)
    signals = infer_signals(window)

    bindings = {
        "user_goal_text": compose_goal_context(snapshot, window),
        "list_of_available_apis_json": canonical_text(catalog.api_listing()),
    }
    proposal: TaskDecomposition = gateway.complete_validated(
        "task_decompose", bindings, budget).value

    _drop_unknown_apis(proposal, catalog)
    reorder = latest_reorder(snapshot.history)
    if reorder is not None and reorder.payload.get("newOrder"):
        proposal.subtasks = apply_reorder(proposal.subtasks, list(reorder.payload["newOrder"]))
    renumber_steps(proposal.subtasks)
    _bias_payloads(proposal, window)

    if stage_index(snapshot.stage) >= stage_index(TaskStage.Plan) and not proposal.subtasks:
        raise EmptyPlan(f"no subtasks proposed at stage {snapshot.stage.value}")

    result = validate("TaskDecomposition", proposal)
    if not result.ok:
        raise ValidationFailed(result.issues)
    return result.value, signals


def subtask_refine(snapshot: ContextSnapshot, subtask_id: str, instruction: str,
                   gateway: Gateway, catalog: Catalog,
                   budget: Optional[GatewayBudget] = None) -> Subtask:
    original = next((s for s in snapshot.task.subtasks if s.subtask_id == subtask_id), None)
    if original is None:
        raise UnknownSubtask(subtask_id)
    if not instruction.strip():
        return original.model_copy(deep=True)

    bindings = {
        "existing_subtask_json": canonical_text(original),
        "refinement_instruction_text": instruction,
        "list_of_available_apis_json": canonical_text(catalog.api_listing()),
    }
    refined: Subtask = gateway.complete_validated("subtask_refine", bindings, budget).value

    # Identity and position are not the agent's to change.
    refined.subtask_id = original.subtask_id
    refined.step_id = original.step_id
    if original.page_state_id is not None:
        refined.page_state_id = original.page_state_id
        if refined.page_type is None:
            refined.page_type = original.page_type
    elif refined.page_type is not None:
        refined.page_state_id = f"ps-{subtask_id}"
    kept = [a for a in refined.matched_apis if catalog.has_api(a.api_name)]
    refined.matched_apis = kept

    # Revalidate in the context of the whole plan.
    td = snapshot.task.model_copy(deep=True)
    td.subtasks = [refined if s.subtask_id == subtask_id else s for s in td.subtasks]
    result = validate("TaskDecomposition", td)
    if not result.ok:
        raise ValidationFailed(result.issues)
    return refined
