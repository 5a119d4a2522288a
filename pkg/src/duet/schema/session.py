"""Session-level wire types: stages and the action log.

These cross the HTTP boundary (and feed the UI), so they live with the rest
of the wire contract and ship in the schema bundle.
"""

from __future__ import annotations

from enum import Enum
from typing import Any, Dict, Literal, Optional

from pydantic import Field

from .types import WireModel


class TaskStage(str, Enum):
    Define = "Define"
    Empathize = "Empathize"
    Plan = "Plan"
    Explore = "Explore"
    Refine = "Refine"
    Duet = "Duet"


STAGE_ORDER: tuple[TaskStage, ...] = (
    TaskStage.Define,
    TaskStage.Empathize,
    TaskStage.Plan,
    TaskStage.Explore,
    TaskStage.Refine,
    TaskStage.Duet,
)


def stage_index(stage: TaskStage) -> int:
    return STAGE_ORDER.index(stage)


ActionKind = Literal[
    # user-side
    "input", "select", "click", "slide", "pick_date", "reorder",
    "favorite", "confirm", "navigate",
    # engine-side
    "agent_search", "agent_recommend", "agent_commit_task",
    "agent_commit_interface", "stage_change", "loop_failed",
]

USER_KINDS = frozenset({
    "input", "select", "click", "slide", "pick_date", "reorder",
    "favorite", "confirm", "navigate", "stage_change",
})

AGENT_KINDS = frozenset({
    "agent_search", "agent_recommend", "agent_commit_task",
    "agent_commit_interface", "stage_change", "loop_failed",
})


class ActionTarget(WireModel):
    """Where on the interface an action landed."""

    pageStateId: Optional[str] = None
    componentId: Optional[str] = None
    valueKey: Optional[str] = None


class ActionRecord(WireModel):
    """One committed entry of the session log. seq and at are engine-assigned."""

    seq: int
    actor: Literal["user", "agent"]
    kind: ActionKind
    target: Optional[ActionTarget] = None
    payload: Dict[str, Any] = Field(default_factory=dict)
    at: int
