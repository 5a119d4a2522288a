from .catalog import ApiDefinition, Catalog, PlatformDefinition, TaskDefinition, load_catalog
from .intent import IntentSignal, infer_signals, latest_values, window_since_last_task_commit
from .interface_agent import (
    NAV_CAPACITY,
    InterfaceProposal,
    cardview_config_for,
    cardview_rules,
    deterministic_attributes,
    heuristic_navigation,
    interface_agent_step,
    navigable_subtasks,
    pick_icon,
)
from .service_agent import resolve_images, service_agent_fetch
from .summary_agent import (
    compose_summary_context,
    contextual_violations,
    quantifiable_exists,
    summary_agent_step,
)
from .task_agent import (
    apply_reorder,
    compose_goal_context,
    latest_reorder,
    renumber_steps,
    subtask_refine,
    task_agent_step,
)

__all__ = [name for name in dir() if not name.startswith("_")]
