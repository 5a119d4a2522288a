"""Closing-summary agent.

The summary must only point at pages that exist right now, and must carry a
dashboard whenever the session holds quantifiable data. Both rules are
checked deterministically after generation; violations go back through the
gateway as repair context, bounded by the budget.
"""

from __future__ import annotations

import logging
from typing import Any, Dict, List, Optional

from ..context import ContextSnapshot, InterfaceBundle
from ..errors import ExhaustedAttempts, UnresolvableReference
from ..gateway import Gateway, GatewayBudget
from ..schema import SummaryContent, canonical_text

logger = logging.getLogger(__name__)


def live_page_ids(interface: InterfaceBundle) -> set:
    return set(interface.pages)


def quantifiable_exists(interface: InterfaceBundle) -> bool:
    """Any number in folded values, or any priced/confirmed item on a page."""
    for page in interface.pages.values():
        for value in page.stateDetail.get("values", {}).values():
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                return True
        for item in page.stateDetail.get("items", []):
            if isinstance(item, dict) and item.get("price") is not None:
                return True
    return False


def compose_summary_context(snapshot: ContextSnapshot,
                            repair: Optional[List[str]] = None,
                            interface: Optional[InterfaceBundle] = None) -> Dict[str, Any]:
    interface = interface if interface is not None else snapshot.interface
    subtask_names = {s.page_state_id: s.subtask_name
                     for s in snapshot.task.subtasks if s.page_state_id}
    pages = []
    for psid in sorted(interface.pages):
        page = interface.pages[psid]
        entry: Dict[str, Any] = {
            "pageStateId": psid,
            "title": subtask_names.get(psid, psid),
            "pageType": page.pageType,
        }
        for key in ("values", "favorites", "confirmed"):
            if key in page.stateDetail:
                entry[key] = page.stateDetail[key]
        items = page.stateDetail.get("items", [])
        if items:
            entry["itemTitles"] = [i.get("title") for i in items if isinstance(i, dict)][:8]
        pages.append(entry)
    context: Dict[str, Any] = {
        "goal": snapshot.goal,
        "stage": snapshot.stage.value,
        "pages": pages,
    }
    if repair:
        context["repair"] = repair
    return context


def contextual_violations(summary: SummaryContent,
                          interface: InterfaceBundle) -> List[str]:
    violations: List[str] = []
    live = live_page_ids(interface)
    reference_trouble = False
    for block_id, block in (summary.navigationBlocks or {}).items():
        if block.pageStateId not in live:
            violations.append(
                f"navigationBlocks[{block_id}] references nonexistent page {block.pageStateId}")
            reference_trouble = True
    if quantifiable_exists(interface):
        if summary.dashboardConfig is None or not summary.dashboardConfig.items:
            violations.append("dashboardConfig must be non-empty: session holds quantifiable data")
    if reference_trouble:
        violations.insert(0, "references")
    return violations


def summary_agent_step(snapshot: ContextSnapshot, gateway: Gateway,
                       budget: Optional[GatewayBudget] = None,
                       interface_override: Optional[InterfaceBundle] = None) -> SummaryContent:
    budget = budget or GatewayBudget()
    interface = interface_override if interface_override is not None else snapshot.interface
    repair: Optional[List[str]] = None
    last_violations: List[str] = []

    for _ in range(budget.max_attempts):
        context = compose_summary_context(snapshot, repair, interface=interface)
        summary: SummaryContent = gateway.complete_validated(
            "summary_gen", {"context_json": canonical_text(context)}, budget).value
        violations = contextual_violations(summary, interface)
        if not violations:
            return summary
        last_violations = violations
        repair = [v for v in violations if v != "references"]
        logger.info("summary violated: %s; regenerating", repair)

    if "references" in last_violations:
        raise UnresolvableReference("; ".join(v for v in last_violations if v != "references"))
    raise ExhaustedAttempts(last_violations)
