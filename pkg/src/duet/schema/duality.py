"""Structural agreement between a plan and the interface built from it.

The rule set:
- every subtask that owns a page and is not of type summary/confirmation
  must appear in navigation exactly once, and nothing else may appear;
- every live PageState must belong to some subtask and agree on page type;
- every component that points at a page must point at a live one.

Violations are report entries, never exceptions: the caller decides whether
an imperfect interface is acceptable mid-loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, List

from .types import Navigation, PageState, TaskDecomposition

# Pages of these types are deliberately kept out of the menu.
NON_NAVIGABLE_PAGE_TYPES = frozenset({"summary", "confirmation"})

MISSING_PAGE = "MissingPage"
ORPHAN_PAGE = "OrphanPage"
ORPHAN_PAGE_STATE = "OrphanPageState"
DANGLING_COMPONENT_REF = "DanglingComponentRef"
PAGE_TYPE_MISMATCH = "PageTypeMismatch"


@dataclass(frozen=True)
class DualityEntry:
    kind: str
    page_state_id: str
    detail: str = ""


@dataclass
class DualityReport:
    entries: List[DualityEntry] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not self.entries

    def kinds(self) -> List[str]:
        return [e.kind for e in self.entries]

    def __str__(self) -> str:
        if self.empty:
            return "duality holds"
        return "; ".join(f"{e.kind}({e.page_state_id})" for e in self.entries)


def navigable_page_state_ids(td: TaskDecomposition) -> set:
    return {
        s.page_state_id
        for s in td.subtasks
        if s.page_state_id is not None and s.page_type not in NON_NAVIGABLE_PAGE_TYPES
    }


def check_duality(
    td: TaskDecomposition,
    nav: Navigation,
    pages: Iterable[PageState],
    components: Iterable[Any] = (),
) -> DualityReport:
    pages = list(pages)
    components = list(components)
    entries: List[DualityEntry] = []

    navigable = navigable_page_state_ids(td)
    nav_ids = [p.pageStateId for g in nav.pageGroups for p in g.pages]
    nav_id_set = set(nav_ids)

    for psid in sorted(navigable - nav_id_set):
        entries.append(DualityEntry(MISSING_PAGE, psid, "subtask has no navigation entry"))
    for psid in sorted(nav_id_set - navigable):
        entries.append(DualityEntry(ORPHAN_PAGE, psid, "navigation entry without a matching subtask"))

    owner_by_psid = {s.page_state_id: s for s in td.subtasks if s.page_state_id is not None}
    live_page_ids = {p.pageStateId for p in pages}

    for page in sorted(pages, key=lambda p: p.pageStateId):
        owner = owner_by_psid.get(page.pageStateId)
        if owner is None:
            entries.append(DualityEntry(ORPHAN_PAGE_STATE, page.pageStateId,
                                        "page state not claimed by any subtask"))
        elif owner.page_type != page.pageType:
            entries.append(DualityEntry(PAGE_TYPE_MISMATCH, page.pageStateId,
                                        f"subtask says {owner.page_type!r}, page says {page.pageType!r}"))

    refs = []
    for comp in components:
        psid = getattr(comp, "pageStateId", None)
        if psid is not None and psid not in live_page_ids:
            refs.append(psid)
    for psid in sorted(refs):
        entries.append(DualityEntry(DANGLING_COMPONENT_REF, psid,
                                    "component points at a page state that does not exist"))

    return DualityReport(entries=entries)
