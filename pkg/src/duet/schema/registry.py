"""Total validation over the wire types.

validate() never raises for document problems: structural errors from the
typed pass and named invariant violations both come back as issue lists.
Only an unregistered schema id (a caller bug) raises.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import Annotated, Any, Callable, Dict, List, Optional, Union

from pydantic import Field, TypeAdapter, ValidationError

from ..errors import UnknownSchema
from .icons import normalize_icon
from .session import ActionRecord, ActionTarget
from .types import (
    AttributeDetail,
    AvailableAPI,
    BasicItem,
    CardViewConfig,
    ComponentConfig,
    DashboardConfig,
    DashboardItem,
    Navigation,
    NavigationPage,
    PageGroup,
    PageState,
    PriceDetail,
    SummaryContent,
    Subtask,
    TaskDecomposition,
    TitleComponentConfig,
    ViewNavigationBlockConfig,
)

NAV_BLOCK_RE = re.compile(r"\{\{nav-block:([^}]+)\}\}")

DiscriminatedComponent = Annotated[ComponentConfig, Field(discriminator="componentType")]

_ADAPTERS: dict[str, TypeAdapter] = {
    "TaskDecomposition": TypeAdapter(TaskDecomposition),
    "Subtask": TypeAdapter(Subtask),
    "AvailableAPI": TypeAdapter(AvailableAPI),
    "BasicItem": TypeAdapter(BasicItem),
    "BasicItemList": TypeAdapter(List[BasicItem]),
    "PriceDetail": TypeAdapter(PriceDetail),
    "AttributeDetail": TypeAdapter(AttributeDetail),
    "Navigation": TypeAdapter(Navigation),
    "PageGroup": TypeAdapter(PageGroup),
    "NavigationPage": TypeAdapter(NavigationPage),
    "PageState": TypeAdapter(PageState),
    "ComponentConfig": TypeAdapter(DiscriminatedComponent),
    "CardViewConfig": TypeAdapter(CardViewConfig),
    "TitleComponentConfig": TypeAdapter(TitleComponentConfig),
    "DashboardConfig": TypeAdapter(DashboardConfig),
    "DashboardItem": TypeAdapter(DashboardItem),
    "SummaryContent": TypeAdapter(SummaryContent),
    "ViewNavigationBlockConfig": TypeAdapter(ViewNavigationBlockConfig),
    "ActionRecord": TypeAdapter(ActionRecord),
    "ActionTarget": TypeAdapter(ActionTarget),
    # Free-form JSON container; used where raw generated data is passed
    # through before standardization.
    "JsonDocument": TypeAdapter(Union[Dict[str, Any], List[Any]]),
}

SCHEMA_IDS = tuple(sorted(_ADAPTERS))


@dataclass(frozen=True)
class ValidationIssue:
    kind: str                 # FieldMissing | TypeMismatch | InvariantViolated
    path: str                 # e.g. "subtasks[2].step_id"; "" for the root
    name: Optional[str] = None  # invariant name when kind is InvariantViolated
    message: str = ""

    def __str__(self) -> str:
        label = self.name or self.kind
        where = self.path or "<root>"
        return f"{label} at {where}: {self.message}" if self.message else f"{label} at {where}"


@dataclass
class ValidationResult:
    ok: bool
    value: Any
    issues: List[ValidationIssue] = field(default_factory=list)


def invariant(name: str, path: str, message: str = "") -> ValidationIssue:
    return ValidationIssue(kind="InvariantViolated", path=path, name=name, message=message)


def _format_loc(loc: tuple) -> str:
    parts: list[str] = []
    for piece in loc:
        if isinstance(piece, int):
            parts.append(f"[{piece}]")
        else:
            if parts:
                parts.append(f".{piece}")
            else:
                parts.append(str(piece))
    return "".join(parts)


def _structural_issues(exc: ValidationError) -> List[ValidationIssue]:
    issues = []
    for err in exc.errors():
        kind = "FieldMissing" if err["type"] == "missing" else "TypeMismatch"
        issues.append(ValidationIssue(kind=kind, path=_format_loc(err["loc"]), message=err["msg"]))
    return issues


# --- invariant checkers ------------------------------------------------------

def _check_subtask(s: Subtask, path: str = "") -> List[ValidationIssue]:
    issues = []
    if (s.page_type is None) != (s.page_state_id is None):
        issues.append(invariant("page-type-pairing", path,
                                "page_type and page_state_id must be present together"))
    return issues


def _check_task_decomposition(td: TaskDecomposition) -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    steps = [s.step_id for s in td.subtasks]
    if steps != list(range(1, len(steps) + 1)):
        issues.append(invariant("contiguous-step-ids", "subtasks",
                                f"step_id sequence {steps} is not 1..{len(steps)} in order"))
    ids = [s.subtask_id for s in td.subtasks]
    if len(set(ids)) != len(ids):
        issues.append(invariant("unique-subtask-ids", "subtasks"))
    known = set(ids)
    for i, s in enumerate(td.subtasks):
        issues.extend(_check_subtask(s, f"subtasks[{i}]"))
        for j, dep in enumerate(s.dependent_subtasks):
            if dep not in known:
                issues.append(invariant("dependency-exists", f"subtasks[{i}].dependent_subtasks[{j}]",
                                        f"unknown subtask_id {dep!r}"))
    psids = [s.page_state_id for s in td.subtasks if s.page_state_id is not None]
    if len(set(psids)) != len(psids):
        issues.append(invariant("unique-page-state-ids", "subtasks"))
    if _has_dependency_cycle(td):
        issues.append(invariant("dependency-acyclic", "subtasks"))
    return issues


def _has_dependency_cycle(td: TaskDecomposition) -> bool:
    deps = {s.subtask_id: [d for d in s.dependent_subtasks] for s in td.subtasks}
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {sid: WHITE for sid in deps}

    def visit(sid: str) -> bool:
        color[sid] = GRAY
        for d in deps.get(sid, ()):
            if d not in color:
                continue
            if color[d] == GRAY:
                return True
            if color[d] == WHITE and visit(d):
                return True
        color[sid] = BLACK
        return False

    return any(color[sid] == WHITE and visit(sid) for sid in deps)


def _check_navigation(nav: Navigation) -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    for group in nav.pageGroups:
        group.groupicon = normalize_icon(group.groupicon)
    if len(nav.pageGroups) > 3:
        issues.append(invariant("max-3-groups", "pageGroups",
                                f"{len(nav.pageGroups)} groups"))
    for i, group in enumerate(nav.pageGroups):
        if len(group.pages) > 5:
            issues.append(invariant("max-5-pages-per-group", f"pageGroups[{i}].pages",
                                    f"{len(group.pages)} pages"))
    if nav.pageGroups:
        if not (0 <= nav.initialGroupIndex < len(nav.pageGroups)):
            issues.append(invariant("initial-group-index", "initialGroupIndex"))
    elif nav.initialGroupIndex != 0:
        # Empty menus are legal but only index 0 is a sane resting point.
        issues.append(invariant("initial-group-index", "initialGroupIndex"))
    psids = [p.pageStateId for g in nav.pageGroups for p in g.pages]
    if len(set(psids)) != len(psids):
        issues.append(invariant("unique-page-state-ids", "pageGroups"))
    return issues


def _check_page_group(group: PageGroup) -> List[ValidationIssue]:
    group.groupicon = normalize_icon(group.groupicon)
    if len(group.pages) > 5:
        return [invariant("max-5-pages-per-group", "pages", f"{len(group.pages)} pages")]
    return []


def _check_price_detail(pd: PriceDetail, path: str = "") -> List[ValidationIssue]:
    if not math.isfinite(pd.amount) or pd.amount < 0:
        return [invariant("price-amount", path or "amount", f"amount {pd.amount!r}")]
    return []


def _check_attribute_detail(ad: AttributeDetail, path: str = "") -> List[ValidationIssue]:
    if not ad.key:
        return [invariant("nonempty-key", path or "key")]
    return []


def _check_basic_item(item: BasicItem, path: str = "") -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    if isinstance(item.price, list):
        for i, pd in enumerate(item.price):
            issues.extend(_check_price_detail(pd, f"{path}price[{i}]" if path else f"price[{i}]"))
    for i, ad in enumerate(item.extended_attributes):
        issues.extend(_check_attribute_detail(
            ad, f"{path}extended_attributes[{i}]" if path else f"extended_attributes[{i}]"))
    return issues


def _check_basic_item_list(items: List[BasicItem]) -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    seen: set = set()
    for i, item in enumerate(items):
        if item.id in seen:
            issues.append(invariant("unique-item-ids", f"[{i}].id", f"duplicate id {item.id!r}"))
        seen.add(item.id)
        issues.extend(_check_basic_item(item, f"[{i}]."))
    return issues


def _check_cardview(cv: CardViewConfig) -> List[ValidationIssue]:
    n = len(cv.displayedAttributes)
    if not (3 <= n <= 5):
        return [invariant("cardview-attr-count", "displayedAttributes", f"{n} attributes")]
    return []


def _check_title(t: TitleComponentConfig) -> List[ValidationIssue]:
    if not (1 <= t.level <= 6):
        return [invariant("title-level", "level", f"level {t.level}")]
    return []


def _value_matches_kind(value: Any, kind: str) -> bool:
    if kind == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == "string":
        return isinstance(value, str)
    if kind == "date":
        if not isinstance(value, str):
            return False
        for parser in (date.fromisoformat, datetime.fromisoformat):
            try:
                parser(value)
                return True
            except ValueError:
                continue
        return False
    return False


def _check_dashboard_item(di: DashboardItem, path: str = "") -> List[ValidationIssue]:
    if not _value_matches_kind(di.value, di.type):
        return [invariant("dashboard-value-type", f"{path}value" if path else "value",
                          f"value {di.value!r} does not look like a {di.type}")]
    return []


def _check_dashboard(dc: DashboardConfig, path: str = "") -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    for i, item in enumerate(dc.items):
        issues.extend(_check_dashboard_item(item, f"{path}items[{i}]."))
    return issues


def _check_summary(sc: SummaryContent) -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    blocks = sc.navigationBlocks or {}
    for block_id in NAV_BLOCK_RE.findall(sc.content):
        if block_id not in blocks:
            issues.append(invariant("nav-block-placeholders", "content",
                                    f"placeholder {block_id!r} has no navigationBlocks entry"))
    if sc.dashboardConfig is not None:
        issues.extend(_check_dashboard(sc.dashboardConfig, "dashboardConfig."))
    return issues


_CHECKERS: dict[type, Callable[[Any], List[ValidationIssue]]] = {
    TaskDecomposition: _check_task_decomposition,
    Subtask: _check_subtask,
    Navigation: _check_navigation,
    PageGroup: _check_page_group,
    PriceDetail: _check_price_detail,
    AttributeDetail: _check_attribute_detail,
    BasicItem: _check_basic_item,
    CardViewConfig: _check_cardview,
    TitleComponentConfig: _check_title,
    DashboardItem: _check_dashboard_item,
    DashboardConfig: _check_dashboard,
    SummaryContent: _check_summary,
}


def check_invariants(value: Any) -> List[ValidationIssue]:
    """Run the named invariant checks for an already-typed value."""
    if isinstance(value, list):
        if value and isinstance(value[0], BasicItem):
            return _check_basic_item_list(value)
        issues = []
        for i, v in enumerate(value):
            for issue in check_invariants(v):
                issues.append(ValidationIssue(issue.kind, f"[{i}].{issue.path}", issue.name, issue.message))
        return issues
    checker = _CHECKERS.get(type(value))
    return checker(value) if checker else []


def validate(schema_id: str, doc: Any) -> ValidationResult:
    """Validate doc against a registered schema; total over document faults."""
    adapter = _ADAPTERS.get(schema_id)
    if adapter is None:
        raise UnknownSchema(schema_id)
    try:
        value = adapter.validate_python(doc)
    except ValidationError as exc:
        return ValidationResult(ok=False, value=None, issues=_structural_issues(exc))
    issues = check_invariants(value)
    if issues:
        return ValidationResult(ok=False, value=None, issues=issues)
    return ValidationResult(ok=True, value=value, issues=[])
