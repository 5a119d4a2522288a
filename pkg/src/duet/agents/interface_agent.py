"""Interface-side agent: mirrors the plan as navigation, pages, components.

Generation is proposed through the gateway, then disposed by rule:
- navigation is accepted only if it covers exactly the navigable subtasks
  within the 3x5 caps, otherwise a deterministic grouping heuristic wins;
- page states are forced to the owning subtask's identity and carry folded
  user state (values, favorites, confirmations) plus fetched items;
- CardView booleans and attribute counts are enforced deterministically,
  whatever the provider said.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..context import ContextSnapshot
from ..errors import CapacityExceeded, DualityViolated, ExhaustedAttempts, ValidationFailed
from ..gateway import Gateway, GatewayBudget
from ..schema import (
    ActionButtonConfig,
    ActionRecord,
    BasicItem,
    CardViewConfig,
    DatePickerConfig,
    InputFieldConfig,
    Navigation,
    NavigationPage,
    PageGroup,
    PageState,
    SelectionConfig,
    SliderConfig,
    Subtask,
    TaskDecomposition,
    TitleComponentConfig,
    canonical_text,
    check_duality,
    validate,
)
from ..schema.duality import NON_NAVIGABLE_PAGE_TYPES
from .catalog import Catalog
from .intent import VALUE_KINDS

logger = logging.getLogger(__name__)

NAV_CAPACITY = 15  # 3 groups x 5 pages

# Checked in order against the lowercased subtask names of a group.
ICON_KEYWORDS: Tuple[Tuple[str, str], ...] = (
    ("flight", "flight"), ("plane", "flight"), ("fly", "flight"),
    ("train", "train"),
    ("car", "car"), ("drive", "car"),
    ("hotel", "hotel"), ("accommodation", "hotel"), ("stay", "hotel"),
    ("lodg", "hotel"), ("airbnb", "hotel"),
    ("restaurant", "food"), ("dining", "food"), ("food", "food"),
    ("attraction", "map"), ("itinerary", "map"), ("guide", "map"), ("explore", "map"),
    ("budget", "wallet"), ("price", "wallet"), ("pay", "wallet"),
    ("date", "calendar"), ("schedule", "calendar"), ("calendar", "calendar"),
    ("prefer", "settings"), ("question", "chat"), ("clarif", "chat"),
    ("summary", "list"),
    ("confirm", "ticket"), ("book", "ticket"),
    ("search", "search"), ("find", "search"),
)
FALLBACK_ICON = "compass"

# Favorites turn on when the model's concepts intersect these.
FAVORITE_CONCEPTS = frozenset({"booking", "saving", "products"})
# Sorting turns on when any field name contains one of these.
SORT_FIELD_MARKERS = ("price", "rating", "date")

PREFERRED_ATTRIBUTES = ("title", "price", "rating", "date", "description")


@dataclass
class InterfaceProposal:
    navigation: Navigation
    pages: Dict[str, PageState] = field(default_factory=dict)
    components: Dict[str, List[Any]] = field(default_factory=dict)


def navigable_subtasks(td: TaskDecomposition) -> List[Subtask]:
    return [
        s for s in td.subtasks
        if s.page_state_id is not None and s.page_type not in NON_NAVIGABLE_PAGE_TYPES
    ]


def pick_icon(subtasks: Sequence[Subtask]) -> str:
    text = " ".join(s.subtask_name for s in subtasks).lower()
    for needle, icon in ICON_KEYWORDS:
        if needle in text:
            return icon
    return FALLBACK_ICON


def _dependency_chains(subtasks: List[Subtask]) -> List[List[Subtask]]:
    """Connected components over dependency edges, ordered by earliest step."""
    parent = {s.subtask_id: s.subtask_id for s in subtasks}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    ids = set(parent)
    for s in subtasks:
        for dep in s.dependent_subtasks:
            if dep in ids:
                union(s.subtask_id, dep)

    chains: Dict[str, List[Subtask]] = {}
    for s in subtasks:
        chains.setdefault(find(s.subtask_id), []).append(s)
    ordered = sorted(chains.values(), key=lambda chain: min(s.step_id for s in chain))
    for chain in ordered:
        chain.sort(key=lambda s: s.step_id)
    return ordered


def heuristic_navigation(td: TaskDecomposition) -> Navigation:
    subtasks = navigable_subtasks(td)
    if not subtasks:
        return Navigation(pageGroups=[], initialGroupIndex=0)
    if len(subtasks) > NAV_CAPACITY:
        raise CapacityExceeded(len(subtasks), NAV_CAPACITY)

    blocks: List[List[Subtask]] = []
    for chain in _dependency_chains(subtasks):
        for i in range(0, len(chain), 5):
            blocks.append(chain[i:i + 5])

    while len(blocks) > 3:
        for i in range(len(blocks) - 1):
            if len(blocks[i]) + len(blocks[i + 1]) <= 5:
                blocks[i:i + 2] = [blocks[i] + blocks[i + 1]]
                break
        else:
            flat = [s for block in blocks for s in block]
            blocks = [flat[i:i + 5] for i in range(0, len(flat), 5)]
            break

    groups = [
        PageGroup(
            groupname=block[0].subtask_name,
            groupicon=pick_icon(block),
            pages=[NavigationPage(pagename=s.subtask_name, pageStateId=s.page_state_id)
                   for s in block],
        )
        for block in blocks
    ]
    return Navigation(pageGroups=groups, initialGroupIndex=0)


def _navigation_for(td: TaskDecomposition, gateway: Gateway,
                    budget: Optional[GatewayBudget]) -> Navigation:
    wanted = {s.page_state_id for s in navigable_subtasks(td)}
    try:
        proposal: Navigation = gateway.complete_validated(
            "navigation_gen", {"task_decomposition_json": canonical_text(td)}, budget).value
        got = {p.pageStateId for g in proposal.pageGroups for p in g.pages}
        if got == wanted:
            return proposal
        logger.info("navigation proposal covers %d of %d pages; using heuristic",
                    len(got & wanted), len(wanted))
    except ExhaustedAttempts:
        logger.info("navigation proposal never validated; using heuristic")
    return heuristic_navigation(td)


# --- CardView rules ----------------------------------------------------------

def deterministic_attributes(fields: Sequence[str]) -> List[str]:
    chosen: List[str] = [f for f in PREFERRED_ATTRIBUTES if f in fields]
    for f in sorted(fields):
        if len(chosen) >= 5:
            break
        if f not in chosen:
            chosen.append(f)
    for pad in ("id", "title"):
        if len(chosen) >= 3:
            break
        if pad not in chosen:
            chosen.append(pad)
    return chosen[:5]


def cardview_rules(fields: Sequence[str], concepts: Sequence[str]) -> Tuple[bool, bool]:
    favorites = any(c in FAVORITE_CONCEPTS for c in concepts)
    sortable = any(marker in f.lower() for f in fields for marker in SORT_FIELD_MARKERS)
    return favorites, sortable


def cardview_config_for(subtask: Subtask, model_schema: Dict[str, Any],
                        sample_record: Dict[str, Any], gateway: Gateway,
                        budget: Optional[GatewayBudget] = None) -> CardViewConfig:
    fields = list(model_schema.get("fields", []))
    concepts = list(model_schema.get("concepts", []))

    proposal: Optional[CardViewConfig] = None
    try:
        proposal = gateway.complete_validated("cardview_gen", {
            "subtask_name": subtask.subtask_name,
            "data_model_schema_json": canonical_text(model_schema),
            "sample_data_record_json": canonical_text(sample_record),
        }, budget).value
    except ExhaustedAttempts:
        logger.info("cardview proposal never validated; using deterministic pick")

    if proposal is not None and 3 <= len(proposal.displayedAttributes) <= 5 and \
            set(proposal.displayedAttributes) <= set(fields):
        attributes = list(proposal.displayedAttributes)
    else:
        attributes = deterministic_attributes(fields)

    favorites, sortable = cardview_rules(fields, concepts)
    config = CardViewConfig(
        pageStateId=subtask.page_state_id or "",
        itemDataKey="items",
        displayedAttributes=attributes,
        enableFavorites=favorites,
        isSortEnabled=sortable,
    )
    result = validate("CardViewConfig", config)
    if not result.ok:
        raise ValidationFailed(result.issues)
    return result.value


# --- page assembly -----------------------------------------------------------

def _fold_user_state(page: PageState, psid: str, history: Sequence[ActionRecord]) -> None:
    values: Dict[str, Any] = dict(page.stateDetail.get("values", {}))
    favorites: Dict[str, bool] = {}
    confirmed: Optional[str] = None
    for record in history:
        if record.target is None or record.target.pageStateId != psid:
            continue
        if record.kind in VALUE_KINDS and record.target.valueKey:
            values[record.target.valueKey] = record.payload.get("value")
        elif record.kind == "favorite":
            item_id = record.payload.get("itemId")
            if item_id is not None:
                favorites[str(item_id)] = bool(record.payload.get("favorited", True))
        elif record.kind == "confirm":
            confirmed = record.payload.get("itemId", confirmed)
    if values:
        page.stateDetail["values"] = values
    on = sorted(item_id for item_id, keep in favorites.items() if keep)
    if on:
        page.stateDetail["favorites"] = on
    if confirmed is not None:
        page.stateDetail["confirmed"] = confirmed


def _item_docs(items: Sequence[BasicItem]) -> List[Dict[str, Any]]:
    docs = []
    for item in items:
        doc = item.model_dump(mode="json")
        if item.image_query and "image_url" not in doc:
            doc["image_url"] = f"placeholder://{item.image_query}"
        docs.append(doc)
    return docs


def _build_page(snapshot: ContextSnapshot, subtask: Subtask, items: List[BasicItem],
                gateway: Gateway, budget: Optional[GatewayBudget]) -> PageState:
    psid = subtask.page_state_id
    item_docs = _item_docs(items)
    try:
        page: PageState = gateway.complete_validated("page_state_gen", {
            "subtask_json": canonical_text(subtask),
            "api_data_json": canonical_text(item_docs),
        }, budget).value
    except ExhaustedAttempts:
        page = PageState(sessionId=snapshot.session_id, pageStateId=psid,
                         pageType=subtask.page_type, stateDetail={})

    page.sessionId = snapshot.session_id
    page.pageStateId = psid
    page.pageType = subtask.page_type
    page.lastUpdated = None
    if item_docs:
        page.stateDetail["items"] = item_docs
    _fold_user_state(page, psid, snapshot.history)
    return page


_FIELD_BUILDERS = {
    "selection": lambda f: SelectionConfig(label=f.get("label", ""), options=list(f.get("options", [])),
                                           valueKey=f["valueKey"]),
    "input_field": lambda f: InputFieldConfig(label=f.get("label", ""), placeholder=f.get("placeholder", ""),
                                              valueKey=f["valueKey"]),
    "slider": lambda f: SliderConfig(label=f.get("label", ""), min=f.get("min", 0), max=f.get("max", 100),
                                     step=f.get("step", 1), valueKey=f["valueKey"], unit=f.get("unit", "")),
    "date_picker": lambda f: DatePickerConfig(label=f.get("label", ""), valueKey=f["valueKey"]),
    "action_button": lambda f: ActionButtonConfig(label=f.get("label", ""), actionId=f["actionId"]),
}


def _build_components(subtask: Subtask, page: PageState, catalog: Catalog,
                      gateway: Gateway, budget: Optional[GatewayBudget]) -> List[Any]:
    configs: List[Any] = [TitleComponentConfig(value=subtask.subtask_name, level=2)]

    for f in page.stateDetail.get("fields", []):
        builder = _FIELD_BUILDERS.get(f.get("component"))
        if builder is None:
            logger.warning("page %s: unknown field component %r", page.pageStateId, f.get("component"))
            continue
        try:
            configs.append(builder(f))
        except KeyError as exc:
            logger.warning("page %s: field missing %s", page.pageStateId, exc)

    items = page.stateDetail.get("items", [])
    if items:
        fields = sorted({key for doc in items for key in doc})
        concepts: List[str] = sorted({
            c for api in subtask.matched_apis if catalog.has_api(api.api_name)
            for c in catalog.api(api.api_name).concepts
        })
        model_schema = {"item": "BasicItem", "fields": fields, "concepts": concepts}
        configs.append(cardview_config_for(subtask, model_schema, items[0], gateway, budget))

    if page.pageType == "confirmation" and not any(
            getattr(c, "componentType", "") == "action_button" for c in configs):
        configs.append(ActionButtonConfig(label="Confirm", actionId="confirm"))
    return configs


def interface_agent_step(snapshot: ContextSnapshot, gateway: Gateway, catalog: Catalog,
                         service_data: Optional[Dict[str, List[BasicItem]]] = None,
                         budget: Optional[GatewayBudget] = None) -> InterfaceProposal:
    td = snapshot.task
    service_data = service_data or {}

    paged = [s for s in td.subtasks if s.page_state_id is not None]
    if len(navigable_subtasks(td)) > NAV_CAPACITY:
        raise CapacityExceeded(len(navigable_subtasks(td)), NAV_CAPACITY)

    navigation = _navigation_for(td, gateway, budget)

    pages: Dict[str, PageState] = {}
    components: Dict[str, List[Any]] = {}
    for subtask in paged:
        psid = subtask.page_state_id
        page = _build_page(snapshot, subtask, service_data.get(psid, []), gateway, budget)
        pages[psid] = page
        components[psid] = _build_components(subtask, page, catalog, gateway, budget)

    flat = [c for configs in components.values() for c in configs]
    report = check_duality(td, navigation, pages.values(), flat)
    if not report.empty:
        raise DualityViolated(report)
    return InterfaceProposal(navigation=navigation, pages=pages, components=components)
