"""Wire-visible data types.

Two naming conventions coexist on purpose: the task layer uses snake_case
field names and the interface layer uses camelCase. Both are part of the
published JSON contract (see schemas/), so neither side is normalized.

Models are deliberately structural: cross-field rules (group caps, step_id
numbering, dependency cycles, ...) live in registry.check_invariants so that
broken values can still be constructed, inspected, and reported on.
"""

from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

# Closed page vocabulary. Unknown values are rejected at the structural pass.
PageType = Literal["list", "detail", "form", "summary", "confirmation"]
PAGE_TYPES = ("list", "detail", "form", "summary", "confirmation")


class WireModel(BaseModel):
    """Base for every wire type: unknown fields are kept and echoed back."""

    model_config = ConfigDict(extra="allow")


# --- task layer (snake_case) -------------------------------------------------

class AvailableAPI(WireModel):
    """A single backend call a subtask wants executed."""

    api_name: str
    payload: Dict[str, Any] = Field(default_factory=dict)


class Subtask(WireModel):
    """One step of the plan, with the calls it makes and the page it owns."""

    subtask_name: str
    subtask_id: str
    step_id: int
    description: Optional[str] = None
    matched_apis: List[AvailableAPI] = Field(default_factory=list)
    dependent_subtasks: List[str] = Field(default_factory=list)
    page_type: Optional[PageType] = None
    page_state_id: Optional[str] = None


class TaskDecomposition(WireModel):
    """The whole plan: the user's goal plus an ordered list of subtasks."""

    goal: str
    subtasks: List[Subtask] = Field(default_factory=list)


class PriceDetail(WireModel):
    """One line of an itemized price, e.g. label "Adult" amount 120.0."""

    label: str
    amount: float


class AttributeDetail(WireModel):
    """Extra display field as a key/value pair."""

    key: str
    value: Union[str, int, float]


class BasicItem(WireModel):
    """Normalized result row shown in list components."""

    id: Union[str, int]
    title: str
    description: Optional[str] = None
    tags: List[str] = Field(default_factory=list)
    price: Optional[Union[float, List[PriceDetail]]] = None
    extended_attributes: List[AttributeDetail] = Field(default_factory=list)
    image_query: Optional[str] = None


# --- interface layer, navigation (camelCase) ---------------------------------

class NavigationPage(WireModel):
    """Menu entry pointing at one page state."""

    pagename: str
    pageStateId: str


class PageGroup(WireModel):
    """Labeled cluster of menu entries."""

    groupname: str
    groupicon: str
    pages: List[NavigationPage] = Field(default_factory=list)


class Navigation(WireModel):
    """Top-level menu: at most 3 groups of at most 5 pages each."""

    pageGroups: List[PageGroup] = Field(default_factory=list)
    initialGroupIndex: int = 0


# --- interface layer, pages --------------------------------------------------

class PageState(WireModel):
    """Everything needed to render one page."""

    sessionId: str
    pageStateId: str
    pageType: PageType
    stateDetail: Dict[str, Any] = Field(default_factory=dict)
    lastUpdated: Optional[int] = None


# --- interface layer, components ----------------------------------------------
# Each config carries a componentType discriminator with a default, so
# documents written without it still parse against the concrete schema.

class CardViewConfig(WireModel):
    """List-of-cards renderer bound to an item array in stateDetail."""

    componentType: Literal["card_view"] = "card_view"
    pageStateId: str
    itemDataKey: str
    displayedAttributes: List[str] = Field(default_factory=list)
    enableFavorites: bool = False
    isSortEnabled: bool = False


class PriceComponentConfig(WireModel):
    componentType: Literal["price"] = "price"
    value: Union[float, str]
    prefix: str = "USD"


class TitleComponentConfig(WireModel):
    componentType: Literal["title"] = "title"
    value: str
    level: int = 3


class InputFieldConfig(WireModel):
    """Free-text entry; writes stateDetail.values[valueKey]."""

    componentType: Literal["input_field"] = "input_field"
    label: str
    placeholder: str = ""
    valueKey: str


class SelectionConfig(WireModel):
    """Single-choice picker over a closed option list."""

    componentType: Literal["selection"] = "selection"
    label: str
    options: List[Any] = Field(default_factory=list)
    valueKey: str


class ActionButtonConfig(WireModel):
    componentType: Literal["action_button"] = "action_button"
    label: str
    actionId: str


class SliderConfig(WireModel):
    componentType: Literal["slider"] = "slider"
    label: str
    min: float
    max: float
    step: float = 1
    valueKey: str
    unit: str = ""


class DatePickerConfig(WireModel):
    componentType: Literal["date_picker"] = "date_picker"
    label: str
    valueKey: str


class DashboardItem(WireModel):
    """One editable figure on a dashboard."""

    id: str
    label: str
    value: Any
    type: Literal["number", "string", "date"]
    unit: Optional[str] = None
    # Shape of the edit affordance is not pinned down yet; kept opaque.
    editOptions: Optional[Dict[str, Any]] = None


class DashboardConfig(WireModel):
    componentType: Literal["dashboard"] = "dashboard"
    items: List[DashboardItem] = Field(default_factory=list)


class NavigationCardConfig(WireModel):
    """Inline jump card linking to another page."""

    componentType: Literal["navigation_card"] = "navigation_card"
    pageStateId: str
    title: str
    summary: str = ""


ComponentConfig = Union[
    CardViewConfig,
    PriceComponentConfig,
    TitleComponentConfig,
    InputFieldConfig,
    SelectionConfig,
    ActionButtonConfig,
    SliderConfig,
    DatePickerConfig,
    DashboardConfig,
    NavigationCardConfig,
]

COMPONENT_TYPES: Dict[str, type] = {
    "card_view": CardViewConfig,
    "price": PriceComponentConfig,
    "title": TitleComponentConfig,
    "input_field": InputFieldConfig,
    "selection": SelectionConfig,
    "action_button": ActionButtonConfig,
    "slider": SliderConfig,
    "date_picker": DatePickerConfig,
    "dashboard": DashboardConfig,
    "navigation_card": NavigationCardConfig,
}


# --- summary / handoff ---------------------------------------------------------

class ViewNavigationBlockConfig(WireModel):
    """Target of one {{nav-block:...}} placeholder."""

    pageStateId: str
    title: str


class SummaryContent(WireModel):
    """Closing summary: markdown with jump placeholders plus a dashboard."""

    dashboardConfig: Optional[DashboardConfig] = None
    content: str
    navigationBlocks: Optional[Dict[str, ViewNavigationBlockConfig]] = None


def parse_component(doc: Dict[str, Any]) -> Any:
    """Instantiate the right config class from a componentType-bearing dict."""
    kind = doc.get("componentType")
    cls = COMPONENT_TYPES.get(kind)
    if cls is None:
        raise ValueError(f"unknown componentType: {kind!r}")
    return cls.model_validate(doc)
