from .bundle import bundle_documents, bundle_version, write_bundle
from .canonical import canonical_text, parse, parse_json, serialize, sha256_hex, to_jsonable
from .duality import (
    DANGLING_COMPONENT_REF,
    MISSING_PAGE,
    NON_NAVIGABLE_PAGE_TYPES,
    ORPHAN_PAGE,
    ORPHAN_PAGE_STATE,
    PAGE_TYPE_MISMATCH,
    DualityEntry,
    DualityReport,
    check_duality,
    navigable_page_state_ids,
)
from .icons import DEFAULT_ICON, ICON_VOCABULARY, normalize_icon
from .registry import (
    SCHEMA_IDS,
    ValidationIssue,
    ValidationResult,
    check_invariants,
    validate,
)
from .session import (
    AGENT_KINDS,
    STAGE_ORDER,
    USER_KINDS,
    ActionKind,
    ActionRecord,
    ActionTarget,
    TaskStage,
    stage_index,
)
from .types import (
    COMPONENT_TYPES,
    PAGE_TYPES,
    ActionButtonConfig,
    AttributeDetail,
    AvailableAPI,
    BasicItem,
    CardViewConfig,
    ComponentConfig,
    DashboardConfig,
    DashboardItem,
    DatePickerConfig,
    InputFieldConfig,
    Navigation,
    NavigationCardConfig,
    NavigationPage,
    PageGroup,
    PageState,
    PriceComponentConfig,
    PriceDetail,
    SelectionConfig,
    SliderConfig,
    SummaryContent,
    Subtask,
    TaskDecomposition,
    TitleComponentConfig,
    ViewNavigationBlockConfig,
    parse_component,
)

__all__ = [name for name in dir() if not name.startswith("_")]
