from .extraction import extract_json
from .gateway import (
    BACKOFF_SCHEDULE_S,
    AttemptRecord,
    Gateway,
    GatewayBudget,
    GatewayResult,
    repair_suffix,
)
from .providers import (
    CompletionProvider,
    RemoteProvider,
    ScriptedProvider,
    fingerprint,
    load_fixture_dir,
    load_fixture_files,
    scripted_provider,
)
from .templates import RESPONSE_SCHEMAS, TEMPLATE_IDS, PromptTemplate, assemble, get_template

__all__ = [name for name in dir() if not name.startswith("_")]
