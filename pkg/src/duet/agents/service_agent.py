"""Data-side agent: fabricates service results as standardized items.

One generation call produces platform-flavored raw data; if that output is
not already a clean item list, a second standardization call reshapes it.
Image lookup is stubbed: items carry image_query text and get a
placeholder://<query> URL instead of a network fetch.
"""

from __future__ import annotations

import logging
from typing import Any, List, Optional, Sequence

from ..errors import UnsupportedPlatform, ValidationFailed
from ..gateway import Gateway, GatewayBudget
from ..schema import AvailableAPI, BasicItem, canonical_text, validate
from ..schema.registry import invariant
from .catalog import Catalog, TaskDefinition

logger = logging.getLogger(__name__)

DATA_MODEL_INSTRUCTIONS = (
    "\nEach item must provide: id, title, description, tags, price "
    "(a number or a list of {label, amount} parts), extended_attributes "
    "(a list of {key, value} pairs), and image_query (an English image "
    "search keyword). Return the items as a JSON array, or as an object "
    'with an "items" array.'
)


def _as_item_list(doc: Any) -> Optional[List[BasicItem]]:
    if isinstance(doc, dict) and isinstance(doc.get("items"), list):
        doc = doc["items"]
    if not isinstance(doc, list):
        return None
    result = validate("BasicItemList", doc)
    return result.value if result.ok else None


def resolve_images(items: Sequence[BasicItem]) -> None:
    for item in items:
        if item.image_query and getattr(item, "image_url", None) is None:
            item.image_url = f"placeholder://{item.image_query}"


def service_agent_fetch(call: AvailableAPI, task_def: TaskDefinition,
                        platforms: Optional[List[str]], gateway: Gateway, catalog: Catalog,
                        budget: Optional[GatewayBudget] = None,
                        expect_nonempty: bool = False) -> List[BasicItem]:
    api = catalog.api(call.api_name)

    if platforms is None:
        platforms = [p for p in api.platforms if p in task_def.supported_platforms]
        if not platforms:
            platforms = task_def.supported_platforms[:2]
    outside = [p for p in platforms if p not in task_def.supported_platforms]
    if outside:
        raise UnsupportedPlatform(f"{outside} not supported by task {task_def.id!r}")

    style = "\n".join(
        f"- {catalog.platforms[p].name}: {catalog.platforms[p].prompt_description}"
        for p in platforms
    )
    if call.payload:
        params = ", ".join(f"{k}={call.payload[k]}" for k in sorted(call.payload))
        user_query = f"{call.api_name} with {params}"
    else:
        user_query = call.api_name

    bindings = {
        "task_description": task_def.prompt_description,
        "style_instructions": style,
        "data_model_instructions": DATA_MODEL_INSTRUCTIONS,
        "user_query": user_query,
    }
    raw = gateway.complete_validated("service_mock", bindings, budget).value

    items = _as_item_list(raw)
    if items is None:
        items = gateway.complete_validated(
            "data_standardize", {"raw_api_data_json": canonical_text(raw)}, budget).value

    if expect_nonempty and not items:
        raise ValidationFailed([invariant("nonempty-items", "", f"{call.api_name} returned no items")])
    resolve_images(items)
    return items
