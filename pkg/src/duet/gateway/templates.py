"""Prompt templates and slot substitution.

Bodies are shipped as package text assets under duet/prompts/. Slots use
single-brace {snake_case} names; substitution is a single pass over the
original body, so injected text is never re-scanned. Double-brace structures
such as {{nav-block:...}} fall outside the slot grammar and pass through
untouched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Dict, Mapping

from ..errors import UnboundSlot

SLOT_RE = re.compile(r"\{([a-z_][a-z0-9_]*)\}")

# template_id -> schema the extracted response must satisfy
RESPONSE_SCHEMAS: Dict[str, str] = {
    "task_decompose": "TaskDecomposition",
    "subtask_refine": "Subtask",
    "navigation_gen": "Navigation",
    "page_state_gen": "PageState",
    "cardview_gen": "CardViewConfig",
    "data_standardize": "BasicItemList",
    "service_mock": "JsonDocument",
    "summary_gen": "SummaryContent",
}

TEMPLATE_IDS = tuple(sorted(RESPONSE_SCHEMAS))


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str
    response_schema: str

    def slots(self) -> set:
        return set(SLOT_RE.findall(self.body))


def _load_body(template_id: str) -> str:
    return resources.files("duet.prompts").joinpath(f"{template_id}.txt").read_text(encoding="utf-8")


_CACHE: Dict[str, PromptTemplate] = {}


def get_template(template_id: str) -> PromptTemplate:
    if template_id not in RESPONSE_SCHEMAS:
        raise KeyError(f"unknown template id: {template_id!r}")
    template = _CACHE.get(template_id)
    if template is None:
        template = PromptTemplate(
            template_id=template_id,
            body=_load_body(template_id),
            response_schema=RESPONSE_SCHEMAS[template_id],
        )
        _CACHE[template_id] = template
    return template


def assemble(template_id: str, bindings: Mapping[str, str]) -> str:
    """Fill every slot of the template body from bindings, verbatim."""
    template = get_template(template_id)

    def fill(match: re.Match) -> str:
        name = match.group(1)
        if name not in bindings:
            raise UnboundSlot(name)
        return str(bindings[name])

    return SLOT_RE.sub(fill, template.body)
