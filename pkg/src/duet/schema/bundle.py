"""Machine-readable schema bundle.

One JSON Schema document per registered type, written under schemas/ at the
repository root. The bundle is the contract consumed by interface renderers
in other languages; its version (a digest over every document) gates session
persistence, so regenerating after a model change is mandatory.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Dict

from .registry import _ADAPTERS

VERSION_FILE = "VERSION"


def bundle_documents() -> Dict[str, Any]:
    docs: Dict[str, Any] = {}
    for schema_id in sorted(_ADAPTERS):
        docs[schema_id] = _ADAPTERS[schema_id].json_schema()
    return docs


def bundle_version(docs: Dict[str, Any] | None = None) -> str:
    docs = docs if docs is not None else bundle_documents()
    blob = json.dumps(docs, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def write_bundle(target_dir: Path) -> str:
    target_dir = Path(target_dir)
    target_dir.mkdir(parents=True, exist_ok=True)
    docs = bundle_documents()
    for schema_id, doc in docs.items():
        path = target_dir / f"{schema_id}.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    version = bundle_version(docs)
    (target_dir / VERSION_FILE).write_text(version + "\n", encoding="utf-8")
    return version
