"""Canonical JSON serialization.

One byte form per value: UTF-8, keys sorted, no whitespace, unicode kept
as-is. Snapshot hashes and fixture fingerprints are built on these bytes,
so any change here invalidates recorded traces.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, Union

from pydantic import BaseModel

from ..errors import MalformedDocument, ValidationFailed
from .registry import validate


def to_jsonable(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    if isinstance(value, dict):
        return {k: to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def canonical_text(value: Any) -> str:
    return json.dumps(to_jsonable(value), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def serialize(value: Any) -> bytes:
    return canonical_text(value).encode("utf-8")


def parse_json(data: Union[bytes, str]) -> Any:
    """Decode bytes or text into a JSON value, without schema checks."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument(str(exc)) from exc
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(str(exc)) from exc


def parse(data: Union[bytes, str], schema_id: str) -> Any:
    """Decode canonical bytes back into a typed value."""
    doc = parse_json(data)
    result = validate(schema_id, doc)
    if not result.ok:
        raise ValidationFailed(result.issues)
    return result.value


def sha256_hex(value: Any) -> str:
    return hashlib.sha256(serialize(value)).hexdigest()
