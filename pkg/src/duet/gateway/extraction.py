"""Pulling a JSON value out of free-form completion text."""

from __future__ import annotations

import json
import re
from typing import Any

from ..errors import NoJsonFound, UnbalancedJson

FENCE_RE = re.compile(r"```(?:[a-zA-Z0-9_-]+)?\s*\n(.*?)```", re.DOTALL)


def _scan_balanced(text: str, start: int) -> int:
    """Index one past the close bracket matching text[start]; string-aware."""
    opener = text[start]
    closer = "}" if opener == "{" else "]"
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch in "{[":
            depth += 1
        elif ch in "}]":
            depth -= 1
            if depth == 0:
                if ch != closer:
                    raise UnbalancedJson(f"mismatched bracket at offset {i}")
                return i + 1
    raise UnbalancedJson(f"value opened at offset {start} never closes")


def _first_value(text: str) -> Any:
    pos = 0
    found_candidate = False
    while True:
        starts = [i for i in (text.find("{", pos), text.find("[", pos)) if i != -1]
        if not starts:
            if found_candidate:
                raise NoJsonFound("no parseable JSON value in output")
            raise NoJsonFound("no JSON object or array in output")
        start = min(starts)
        found_candidate = True
        end = _scan_balanced(text, start)
        try:
            return json.loads(text[start:end])
        except json.JSONDecodeError:
            pos = start + 1


def extract_json(raw: str) -> Any:
    """First balanced JSON object/array in raw text; fenced blocks win."""
    for match in FENCE_RE.finditer(raw):
        try:
            return _first_value(match.group(1))
        except NoJsonFound:
            continue
    return _first_value(raw)
