"""Completion providers: scripted (offline, deterministic) and remote HTTP.

The gateway passes routing metadata (template_id, bindings fingerprint) in
the decode params; the scripted provider keys on it, the remote provider
ignores it.

Fixture files are JSON documents of the form:

    {"fixtures": [
        {"template_id": "navigation_gen",
         "fingerprint": "0123abcd...",            # optional, exact key
         "when_contains": "Barcelona",            # optional, str or list;
                                                  # every substring must
                                                  # appear in the assembled
                                                  # prompt (values are bound
                                                  # unescaped)
         "responses": [ {...}, "raw text", ... ]  # ordered; objects are
                                                  # serialized canonically
        }, ...]}

Entry selection per call: exact fingerprint first, then the first
when_contains entry whose every substring appears (file order), then the
first catch-all entry for the template. Repeat calls landing on the same
entry pop successive responses; an exhausted list repeats its last response.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Protocol

from ..errors import GatewayTimeout, MissingFixture, ProviderUnreachable
from ..schema import canonical_text


def fingerprint(bindings: Mapping[str, Any]) -> str:
    digest = hashlib.sha256(canonical_text(dict(bindings)).encode("utf-8")).hexdigest()
    return digest[:16]


class CompletionProvider(Protocol):
    name: str
    deterministic: bool

    def complete(self, prompt: str, params: Dict[str, Any]) -> str:
        ...


class _FixtureEntry:
    def __init__(self, doc: Dict[str, Any], source: str):
        self.template_id: str = doc["template_id"]
        self.fingerprint: Optional[str] = doc.get("fingerprint")
        raw_when = doc.get("when_contains")
        if raw_when is None:
            self.when_contains: Optional[List[str]] = None
        elif isinstance(raw_when, str):
            self.when_contains = [raw_when]
        else:
            self.when_contains = [str(w) for w in raw_when]
        responses = doc.get("responses", [])
        if not responses:
            raise ValueError(f"fixture entry without responses in {source}")
        self.responses: List[str] = [
            r if isinstance(r, str) else canonical_text(r) for r in responses
        ]
        self.cursor = 0
        self.source = source

    def next_response(self) -> str:
        response = self.responses[min(self.cursor, len(self.responses) - 1)]
        self.cursor += 1
        return response


class ScriptedProvider:
    name = "scripted"
    deterministic = True

    def __init__(self, entries: Iterable[_FixtureEntry]):
        self._entries = list(entries)
        self._lock = threading.Lock()

    def complete(self, prompt: str, params: Dict[str, Any]) -> str:
        template_id = params.get("template_id", "")
        fp = params.get("fingerprint", "")
        with self._lock:
            entry = self._select(template_id, fp, prompt)
            if entry is None:
                raise MissingFixture(template_id, fp)
            return entry.next_response()

    def _select(self, template_id: str, fp: str, prompt: str) -> Optional[_FixtureEntry]:
        of_template = [e for e in self._entries if e.template_id == template_id]
        for entry in of_template:
            if entry.fingerprint is not None and entry.fingerprint == fp:
                return entry
        for entry in of_template:
            if entry.when_contains is not None:
                if all(needle in prompt for needle in entry.when_contains):
                    return entry
        for entry in of_template:
            if entry.fingerprint is None and entry.when_contains is None:
                return entry
        return None

    def reset(self) -> None:
        """Rewind all cursors (used between independent replay runs)."""
        with self._lock:
            for entry in self._entries:
                entry.cursor = 0


def scripted_provider(table: Dict[str, Any] | List[Dict[str, Any]]) -> ScriptedProvider:
    """Build a scripted provider from one parsed fixture document."""
    docs = table["fixtures"] if isinstance(table, dict) else table
    return ScriptedProvider(_FixtureEntry(doc, source="<inline>") for doc in docs)


def load_fixture_files(paths: Iterable[Path]) -> ScriptedProvider:
    entries: List[_FixtureEntry] = []
    for path in paths:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        for item in doc.get("fixtures", []):
            entries.append(_FixtureEntry(item, source=str(path)))
    return ScriptedProvider(entries)


def load_fixture_dir(directory: Path) -> ScriptedProvider:
    directory = Path(directory)
    return load_fixture_files(sorted(directory.glob("*.json")))


class RemoteProvider:
    """Generic chat-completion HTTP endpoint."""

    name = "remote"
    deterministic = False

    def __init__(self, url: str, model: str, token_env: str = "DUET_LLM_TOKEN",
                 timeout_ms: int = 30_000, client: Any = None):
        self.url = url
        self.model = model
        self.token_env = token_env
        self.timeout_ms = timeout_ms
        self._client = client

    def _http(self):
        import httpx

        if self._client is None:
            self._client = httpx.Client(timeout=self.timeout_ms / 1000)
        return self._client

    def complete(self, prompt: str, params: Dict[str, Any]) -> str:
        import httpx

        headers = {}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        try:
            response = self._http().post(self.url, json=body, headers=headers)
        except httpx.TimeoutException as exc:
            raise GatewayTimeout(str(exc)) from exc
        except httpx.HTTPError as exc:
            raise ProviderUnreachable(str(exc)) from exc
        if response.status_code != 200:
            raise ProviderUnreachable(f"endpoint returned HTTP {response.status_code}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderUnreachable(f"malformed completion payload: {exc}") from exc
