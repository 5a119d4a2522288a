"""Session persistence: canonical session documents in a key-value store.

A saved session is the canonical serialization of the full session context
plus the schema bundle version it was written under. There are no
migrations: loading under a different bundle version refuses outright.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict

from ..context import ContextManager
from ..errors import CorruptPersistedDocument, SchemaBundleMismatch, UnknownSession
from ..schema import bundle_version, parse_json, serialize


@dataclass(frozen=True)
class PersistedSession:
    session_id: str
    context: Dict[str, Any]        # canonical session document
    bundle_version: str
    saved_at: int                  # epoch ms

    def doc(self) -> Dict[str, Any]:
        return {
            "sessionId": self.session_id,
            "context": self.context,
            "bundleVersion": self.bundle_version,
            "savedAt": self.saved_at,
        }

    def to_bytes(self) -> bytes:
        return serialize(self.doc())

    @staticmethod
    def from_bytes(raw: bytes) -> "PersistedSession":
        try:
            doc = parse_json(raw)
        except Exception as exc:
            raise CorruptPersistedDocument(f"unreadable persisted session: {exc}") from exc
        return PersistedSession.from_doc(doc)

    @staticmethod
    def from_doc(doc: Any) -> "PersistedSession":
        if not isinstance(doc, dict):
            raise CorruptPersistedDocument("persisted session must be an object")
        missing = [k for k in ("sessionId", "context", "bundleVersion", "savedAt") if k not in doc]
        if missing:
            raise CorruptPersistedDocument(f"persisted session missing {missing}")
        if not isinstance(doc["context"], dict):
            raise CorruptPersistedDocument("persisted context must be an object")
        return PersistedSession(session_id=doc["sessionId"], context=doc["context"],
                                bundle_version=doc["bundleVersion"], saved_at=doc["savedAt"])


def save_session(manager: ContextManager, session_id: str, saved_at: int) -> PersistedSession:
    if session_id not in manager.session_ids():
        raise UnknownSession(session_id)
    return PersistedSession(session_id=session_id,
                            context=manager.session_doc(session_id),
                            bundle_version=bundle_version(),
                            saved_at=saved_at)


def load_session(manager: ContextManager, persisted: PersistedSession) -> str:
    if persisted.bundle_version != bundle_version():
        raise SchemaBundleMismatch(
            f"saved under bundle {persisted.bundle_version}, running {bundle_version()}")
    try:
        return manager.restore_session(persisted.context)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptPersistedDocument(f"context does not restore: {exc}") from exc


class InMemorySessionStore:
    def __init__(self) -> None:
        self._docs: Dict[str, bytes] = {}

    def put(self, persisted: PersistedSession) -> None:
        self._docs[persisted.session_id] = persisted.to_bytes()

    def get(self, session_id: str) -> PersistedSession:
        if session_id not in self._docs:
            raise UnknownSession(session_id)
        return PersistedSession.from_bytes(self._docs[session_id])

    def ids(self) -> list:
        return sorted(self._docs)


class FileSessionStore:
    """One <session_id>.json per session under a directory."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.json"

    def put(self, persisted: PersistedSession) -> None:
        self._path(persisted.session_id).write_bytes(persisted.to_bytes())

    def get(self, session_id: str) -> PersistedSession:
        path = self._path(session_id)
        if not path.exists():
            raise UnknownSession(session_id)
        return PersistedSession.from_bytes(path.read_bytes())

    def ids(self) -> list:
        return sorted(p.stem for p in self.root.glob("*.json"))
