"""HTTP surface, persistence, replay harness, and CLI."""

from .app import create_app
from .persistence import (
    FileSessionStore,
    InMemorySessionStore,
    PersistedSession,
    load_session,
    save_session,
)
from .replay import ReplayReport, load_trace, replay

__all__ = [
    "FileSessionStore",
    "InMemorySessionStore",
    "PersistedSession",
    "ReplayReport",
    "create_app",
    "load_session",
    "load_trace",
    "replay",
    "save_session",
]
