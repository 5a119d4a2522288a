"""Time and identifier sources.

Everything that needs "now" or a fresh id takes one of these objects, so
replays and tests can substitute fully deterministic variants.
"""

from __future__ import annotations

import itertools
import time
import uuid
from typing import Protocol


class Clock(Protocol):
    def now_ms(self) -> int:
        """Milliseconds since the epoch."""
        ...

    def sleep(self, seconds: float) -> None:
        ...


class SystemClock:
    def now_ms(self) -> int:
        return int(time.time() * 1000)

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)


class FakeClock:
    """Manual clock. sleep() advances time instead of blocking."""

    def __init__(self, start_ms: int = 1_700_000_000_000):
        self._now = start_ms

    def now_ms(self) -> int:
        return self._now

    def sleep(self, seconds: float) -> None:
        self._now += int(seconds * 1000)

    def advance_ms(self, ms: int) -> None:
        self._now += ms


class IdFactory(Protocol):
    def new_id(self, prefix: str) -> str:
        ...


class UuidIdFactory:
    def new_id(self, prefix: str) -> str:
        return f"{prefix}-{uuid.uuid4().hex[:12]}"


class SequentialIdFactory:
    """Deterministic ids: <prefix>-0001, <prefix>-0002, ... per prefix."""

    def __init__(self):
        self._counters: dict[str, itertools.count] = {}

    def new_id(self, prefix: str) -> str:
        counter = self._counters.setdefault(prefix, itertools.count(1))
        return f"{prefix}-{next(counter):04d}"
