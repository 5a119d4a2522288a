"""Assemble, complete, extract, validate — with bounded repair retries.

With a deterministic provider the whole loop is a pure function of
(template_id, bindings): attempt traces and returned values are identical
across runs, and no backoff sleeps happen.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from ..clock import Clock, SystemClock
from ..errors import (
    ExhaustedAttempts,
    GatewayTimeout,
    MissingFixture,
    NoJsonFound,
    ProviderUnreachable,
    UnbalancedJson,
)
from ..schema import validate
from .extraction import extract_json
from .providers import CompletionProvider, fingerprint
from .templates import assemble, get_template

# Pauses before the 2nd and 3rd+ remote attempts; scripted providers skip.
BACKOFF_SCHEDULE_S = (0.25, 1.0)

REPAIR_PREFIX = "Your previous output violated: "
REPAIR_SUFFIX_TAIL = ". Return only corrected JSON."


@dataclass
class GatewayBudget:
    max_attempts: int = 3
    per_attempt_timeout_ms: int = 30_000
    repair_enabled: bool = True

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class AttemptRecord:
    attempt: int
    ok: bool
    error: Optional[str] = None          # error class name on failure
    constraints: Tuple[str, ...] = ()    # violated constraints, for repair
    raw: str = ""                        # provider text, verbatim

    def doc(self) -> Dict[str, Any]:
        return {
            "attempt": self.attempt,
            "ok": self.ok,
            "error": self.error,
            "constraints": list(self.constraints),
            "raw": self.raw,
        }


@dataclass
class GatewayResult:
    value: Any
    attempts: List[AttemptRecord] = field(default_factory=list)


def _constraint_names(issues) -> Tuple[str, ...]:
    names = []
    for issue in issues:
        label = issue.name if issue.name else issue.kind
        where = issue.path or "<root>"
        names.append(f"{label} at {where}")
    return tuple(names)


def repair_suffix(constraints: Tuple[str, ...]) -> str:
    return f"{REPAIR_PREFIX}{', '.join(constraints)}{REPAIR_SUFFIX_TAIL}"


class Gateway:
    def __init__(self, provider: CompletionProvider, clock: Optional[Clock] = None):
        self.provider = provider
        self._clock = clock or SystemClock()

    def complete_validated(self, template_id: str, bindings: Mapping[str, str],
                           budget: Optional[GatewayBudget] = None) -> GatewayResult:
        budget = budget or GatewayBudget()
        template = get_template(template_id)
        base_prompt = assemble(template_id, bindings)
        params = {
            "template_id": template_id,
            "fingerprint": fingerprint(bindings),
            "timeout_ms": budget.per_attempt_timeout_ms,
        }

        attempts: List[AttemptRecord] = []
        errors: List[str] = []
        pending_constraints: Tuple[str, ...] = ()
        last_transport_error: Optional[Exception] = None

        for attempt in range(1, budget.max_attempts + 1):
            if attempt > 1 and not self.provider.deterministic:
                self._clock.sleep(BACKOFF_SCHEDULE_S[min(attempt - 2, len(BACKOFF_SCHEDULE_S) - 1)])

            prompt = base_prompt
            if pending_constraints and budget.repair_enabled:
                prompt = f"{base_prompt}\n{repair_suffix(pending_constraints)}"

            try:
                raw = self.provider.complete(prompt, params)
            except MissingFixture:
                # A hole in the script is an authoring error; retrying is noise.
                raise
            except (ProviderUnreachable, GatewayTimeout) as exc:
                last_transport_error = exc
                attempts.append(AttemptRecord(attempt=attempt, ok=False,
                                              error=type(exc).__name__))
                errors.append(f"attempt {attempt}: {type(exc).__name__}")
                continue

            try:
                doc = extract_json(raw)
            except (NoJsonFound, UnbalancedJson) as exc:
                pending_constraints = (type(exc).__name__,)
                attempts.append(AttemptRecord(attempt=attempt, ok=False,
                                              error=type(exc).__name__,
                                              constraints=pending_constraints, raw=raw))
                errors.append(f"attempt {attempt}: {type(exc).__name__}")
                continue

            result = validate(template.response_schema, doc)
            if result.ok:
                attempts.append(AttemptRecord(attempt=attempt, ok=True, raw=raw))
                return GatewayResult(value=result.value, attempts=attempts)

            pending_constraints = _constraint_names(result.issues)
            attempts.append(AttemptRecord(attempt=attempt, ok=False, error="ValidationFailed",
                                          constraints=pending_constraints, raw=raw))
            errors.append(f"attempt {attempt}: ValidationFailed({', '.join(pending_constraints)})")

        if last_transport_error is not None and len(errors) == budget.max_attempts and all(
                "ValidationFailed" not in e and "Json" not in e for e in errors):
            # Never even got text back: surface the transport problem itself.
            raise last_transport_error
        raise ExhaustedAttempts(errors)
