"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class DuetError(Exception):
    """Base class for all engine errors."""


# --- schema layer ---------------------------------------------------------

class UnknownSchema(DuetError):
    def __init__(self, schema_id: str):
        super().__init__(f"unknown schema id: {schema_id!r}")
        self.schema_id = schema_id


class MalformedDocument(DuetError):
    """Bytes that do not parse as a UTF-8 JSON document."""


class ValidationFailed(DuetError):
    """A document failed schema validation; carries the structured issue list."""

    def __init__(self, issues):
        self.issues = list(issues)
        summary = "; ".join(str(i) for i in self.issues[:5])
        super().__init__(f"validation failed: {summary}")


# --- context manager ------------------------------------------------------

class UnknownSession(DuetError):
    def __init__(self, session_id: str):
        super().__init__(f"unknown session: {session_id}")
        self.session_id = session_id


class EmptyGoal(DuetError):
    """Session goal is empty after trimming."""


class DanglingTarget(DuetError):
    """Action target references a page or component that no longer exists."""


class IllegalTransition(DuetError):
    def __init__(self, current, target):
        super().__init__(f"illegal stage transition: {current} -> {target}")
        self.current = current
        self.target = target


class StaleBase(DuetError):
    """Commit was generated against an outdated version."""

    def __init__(self, expected: int, actual: int):
        super().__init__(f"stale base version: commit built on {expected}, current is {actual}")
        self.expected = expected
        self.actual = actual


class DualityViolated(DuetError):
    """Interface commit does not mirror the current task plan."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"duality violated: {report}")


# --- gateway ---------------------------------------------------------------

class UnboundSlot(DuetError):
    def __init__(self, name: str):
        super().__init__(f"unbound prompt slot: {{{name}}}")
        self.name = name


class NoJsonFound(DuetError):
    """Provider output contains no JSON object or array."""


class UnbalancedJson(DuetError):
    """A JSON candidate opened but never closed."""


class ProviderUnreachable(DuetError):
    """The completion provider could not be reached."""


class GatewayTimeout(DuetError):
    """A single completion attempt exceeded its time budget."""


class ExhaustedAttempts(DuetError):
    """All attempts within the budget failed; carries per-attempt errors."""

    def __init__(self, attempt_errors):
        self.attempt_errors = list(attempt_errors)
        super().__init__(f"exhausted attempts: {self.attempt_errors[-1] if self.attempt_errors else 'no attempts'}")


class MissingFixture(DuetError):
    """The scripted provider has no response for this call (un-scripted path)."""

    def __init__(self, template_id: str, fingerprint: str):
        super().__init__(f"no fixture for template {template_id!r} (fingerprint {fingerprint})")
        self.template_id = template_id
        self.fingerprint = fingerprint


# --- agents ----------------------------------------------------------------

class EmptyPlan(DuetError):
    """The provider produced zero subtasks at Plan stage or later."""


class UnknownSubtask(DuetError):
    def __init__(self, subtask_id: str):
        super().__init__(f"unknown subtask: {subtask_id}")
        self.subtask_id = subtask_id


class UnknownApi(DuetError):
    def __init__(self, api_name: str):
        super().__init__(f"api not in catalog: {api_name}")
        self.api_name = api_name


class UnsupportedPlatform(DuetError):
    """Requested platform is not supported by the task definition."""


class CapacityExceeded(DuetError):
    """More navigable subtasks than navigation can hold (3 groups x 5 pages)."""

    def __init__(self, count: int, capacity: int):
        super().__init__(f"{count} navigable subtasks exceed navigation capacity {capacity}")
        self.count = count
        self.capacity = capacity


class UnresolvableReference(DuetError):
    """Summary references a page that does not exist, after exhausted repair."""


# --- orchestrator / service -------------------------------------------------

class QuiesceTimeout(DuetError):
    """quiesce() did not reach an idle state within its bound."""


class CorruptPersistedDocument(DuetError):
    """Persisted session bytes cannot be restored."""


class SchemaBundleMismatch(CorruptPersistedDocument):
    """Persisted session was saved under a different schema bundle version."""


class AssertionFailed(DuetError):
    """A replay step's assertion did not hold."""

    def __init__(self, index: int, detail: str):
        super().__init__(f"step {index}: {detail}")
        self.index = index
        self.detail = detail
