"""Domain exceptions shared across the toolkit.

Everything user-facing derives from :class:`HadkitError` so the CLI can map
domain failures to exit code 1 while genuine bugs still crash loudly.
"""

from __future__ import annotations


class HadkitError(Exception):
    """Base class for all expected, user-reportable failures."""


class UnknownType(HadkitError):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"unknown hallucination type: {name!r}")


class UnknownTaskKind(HadkitError):
    def __init__(self, kind: str) -> None:
        self.kind = kind
        super().__init__(f"unknown task kind: {kind!r}")


class IncompatibleType(HadkitError):
    def __init__(self, type_id: str, kind: str) -> None:
        self.type_id = type_id
        self.kind = kind
        super().__init__(f"type {type_id} is not allowed for task kind {kind}")


class PoolTooSmall(HadkitError):
    def __init__(self, what: str, have: int, need: int) -> None:
        self.what = what
        self.have = have
        self.need = need
        super().__init__(f"pool for {what} has {have} items, need {need}")


class InsufficientPositives(HadkitError):
    def __init__(self, kind: str, have: int, need: int) -> None:
        self.kind = kind
        self.have = have
        self.need = need
        super().__init__(
            f"positives pool for task kind {kind} has {have} items, need {need}"
        )


class SchemaError(HadkitError):
    """Malformed record in a data file; `line` is 1-based (or item index)."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ParseError(HadkitError):
    """A model response did not match the expected marker grammar."""

    def __init__(self, raw: str, reason: str = "missing marker") -> None:
        self.raw = raw
        self.reason = reason
        super().__init__(f"unparseable response ({reason}): {raw[:120]!r}")


class LabelMismatch(HadkitError):
    def __init__(self, message: str) -> None:
        super().__init__(message)


class LengthMismatch(HadkitError):
    def __init__(self, n_gold: int, n_pred: int) -> None:
        self.n_gold = n_gold
        self.n_pred = n_pred
        super().__init__(f"gold has {n_gold} items but predictions have {n_pred}")


class AlignmentError(HadkitError):
    def __init__(self, missing: list[str], extra: list[str]) -> None:
        self.missing = missing
        self.extra = extra
        super().__init__(
            f"gold/prediction ids misaligned: missing={missing[:5]} extra={extra[:5]}"
        )


class EndpointError(HadkitError):
    """Transport or server failure that survived the retry budget."""

    def __init__(self, endpoint_id: str, message: str, attempts: int = 1) -> None:
        self.endpoint_id = endpoint_id
        self.attempts = attempts
        super().__init__(f"endpoint {endpoint_id}: {message} (after {attempts} attempts)")


class AuthError(HadkitError):
    def __init__(self, endpoint_id: str, message: str) -> None:
        self.endpoint_id = endpoint_id
        super().__init__(f"endpoint {endpoint_id}: {message}")


class BudgetExceeded(HadkitError):
    def __init__(self, limit: int) -> None:
        self.limit = limit
        super().__init__(f"request budget of {limit} exhausted")


class MockScriptError(HadkitError):
    def __init__(self, message: str) -> None:
        super().__init__(message)


class RetrieverError(HadkitError):
    def __init__(self, message: str) -> None:
        super().__init__(message)


class UnknownAnnotator(HadkitError):
    def __init__(self, annotator_id: str) -> None:
        self.annotator_id = annotator_id
        super().__init__(f"annotator not registered: {annotator_id!r}")


class VersionConflict(HadkitError):
    def __init__(self, item_id: str, expected: int, got: int) -> None:
        self.item_id = item_id
        self.expected = expected
        self.got = got
        super().__init__(
            f"item {item_id}: version {got} is stale (current {expected})"
        )


class DuplicateJudgment(HadkitError):
    def __init__(self, item_id: str, annotator_id: str) -> None:
        self.item_id = item_id
        self.annotator_id = annotator_id
        super().__init__(f"annotator {annotator_id} already judged item {item_id}")


class SpanNotInOutput(HadkitError):
    def __init__(self, span: str) -> None:
        self.span = span
        super().__init__(f"edited span is not a substring of the edited output: {span[:80]!r}")


class InvalidState(HadkitError):
    def __init__(self, message: str) -> None:
        super().__init__(message)


class PendingItemsRemain(HadkitError):
    def __init__(self, n_pending: int) -> None:
        self.n_pending = n_pending
        super().__init__(f"{n_pending} items still pending; use force to export anyway")
