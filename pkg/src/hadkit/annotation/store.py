"""Event-sourced state behind the double-annotation workflow.

Judgments and edits append to a JSONL event log which is replayed on startup,
so the full curation history survives restarts and the exported file is a
pure function of the log. Leases are in-memory scheduling state only; they
expire and are dropped on restart.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from ..corpus import HalluRecord, save_records
from ..errors import (
    DuplicateJudgment,
    InvalidState,
    PendingItemsRemain,
    SchemaError,
    SpanNotInOutput,
    UnknownAnnotator,
    VersionConflict,
)
from ..taxonomy import Taxonomy, default_taxonomy

VERDICTS = ("Pass", "Fail")
DEFAULT_LEASE_SECONDS = 30 * 60


@dataclass
class Judgment:
    annotator_id: str
    verdict: str  # Pass | Fail
    criteria_notes: str
    submitted_at: str


@dataclass
class Edit:
    new_output: str
    new_span: str
    editor_id: str
    edited_at: str


@dataclass
class AnnotationItem:
    record: HalluRecord
    judgments: dict[str, Judgment] = field(default_factory=dict)
    edit: Edit | None = None
    disposition: str = "Pending"
    version: int = 0
    lease: tuple[str, float] | None = None  # (annotator_id, expires_at_epoch)


@dataclass
class AgreementStats:
    n_items: int
    n_pending: int
    n_double_judged: int
    agreement_rate: float
    pass_rate: float
    per_type: dict[str, dict]

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "n_pending": self.n_pending,
            "n_double_judged": self.n_double_judged,
            "agreement_rate": self.agreement_rate,
            "pass_rate": self.pass_rate,
            "per_type": self.per_type,
        }


def _disposition_for(verdicts: Sequence[str]) -> str:
    first, second = verdicts
    if first == "Pass" and second == "Pass":
        return "Agreed_Pass"
    if first == "Fail" and second == "Fail":
        return "Agreed_Fail"
    return "Disagreed"


class AnnotationStore:
    """Single-writer store; handlers may call concurrently, mutations
    serialize through one lock and optimistic version checks."""

    def __init__(
        self,
        records: Sequence[HalluRecord],
        annotators: Sequence[str],
        log_path: str | Path | None = None,
        lease_seconds: int = DEFAULT_LEASE_SECONDS,
        clock: Callable[[], float] = time.time,
        taxonomy: Taxonomy | None = None,
    ) -> None:
        self._taxonomy = taxonomy or default_taxonomy()
        self._annotators = set(annotators)
        self._lease_seconds = lease_seconds
        self._clock = clock
        self._lock = threading.RLock()
        self._items: dict[str, AnnotationItem] = {}
        for rec in records:
            if rec.id in self._items:
                raise SchemaError(f"duplicate record id in annotation queue: {rec.id}")
            self._items[rec.id] = AnnotationItem(record=rec)
        self._log_path = Path(log_path) if log_path is not None else None
        if self._log_path is not None and self._log_path.exists():
            self._replay()

    # -- event log --

    def _replay(self) -> None:
        assert self._log_path is not None
        with open(self._log_path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"annotation log: invalid JSON: {exc.msg}", line=lineno) from exc
                item = self._items.get(event.get("item_id", ""))
                if item is None:
                    raise SchemaError(
                        f"annotation log references unknown item {event.get('item_id')!r}",
                        line=lineno,
                    )
                if event["kind"] == "judgment":
                    self._apply_judgment(
                        item, event["annotator_id"], event["verdict"], event["notes"], event["at"]
                    )
                elif event["kind"] == "edit":
                    self._apply_edit(
                        item, event["editor_id"], event["new_output"], event["new_span"], event["at"]
                    )
                else:
                    raise SchemaError(f"annotation log: unknown event kind {event['kind']!r}", line=lineno)

    def _append(self, event: dict) -> None:
        if self._log_path is None:
            return
        with open(self._log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    def _now_iso(self) -> str:
        return datetime.fromtimestamp(self._clock(), tz=timezone.utc).strftime(
            "%Y-%m-%dT%H:%M:%SZ"
        )

    # -- core transitions (shared by live path and replay) --

    def _apply_judgment(
        self, item: AnnotationItem, annotator_id: str, verdict: str, notes: str, at: str
    ) -> None:
        item.judgments[annotator_id] = Judgment(annotator_id, verdict, notes, at)
        if len(item.judgments) == 2:
            item.disposition = _disposition_for([j.verdict for j in item.judgments.values()])
        item.version += 1
        item.lease = None

    def _apply_edit(
        self, item: AnnotationItem, editor_id: str, new_output: str, new_span: str, at: str
    ) -> None:
        item.edit = Edit(new_output, new_span, editor_id, at)
        item.disposition = "Edited_Pass"
        item.version += 1
        item.lease = None

    # -- public operations --

    def _require_annotator(self, annotator_id: str) -> None:
        if annotator_id not in self._annotators:
            raise UnknownAnnotator(annotator_id)

    def get(self, item_id: str) -> AnnotationItem:
        with self._lock:
            item = self._items.get(item_id)
            if item is None:
                raise InvalidState(f"no such item: {item_id}")
            return item

    def items(self) -> list[AnnotationItem]:
        with self._lock:
            return list(self._items.values())

    def next_item(self, annotator_id: str) -> AnnotationItem | None:
        """The first pending item this annotator has not judged, lease-locked;
        None when the queue is exhausted for them."""
        self._require_annotator(annotator_id)
        with self._lock:
            now = self._clock()
            for item in self._items.values():
                if item.disposition != "Pending":
                    continue
                if annotator_id in item.judgments:
                    continue
                if item.lease is not None:
                    holder, expires = item.lease
                    if holder != annotator_id and expires > now:
                        continue
                item.lease = (annotator_id, now + self._lease_seconds)
                return item
            return None

    def submit_judgment(
        self, annotator_id: str, item_id: str, verdict: str, notes: str, version: int
    ) -> AnnotationItem:
        self._require_annotator(annotator_id)
        if verdict not in VERDICTS:
            raise InvalidState(f"verdict must be one of {VERDICTS}, got {verdict!r}")
        with self._lock:
            item = self.get(item_id)
            if item.version != version:
                raise VersionConflict(item_id, item.version, version)
            if annotator_id in item.judgments:
                raise DuplicateJudgment(item_id, annotator_id)
            if item.disposition != "Pending":
                raise InvalidState(f"item {item_id} is already {item.disposition}")
            if item.lease is not None:
                holder, expires = item.lease
                if holder != annotator_id and expires > self._clock():
                    raise InvalidState(f"item {item_id} is leased to another annotator")
            at = self._now_iso()
            self._apply_judgment(item, annotator_id, verdict, notes, at)
            self._append(
                {
                    "kind": "judgment",
                    "item_id": item_id,
                    "annotator_id": annotator_id,
                    "verdict": verdict,
                    "notes": notes,
                    "at": at,
                }
            )
            return item

    def edit_item(
        self, editor_id: str, item_id: str, new_output: str, new_span: str, version: int
    ) -> AnnotationItem:
        """Repair a Disagreed or Agreed_Fail item into Edited_Pass. The
        original record is untouched; the event log keeps the full history."""
        self._require_annotator(editor_id)
        with self._lock:
            item = self.get(item_id)
            if item.version != version:
                raise VersionConflict(item_id, item.version, version)
            if item.disposition not in ("Disagreed", "Agreed_Fail"):
                raise InvalidState(
                    f"item {item_id} is {item.disposition}; only Disagreed or "
                    "Agreed_Fail items can be edited"
                )
            if new_span not in new_output:
                raise SpanNotInOutput(new_span)
            at = self._now_iso()
            self._apply_edit(item, editor_id, new_output, new_span, at)
            self._append(
                {
                    "kind": "edit",
                    "item_id": item_id,
                    "editor_id": editor_id,
                    "new_output": new_output,
                    "new_span": new_span,
                    "at": at,
                }
            )
            return item

    def stats(self) -> AgreementStats:
        """Agreement rate over double-judged items (computed from the stored
        verdicts, so later edits do not mask a disagreement) and pass rate
        over all finalized items."""
        with self._lock:
            per_type: dict[str, dict] = {}
            n_pending = n_double = n_match = n_final = n_passed = 0
            for item in self._items.values():
                key = self._taxonomy.label_key(item.record.label)
                bucket = per_type.setdefault(
                    key,
                    {"n_items": 0, "n_double_judged": 0, "n_matching": 0, "n_final": 0, "n_passed": 0},
                )
                bucket["n_items"] += 1
                if item.disposition == "Pending":
                    n_pending += 1
                else:
                    n_final += 1
                    bucket["n_final"] += 1
                    if item.disposition in ("Agreed_Pass", "Edited_Pass"):
                        n_passed += 1
                        bucket["n_passed"] += 1
                if len(item.judgments) == 2:
                    n_double += 1
                    bucket["n_double_judged"] += 1
                    verdicts = [j.verdict for j in item.judgments.values()]
                    if verdicts[0] == verdicts[1]:
                        n_match += 1
                        bucket["n_matching"] += 1
            for bucket in per_type.values():
                bucket["agreement_rate"] = (
                    bucket["n_matching"] / bucket["n_double_judged"]
                    if bucket["n_double_judged"]
                    else 0.0
                )
                bucket["pass_rate"] = (
                    bucket["n_passed"] / bucket["n_final"] if bucket["n_final"] else 0.0
                )
            return AgreementStats(
                n_items=len(self._items),
                n_pending=n_pending,
                n_double_judged=n_double,
                agreement_rate=n_match / n_double if n_double else 0.0,
                pass_rate=n_passed / n_final if n_final else 0.0,
                per_type=per_type,
            )

    def finalized_records(self) -> list[HalluRecord]:
        """Agreed_Pass and Edited_Pass records with edits applied, in queue
        order, with status annotated_pass."""
        with self._lock:
            out = []
            for item in self._items.values():
                if item.disposition not in ("Agreed_Pass", "Edited_Pass"):
                    continue
                rec = item.record
                extras = dict(rec.extras)
                output, span = rec.output, rec.span
                if item.edit is not None:
                    output, span = item.edit.new_output, item.edit.new_span
                    extras["edited_by"] = item.edit.editor_id
                out.append(
                    HalluRecord(
                        id=rec.id,
                        source_id=rec.source_id,
                        task_kind=rec.task_kind,
                        task_input=rec.task_input,
                        output=output,
                        label=rec.label,
                        span=span,
                        correction=rec.correction,
                        provenance=rec.provenance,
                        status="annotated_pass",
                        extras=extras,
                    )
                )
            return out

    def export(self, path: str | Path, force: bool = False) -> list[HalluRecord]:
        with self._lock:
            n_pending = sum(1 for it in self._items.values() if it.disposition == "Pending")
            if n_pending and not force:
                raise PendingItemsRemain(n_pending)
            records = self.finalized_records()
            save_records(records, path, self._taxonomy)
            return records
