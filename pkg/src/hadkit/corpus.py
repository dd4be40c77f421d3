"""Record data model, JSONL persistence, balanced-set assembly and statistics.

JSONL field names are part of the wire contract; unknown fields on a line are
kept in `extras` and written back on save (forward compatibility).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InsufficientPositives, PoolTooSmall, SchemaError
from .rng import substream
from .taxonomy import Label, LabelKind, Taxonomy, default_taxonomy

STATUSES = ("raw", "filtered_pass", "filtered_fail", "annotated_pass", "annotated_fail", "edited")

# Monotone lifecycle: raw -> filtered_{pass,fail} -> annotated_{pass,fail}/edited.
_STATUS_STAGE = {
    "raw": 0,
    "filtered_pass": 1,
    "filtered_fail": 1,
    "annotated_pass": 2,
    "annotated_fail": 2,
    "edited": 2,
}


@dataclass
class Provenance:
    generator_model: str = ""
    temperature: float = 0.0
    candidate_index: int = 0
    injected_at: str = ""

    def to_dict(self) -> dict:
        return {
            "generator_model": self.generator_model,
            "temperature": self.temperature,
            "candidate_index": self.candidate_index,
            "injected_at": self.injected_at,
        }


@dataclass
class SourceRecord:
    id: str
    task_kind: str
    task_input: str
    gold_output: str


@dataclass
class HalluRecord:
    id: str
    source_id: str
    task_kind: str
    task_input: str
    output: str
    label: Label
    span: str
    correction: str
    provenance: Provenance = field(default_factory=Provenance)
    status: str = "raw"
    extras: dict = field(default_factory=dict)

    def advance_status(self, new_status: str) -> None:
        if new_status not in _STATUS_STAGE:
            raise SchemaError(f"unknown status {new_status!r}")
        if _STATUS_STAGE[new_status] < _STATUS_STAGE[self.status]:
            raise SchemaError(
                f"record {self.id}: status cannot move back from "
                f"{self.status} to {new_status}"
            )
        self.status = new_status


@dataclass
class DatasetStats:
    """Exact counts; `positives` counts hallucinated records, `negatives` the
    No Hallucination ones (detector-centric polarity)."""

    per_type: dict[str, int]
    per_task: dict[str, int]
    positives: int
    negatives: int
    total: int

    def to_dict(self) -> dict:
        return {
            "per_type": self.per_type,
            "per_task": self.per_task,
            "positives": self.positives,
            "negatives": self.negatives,
            "total": self.total,
        }


_RECORD_FIELDS = (
    "id",
    "source_id",
    "task_kind",
    "task_input",
    "output",
    "label",
    "span",
    "correction",
    "provenance",
    "status",
)


def _check_invariants(rec: HalluRecord, line: int | None = None) -> None:
    if rec.label.kind is LabelKind.NO_HALLUCINATION:
        if rec.span or rec.correction:
            raise SchemaError(
                f"record {rec.id}: negative records must have empty span and correction",
                line=line,
            )
    elif rec.label.kind is LabelKind.TYPE:
        if not rec.span:
            raise SchemaError(f"record {rec.id}: typed records must carry a span", line=line)
    elif rec.label.kind is LabelKind.INVALID:
        raise SchemaError(f"record {rec.id}: gold records cannot carry an Invalid label", line=line)
    if rec.status not in _STATUS_STAGE:
        raise SchemaError(f"record {rec.id}: unknown status {rec.status!r}", line=line)


def record_to_dict(rec: HalluRecord, taxonomy: Taxonomy | None = None) -> dict:
    taxonomy = taxonomy or default_taxonomy()
    out = {
        "id": rec.id,
        "source_id": rec.source_id,
        "task_kind": rec.task_kind,
        "task_input": rec.task_input,
        "output": rec.output,
        "label": taxonomy.label_to_wire(rec.label),
        "span": rec.span,
        "correction": rec.correction,
        "provenance": rec.provenance.to_dict(),
        "status": rec.status,
    }
    for key in sorted(rec.extras):
        out[key] = rec.extras[key]
    return out


def record_from_dict(obj: dict, taxonomy: Taxonomy | None = None, line: int | None = None) -> HalluRecord:
    taxonomy = taxonomy or default_taxonomy()
    missing = [f for f in _RECORD_FIELDS if f not in obj]
    if missing:
        raise SchemaError(f"record missing fields: {', '.join(missing)}", line=line)
    prov_obj = obj["provenance"]
    if not isinstance(prov_obj, dict):
        raise SchemaError("provenance must be an object", line=line)
    prov = Provenance(
        generator_model=prov_obj.get("generator_model", ""),
        temperature=float(prov_obj.get("temperature", 0.0)),
        candidate_index=int(prov_obj.get("candidate_index", 0)),
        injected_at=prov_obj.get("injected_at", ""),
    )
    try:
        label = taxonomy.label_from_wire(obj["label"])
    except Exception as exc:
        raise SchemaError(f"bad label {obj['label']!r}: {exc}", line=line) from exc
    rec = HalluRecord(
        id=obj["id"],
        source_id=obj["source_id"],
        task_kind=obj["task_kind"],
        task_input=obj["task_input"],
        output=obj["output"],
        label=label,
        span=obj["span"],
        correction=obj["correction"],
        provenance=prov,
        status=obj["status"],
        extras={k: v for k, v in obj.items() if k not in _RECORD_FIELDS},
    )
    _check_invariants(rec, line=line)
    return rec


def _load_jsonl(path: str | Path) -> list[tuple[int, dict]]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(obj, dict):
                raise SchemaError("each line must be a JSON object", line=lineno)
            rows.append((lineno, obj))
    return rows


def _dump_jsonl(rows: Iterable[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def load_records(path: str | Path, taxonomy: Taxonomy | None = None) -> list[HalluRecord]:
    """Load HalluRecords; raises SchemaError on the first bad line and never
    returns a partial list."""
    return [record_from_dict(obj, taxonomy, line=lineno) for lineno, obj in _load_jsonl(path)]


def save_records(records: Sequence[HalluRecord], path: str | Path, taxonomy: Taxonomy | None = None) -> None:
    for rec in records:
        _check_invariants(rec)
    _dump_jsonl((record_to_dict(r, taxonomy) for r in records), path)


def load_sources(path: str | Path) -> list[SourceRecord]:
    out = []
    seen: set[str] = set()
    for lineno, obj in _load_jsonl(path):
        missing = [f for f in ("id", "task_kind", "task_input", "gold_output") if f not in obj]
        if missing:
            raise SchemaError(f"source missing fields: {', '.join(missing)}", line=lineno)
        if obj["id"] in seen:
            raise SchemaError(f"duplicate source id {obj['id']!r}", line=lineno)
        if not obj["task_input"]:
            raise SchemaError(f"source {obj['id']}: task_input must be nonempty", line=lineno)
        seen.add(obj["id"])
        out.append(SourceRecord(obj["id"], obj["task_kind"], obj["task_input"], obj["gold_output"]))
    return out


def save_sources(records: Sequence[SourceRecord], path: str | Path) -> None:
    _dump_jsonl(
        (
            {
                "id": r.id,
                "task_kind": r.task_kind,
                "task_input": r.task_input,
                "gold_output": r.gold_output,
            }
            for r in records
        ),
        path,
    )


# -- sampling helpers --

# Default per-type training-mixture targets: heaviest on factual types, medium
# on input-context inconsistencies, light on the rest. Approximate by design;
# treat as configuration, not ground truth.
DEFAULT_TRAINING_TARGETS = {
    "FRE": 9000,
    "FIE": 9000,
    "FE": 9000,
    "FA": 9000,
    "CwIC": 5000,
    "BI": 5000,
    "IO": 5000,
    "TTI": 2500,
    "TRI": 2500,
    "CwOC": 2500,
    "SI": 2500,
}

DEFAULT_POSITIVE_FRACTION = 0.5


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def largest_remainder(total: int, weights: dict[str, int]) -> dict[str, int]:
    """Allocate `total` across keys proportionally to integer weights using
    the largest-remainder method. Deterministic: ties broken by key order."""
    wsum = sum(weights.values())
    if total == 0 or wsum == 0:
        return {k: 0 for k in weights}
    quotas = {k: total * w / wsum for k, w in weights.items()}
    alloc = {k: math.floor(q) for k, q in quotas.items()}
    leftover = total - sum(alloc.values())
    by_remainder = sorted(weights, key=lambda k: (-(quotas[k] - alloc[k]), k))
    for k in by_remainder[:leftover]:
        alloc[k] += 1
    return alloc


def _positive_record(source: SourceRecord, status: str) -> HalluRecord:
    return HalluRecord(
        id=f"pos-{source.id}",
        source_id=source.id,
        task_kind=source.task_kind,
        task_input=source.task_input,
        output=source.gold_output,
        label=Label.no_hallucination(),
        span="",
        correction="",
        provenance=Provenance(generator_model="gold"),
        status=status,
    )


def _sample_positives(
    pool: Sequence[SourceRecord],
    per_kind: dict[str, int],
    rng,
    status: str,
) -> list[HalluRecord]:
    by_kind: dict[str, list[SourceRecord]] = {}
    for src in pool:
        by_kind.setdefault(src.task_kind, []).append(src)
    out: list[HalluRecord] = []
    for kind in sorted(per_kind):
        need = per_kind[kind]
        if need == 0:
            continue
        avail = sorted(by_kind.get(kind, []), key=lambda s: s.id)
        if len(avail) < need:
            raise InsufficientPositives(kind, len(avail), need)
        out.extend(_positive_record(src, status) for src in rng.sample(avail, need))
    return out


def assemble_balanced(
    hallu: Sequence[HalluRecord],
    positives_pool: Sequence[SourceRecord],
    seed: int,
) -> list[HalluRecord]:
    """All hallucinated records plus an equal number of No Hallucination
    records (gold output verbatim), mirroring the task-kind distribution of
    the hallucinated half. Deterministic under `seed`."""
    if not hallu:
        return []
    kind_counts: dict[str, int] = {}
    for rec in hallu:
        kind_counts[rec.task_kind] = kind_counts.get(rec.task_kind, 0) + 1
    targets = largest_remainder(len(hallu), kind_counts)
    rng = substream(seed, "balance")
    positives = _sample_positives(positives_pool, targets, rng, status="annotated_pass")
    return list(hallu) + positives


def ratio_sample(
    pools: dict[str, Sequence[HalluRecord]],
    targets: dict[str, int],
    positives_pool: Sequence[SourceRecord],
    positive_fraction: float = 0.5,
    seed: int = 0,
) -> list[HalluRecord]:
    """Draw a training mixture: per-type hallucinated targets plus positives
    at `positive_fraction` of the hallucinated count (round-half-up), with the
    positives mirroring the hallucinated task distribution.

    A permutation-insensitive function of the pool contents: pools are
    canonicalized by record id before seeded sampling.
    """
    rng = substream(seed, "ratio_sample")
    chosen: list[HalluRecord] = []
    for type_id in sorted(targets):
        need = targets[type_id]
        pool = sorted(pools.get(type_id, []), key=lambda r: r.id)
        if len(pool) < need:
            raise PoolTooSmall(type_id, len(pool), need)
        chosen.extend(rng.sample(pool, need))
    n_pos = round_half_up(positive_fraction * len(chosen))
    kind_counts: dict[str, int] = {}
    for rec in chosen:
        kind_counts[rec.task_kind] = kind_counts.get(rec.task_kind, 0) + 1
    per_kind = largest_remainder(n_pos, kind_counts)
    positives = _sample_positives(positives_pool, per_kind, rng, status="filtered_pass")
    return chosen + positives


def stats(records: Sequence[HalluRecord], taxonomy: Taxonomy | None = None) -> DatasetStats:
    taxonomy = taxonomy or default_taxonomy()
    per_type: dict[str, int] = {}
    per_task: dict[str, int] = {}
    negatives = 0
    for rec in records:
        per_task[rec.task_kind] = per_task.get(rec.task_kind, 0) + 1
        if rec.label.kind is LabelKind.NO_HALLUCINATION:
            negatives += 1
        else:
            key = taxonomy.label_key(rec.label)
            per_type[key] = per_type.get(key, 0) + 1
    total = len(records)
    return DatasetStats(
        per_type=per_type,
        per_task=per_task,
        positives=total - negatives,
        negatives=negatives,
        total=total,
    )
