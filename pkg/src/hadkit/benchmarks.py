"""Adapters that ingest out-of-domain benchmark files into the common record
format and score detector output with each benchmark's metric.

Benchmark files are user-downloaded; adapters validate but never fetch.
Expected item schemas (JSON array or JSONL):

  halueval_qa      {knowledge, question, answer, hallucination: "yes"|"no"}
  halueval_dial    {knowledge, dialogue_history, response, hallucination}
  halueval_summ    {document, summary, hallucination}
  halueval_gen     {user_query, chatgpt_response, hallucination}
  factchd          {question, claim, label: "FACTUAL"|"NON-FACTUAL"}
  faithbench       {source, summary, annotations: [...]}

The halueval_gen field mapping is a reconstruction (the subset's query field
naming varies between releases); override by pre-converting your file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import HalluRecord, Provenance
from .errors import AlignmentError, SchemaError
from .metrics import classification_metrics, micro_f1_positive
from .taxonomy import Label, Taxonomy, collapse_binary, default_taxonomy

SUMMARIZE_QUERY = "Summarize the above document."


@dataclass(frozen=True)
class Placement:
    """Which upstream fields feed the detector prompt."""

    context_source: str | None
    query_source: str
    response_source: str


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    metric: str  # "accuracy" | "micro_f1_positive" | "ba_and_macro_f1"
    placement: Placement
    task_kind: str


BENCHMARKS: dict[str, BenchmarkSpec] = {
    "halueval_qa": BenchmarkSpec(
        "halueval_qa", "accuracy", Placement(None, "knowledge+question", "answer"), "contextual_qa"
    ),
    "halueval_dial": BenchmarkSpec(
        "halueval_dial",
        "accuracy",
        Placement(None, "knowledge+dialogue_history", "response"),
        "dialogue",
    ),
    "halueval_summ": BenchmarkSpec(
        "halueval_summ", "accuracy", Placement("document", "fixed", "summary"), "summarization"
    ),
    "halueval_gen": BenchmarkSpec(
        "halueval_gen", "accuracy", Placement(None, "user_query", "chatgpt_response"), "instruction_following"
    ),
    "factchd": BenchmarkSpec(
        "factchd", "micro_f1_positive", Placement(None, "question", "claim"), "short_form_qa"
    ),
    "faithbench": BenchmarkSpec(
        "faithbench", "ba_and_macro_f1", Placement("source", "fixed", "summary"), "summarization"
    ),
}


def _load_items(path: str | Path) -> list[dict]:
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("["):
        try:
            items = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"benchmark file {path}: invalid JSON: {exc.msg}") from exc
        if not isinstance(items, list):
            raise SchemaError(f"benchmark file {path}: expected a JSON array")
        return items
    items = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            items.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", line=lineno) from exc
    return items


def _require(item: dict, fields: Sequence[str], index: int) -> None:
    missing = [f for f in fields if f not in item]
    if missing:
        raise SchemaError(f"benchmark item missing fields: {', '.join(missing)}", line=index)


def _flag(value, index: int) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ("yes", "no"):
        return value.lower() == "yes"
    raise SchemaError(f"hallucination flag must be yes/no, got {value!r}", line=index)


def _compose_input(context: str | None, query: str) -> str:
    return f"{context}\n\n{query}" if context else query


def _extract(spec: BenchmarkSpec, item: dict, index: int) -> tuple[str, str, bool]:
    """Returns (task_input, task_output, hallucinated) for one item."""
    name = spec.name
    if name == "halueval_qa":
        _require(item, ("knowledge", "question", "answer", "hallucination"), index)
        query = item["knowledge"] + "\n" + item["question"]
        return _compose_input(None, query), item["answer"], _flag(item["hallucination"], index)
    if name == "halueval_dial":
        _require(item, ("knowledge", "dialogue_history", "response", "hallucination"), index)
        query = item["knowledge"] + "\n" + item["dialogue_history"]
        return _compose_input(None, query), item["response"], _flag(item["hallucination"], index)
    if name == "halueval_summ":
        _require(item, ("document", "summary", "hallucination"), index)
        return (
            _compose_input(item["document"], SUMMARIZE_QUERY),
            item["summary"],
            _flag(item["hallucination"], index),
        )
    if name == "halueval_gen":
        _require(item, ("user_query", "chatgpt_response", "hallucination"), index)
        return (
            _compose_input(None, item["user_query"]),
            item["chatgpt_response"],
            _flag(item["hallucination"], index),
        )
    if name == "factchd":
        _require(item, ("question", "claim", "label"), index)
        label = item["label"]
        if label not in ("FACTUAL", "NON-FACTUAL"):
            raise SchemaError(f"factchd label must be FACTUAL or NON-FACTUAL, got {label!r}", line=index)
        return _compose_input(None, item["question"]), item["claim"], label == "NON-FACTUAL"
    if name == "faithbench":
        _require(item, ("source", "summary", "annotations"), index)
        annotations = item["annotations"]
        if not isinstance(annotations, list):
            raise SchemaError("faithbench annotations must be a list", line=index)
        # Any hallucination annotation collapses the item to the positive class.
        return _compose_input(item["source"], SUMMARIZE_QUERY), item["summary"], bool(annotations)
    raise SchemaError(f"unknown benchmark {name!r}")


def get_spec(name: str) -> BenchmarkSpec:
    spec = BENCHMARKS.get(name)
    if spec is None:
        raise SchemaError(f"unknown benchmark {name!r}; known: {', '.join(sorted(BENCHMARKS))}")
    return spec


def ingest(spec: BenchmarkSpec, path: str | Path) -> list[HalluRecord]:
    """Map every benchmark item to one binary-labeled record (in file order)."""
    records = []
    for index, item in enumerate(_load_items(path)):
        if not isinstance(item, dict):
            raise SchemaError("benchmark item must be an object", line=index)
        task_input, task_output, hallucinated = _extract(spec, item, index)
        records.append(
            HalluRecord(
                id=f"{spec.name}-{index:05d}",
                source_id=f"{spec.name}-{index:05d}",
                task_kind=spec.task_kind,
                task_input=task_input,
                output=task_output,
                label=Label.binary_hallucinated() if hallucinated else Label.no_hallucination(),
                span="",
                correction="",
                provenance=Provenance(generator_model=spec.name),
                status="annotated_pass",
            )
        )
    return records


def score(
    spec: BenchmarkSpec,
    gold: Sequence[HalluRecord],
    preds: Sequence[tuple[str, "DetectionResult"]],
    taxonomy: Taxonomy | None = None,
) -> dict:
    """Dispatch to the benchmark's metric over the binary label space."""
    taxonomy = taxonomy or default_taxonomy()
    by_id = {record_id: result for record_id, result in preds}
    gold_ids = [rec.id for rec in gold]
    missing = [i for i in gold_ids if i not in by_id]
    extra = [i for i in by_id if i not in set(gold_ids)]
    if missing or extra:
        raise AlignmentError(missing, extra)
    bin_gold = ["yes" if collapse_binary(rec.label) else "no" for rec in gold]
    bin_pred = ["yes" if collapse_binary(by_id[rec.id].predicted) else "no" for rec in gold]

    report: dict = {"benchmark": spec.name, "metric": spec.metric, "n_items": len(gold)}
    if spec.metric == "accuracy":
        accuracy, _, _, _ = classification_metrics(bin_gold, bin_pred, class_order=["yes", "no"])
        report["accuracy"] = accuracy
    elif spec.metric == "micro_f1_positive":
        report["micro_f1_positive"] = micro_f1_positive(bin_gold, bin_pred, positive="yes")
    elif spec.metric == "ba_and_macro_f1":
        _, balanced, macro, _ = classification_metrics(bin_gold, bin_pred, class_order=["yes", "no"])
        report["balanced_accuracy"] = balanced
        report["macro_f1"] = macro
    else:
        raise SchemaError(f"unknown benchmark metric {spec.metric!r}")
    return report
