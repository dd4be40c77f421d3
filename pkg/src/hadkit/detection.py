"""Detector prompt construction (fine-grained, binary, baseline few-shot),
response parsing into typed verdicts, and batched detection runs at
temperature 0 with optional knowledge augmentation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from .corpus import HalluRecord, _load_jsonl
from .errors import HadkitError, SchemaError
from .gateway import CompletionRequest, Gateway
from .retrieval import DEFAULT_TOP_K, build_query, insert_knowledge
from .taxonomy import (
    BINARY_HALLUCINATED_NAME,
    NEGATIVE_SYNONYMS,
    NO_HALLUCINATION_NAME,
    Label,
    LabelKind,
    Taxonomy,
    default_taxonomy,
)


class PromptMode(Enum):
    FINE_GRAINED = "fine"
    BINARY = "binary"
    BASELINE_FEW_SHOT = "baseline"


@dataclass
class DetectionResult:
    predicted: Label
    span: str
    correction: str
    raw: str
    knowledge_used: list[str] | None = None
    error: str | None = None  # transport_error message when the call failed


_INSTRUCTION_HEAD = (
    "Given a pair of task input and task output, your goal is to detect whether "
    "the task output contains any hallucination."
)
_FINE_TAIL = (
    "If a hallucination is present, specify the type of hallucination, identify "
    "the hallucination span, and provide the correct version of the output."
)
_BINARY_TAIL = (
    "If a hallucination is present, identify the hallucination span and provide "
    "the correct version of the output."
)
_BASELINE_TAIL = (
    "If a hallucination is present, specify the type of hallucination based on "
    "the type description, identify the hallucination span, and provide the "
    "correct version of the output."
)

TYPE_MARKER = "**Hallucination Type:**"
LABEL_MARKER = "**Hallucination Label:**"
SPAN_MARKER = "**Hallucination Span:**"
CORRECTION_MARKER = "**Correction:**"

# The two fixed baseline exemplars (one clean, one hallucinated). The
# published template leaves them unspecified, so this pair is our own.
BASELINE_EXAMPLES = (
    {
        "task_input": "What is the boiling point of water at sea level?",
        "task_output": "Water boils at 100 degrees Celsius at sea level.",
        "type": NO_HALLUCINATION_NAME,
        "span": "",
        "correction": "",
    },
    {
        "task_input": (
            "Rewrite the passage from the perspective of a different character:\n"
            "Sophie was exhausted after a long day at school."
        ),
        "task_output": "Tom found Sophie exhausted.",
        "type": "Information Omission",
        "span": "after a long day at school.",
        "correction": "Tom found Sophie exhausted after a long day at school.",
    },
)


def _response_block(type_marker: str, type_text: str, span: str, correction: str) -> str:
    return (
        f"{type_marker}\n{type_text}\n\n"
        f"{SPAN_MARKER}\n{span}\n\n"
        f"{CORRECTION_MARKER}\n{correction}"
    )


def build_detection_prompt(
    task_input: str,
    task_output: str,
    mode: PromptMode,
    taxonomy: Taxonomy | None = None,
) -> str:
    """Render the detector prompt for one (input, output) pair."""
    if not task_input or not task_output:
        raise ValueError("task_input and task_output must be nonempty")
    taxonomy = taxonomy or default_taxonomy()
    target = f"### Example ###\n**Task Input:**\n{task_input}\n\n**Task Output:**\n{task_output}"
    if mode is PromptMode.FINE_GRAINED:
        return (
            f"### Instruction ###\n{_INSTRUCTION_HEAD}\n{_FINE_TAIL}\n\n"
            f"{target}\n\n### Your Detection ###"
        )
    if mode is PromptMode.BINARY:
        return (
            f"### Instruction ###\n{_INSTRUCTION_HEAD}\n{_BINARY_TAIL}\n\n"
            f"{target}\n\n### Your Detection ###"
        )
    descriptions = "\n".join(f"{e.display_name}: {e.definition}" for e in taxonomy.entries)
    shots = []
    for ex in BASELINE_EXAMPLES:
        shots.append(
            "### Example ###\n"
            f"**Task Input:**\n{ex['task_input']}\n\n"
            f"**Task Output:**\n{ex['task_output']}\n\n"
            "### Your Detection ###\n\n"
            + _response_block(TYPE_MARKER, ex["type"], ex["span"], ex["correction"])
        )
    return (
        f"### Instruction ###\n{_INSTRUCTION_HEAD}\n{_BASELINE_TAIL}\n\n"
        "### Hallucination Type Description ###\n"
        f"{descriptions}\n\n" + "\n\n".join(shots) + f"\n\n{target}"
    )


def render_detection_response(
    record: HalluRecord, mode: PromptMode, taxonomy: Taxonomy | None = None
) -> str:
    """Render a gold record through the response template (the exact text a
    perfectly behaved detector would emit)."""
    taxonomy = taxonomy or default_taxonomy()
    negative = record.label.kind is LabelKind.NO_HALLUCINATION
    span = "" if negative else record.span
    correction = "" if negative else record.correction
    if mode is PromptMode.BINARY:
        text = NO_HALLUCINATION_NAME if negative else BINARY_HALLUCINATED_NAME
        return _response_block(LABEL_MARKER, text, span, correction)
    text = taxonomy.label_to_wire(record.label)
    return _response_block(TYPE_MARKER, text, span, correction)


def _marker_indices(lines: list[str], marker: str) -> list[int]:
    # A marker only splits sections when it is the entire trimmed line, so
    # spans that merely mention a marker string survive the round trip.
    return [i for i, line in enumerate(lines) if line.strip() == marker]


def _join(lines: list[str]) -> str:
    return "\n".join(lines).strip()


def _label_from_text(text: str, mode: PromptMode, taxonomy: Taxonomy, raw: str) -> Label:
    if mode is PromptMode.BINARY:
        norm = " ".join(text.split()).lower()
        if norm in NEGATIVE_SYNONYMS:
            return Label.no_hallucination()
        if norm:
            return Label.binary_hallucinated()
        return Label.invalid(raw)
    label = taxonomy.parse_label(text)
    if label.is_invalid:
        return Label.invalid(raw)
    return label


def parse_detection_response(
    raw: str, mode: PromptMode, taxonomy: Taxonomy | None = None
) -> DetectionResult:
    """Extract (label, span, correction) from a detector response.

    Sections are anchored to exact marker lines; the last complete marker
    triple wins, so echoed prompt fragments are ignored. A bare negative
    label without span/correction markers is accepted; any other
    missing-marker case yields an Invalid prediction.
    """
    taxonomy = taxonomy or default_taxonomy()
    type_marker = LABEL_MARKER if mode is PromptMode.BINARY else TYPE_MARKER
    lines = raw.split("\n")
    t_idx = _marker_indices(lines, type_marker)
    s_idx = _marker_indices(lines, SPAN_MARKER)
    c_idx = _marker_indices(lines, CORRECTION_MARKER)

    triple = None
    if c_idx:
        c = c_idx[-1]
        s_before = [i for i in s_idx if i < c]
        if s_before:
            s = s_before[-1]
            t_before = [i for i in t_idx if i < s]
            if t_before:
                triple = (t_before[-1], s, c)
    if triple is not None:
        t, s, c = triple
        type_text = _join(lines[t + 1 : s])
        span = _join(lines[s + 1 : c])
        correction = _join(lines[c + 1 :])
        label = _label_from_text(type_text, mode, taxonomy, raw)
        if label.kind is LabelKind.NO_HALLUCINATION:
            span = correction = ""
        return DetectionResult(predicted=label, span=span, correction=correction, raw=raw)

    if t_idx:
        # Negative answers often stop right after the label line.
        rest = lines[t_idx[-1] + 1 :]
        stop = len(rest)
        for i, line in enumerate(rest):
            if line.strip() in (type_marker, SPAN_MARKER, CORRECTION_MARKER):
                stop = i
                break
        label = _label_from_text(_join(rest[:stop]), mode, taxonomy, raw)
        if label.kind is LabelKind.NO_HALLUCINATION:
            return DetectionResult(predicted=label, span="", correction="", raw=raw)
    return DetectionResult(predicted=Label.invalid(raw), span="", correction="", raw=raw)


@dataclass
class KnowledgeConfig:
    retriever: object  # anything with .retrieve(query, k)
    top_k: int = DEFAULT_TOP_K


def run_detection(
    records: Sequence[HalluRecord],
    mode: PromptMode,
    gateway: Gateway,
    endpoint_id: str,
    taxonomy: Taxonomy | None = None,
    knowledge: KnowledgeConfig | None = None,
    max_in_flight: int = 8,
) -> list[tuple[str, DetectionResult]]:
    """One detector call per record (temperature 0, single sample), results
    aligned to input order. With a knowledge config, the task input is
    augmented with retrieved passages before prompting; per-record transport
    failures yield an Invalid result carrying the error message."""
    taxonomy = taxonomy or default_taxonomy()
    reqs = []
    used: list[list[str] | None] = []
    for rec in records:
        task_input = rec.task_input
        passage_ids: list[str] | None = None
        if knowledge is not None:
            query = build_query(rec.task_input, rec.output)
            passages = knowledge.retriever.retrieve(query, knowledge.top_k)
            task_input = insert_knowledge(rec.task_input, passages)
            passage_ids = [p.passage_id for p in passages]
        used.append(passage_ids)
        prompt = build_detection_prompt(task_input, rec.output, mode, taxonomy)
        reqs.append(CompletionRequest(endpoint_id=endpoint_id, prompt=prompt, temperature=0.0))
    results = gateway.complete_batch(reqs, max_in_flight=max_in_flight)

    out: list[tuple[str, DetectionResult]] = []
    for rec, result, passage_ids in zip(records, results, used):
        if isinstance(result, HadkitError):
            out.append(
                (
                    rec.id,
                    DetectionResult(
                        predicted=Label.invalid(""),
                        span="",
                        correction="",
                        raw="",
                        knowledge_used=passage_ids,
                        error=f"transport_error: {result}",
                    ),
                )
            )
            continue
        parsed = parse_detection_response(result.texts[0], mode, taxonomy)
        parsed.knowledge_used = passage_ids
        out.append((rec.id, parsed))
    return out


def save_predictions(
    preds: Sequence[tuple[str, DetectionResult]],
    path: str | Path,
    taxonomy: Taxonomy | None = None,
) -> None:
    taxonomy = taxonomy or default_taxonomy()
    with open(path, "w", encoding="utf-8") as fh:
        for record_id, result in preds:
            row = {
                "record_id": record_id,
                "predicted": taxonomy.label_to_wire(result.predicted),
                "span": result.span,
                "correction": result.correction,
                "raw": result.raw,
                "knowledge_used": result.knowledge_used or [],
            }
            if result.error is not None:
                row["error"] = result.error
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def load_predictions(
    path: str | Path, taxonomy: Taxonomy | None = None
) -> list[tuple[str, DetectionResult]]:
    taxonomy = taxonomy or default_taxonomy()
    out = []
    for lineno, obj in _load_jsonl(path):
        missing = [f for f in ("record_id", "predicted", "span", "correction", "raw") if f not in obj]
        if missing:
            raise SchemaError(f"prediction missing fields: {', '.join(missing)}", line=lineno)
        try:
            label = taxonomy.label_from_wire(obj["predicted"], raw=obj["raw"])
        except Exception as exc:
            raise SchemaError(f"bad predicted label {obj['predicted']!r}: {exc}", line=lineno) from exc
        out.append(
            (
                obj["record_id"],
                DetectionResult(
                    predicted=label,
                    span=obj["span"],
                    correction=obj["correction"],
                    raw=obj["raw"],
                    knowledge_used=obj.get("knowledge_used") or None,
                    error=obj.get("error"),
                ),
            )
        )
    return out
