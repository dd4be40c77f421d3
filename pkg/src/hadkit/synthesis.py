"""Hallucination injection: per-type prompts with independently sampled
3-shot examples, candidate sampling through the gateway, and extraction of
the modified output + error span from responses."""

from __future__ import annotations

import importlib.resources
import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from .corpus import HalluRecord, Provenance, SourceRecord
from .errors import HadkitError, IncompatibleType, ParseError, PoolTooSmall, SchemaError
from .gateway import CompletionRequest, Gateway
from .rng import substream
from .taxonomy import Label, Taxonomy, TaxonomyEntry, default_taxonomy

log = logging.getLogger(__name__)

N_SHOTS = 3
DEFAULT_CANDIDATES = 5
DEFAULT_TEMPERATURE = 1.0

INJECTION_INSTRUCTION = (
    "Given a pair of task input and output, your objective is to create an error "
    "data by intentionally modifying the given task output. Inject the error "
    "exactly as the error type description, without introducing any other "
    "modifications. The error should be restricted to a single error span, which "
    "is the part of the task output that you modify. Do not include any other "
    "errors or changes outside of the designated error span. Provide the modified "
    "output and the error span in your response."
)


@dataclass
class FewShotExample:
    type_id: str
    task_input: str
    task_output: str
    modified_output: str
    error_span: str


@dataclass
class InjectionCandidate:
    modified_output: str
    error_span: str
    raw: str


def load_fewshot_pool(path: str | Path | None = None) -> list[FewShotExample]:
    """Load the few-shot pool (the packaged starter pool when no path given).

    Every example's error span must be a contiguous substring of its modified
    output (a whole-output span is the degenerate case).
    """
    if path is None:
        text = (
            importlib.resources.files("hadkit")
            .joinpath("data/fewshot_pool.jsonl")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    pool = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"few-shot pool: invalid JSON: {exc.msg}", line=lineno) from exc
        missing = [
            f
            for f in ("type_id", "task_input", "task_output", "modified_output", "error_span")
            if f not in obj
        ]
        if missing:
            raise SchemaError(f"few-shot example missing fields: {', '.join(missing)}", line=lineno)
        example = FewShotExample(
            obj["type_id"], obj["task_input"], obj["task_output"], obj["modified_output"], obj["error_span"]
        )
        if example.error_span not in example.modified_output:
            raise SchemaError(
                f"few-shot example span is not a substring of its modified output "
                f"(type {example.type_id})",
                line=lineno,
            )
        pool.append(example)
    return pool


def sample_shots(pool: Sequence[FewShotExample], type_id: str, rng, k: int = N_SHOTS) -> list[FewShotExample]:
    """Sample `k` examples of one type without replacement."""
    candidates = [e for e in pool if e.type_id == type_id]
    if len(candidates) < k:
        raise PoolTooSmall(f"few-shot examples of type {type_id}", len(candidates), k)
    return rng.sample(candidates, k)


def render_shot(shot: FewShotExample) -> str:
    return (
        "### Example ###\n"
        "**Task Input:**\n"
        f"{shot.task_input}\n"
        "**Task Output:**\n"
        f"{shot.task_output}\n"
        "**Modified Output:**\n"
        f"{shot.modified_output}\n"
        "**Error Span**:\n"
        f"{shot.error_span}"
    )


def build_injection_prompt(
    source: SourceRecord,
    entry: TaxonomyEntry,
    shots: Sequence[FewShotExample],
    taxonomy: Taxonomy | None = None,
) -> str:
    """Render the injection prompt: instruction, type description, the three
    example blocks, then the target's input/output."""
    taxonomy = taxonomy or default_taxonomy()
    if entry.type_id not in taxonomy.allowed_types_for(source.task_kind):
        raise IncompatibleType(entry.type_id, source.task_kind)
    if len(shots) != N_SHOTS:
        raise ValueError(f"exactly {N_SHOTS} shots required, got {len(shots)}")
    for shot in shots:
        if shot.type_id != entry.type_id:
            raise ValueError(
                f"shot of type {shot.type_id} passed for an {entry.type_id} prompt"
            )
    parts = [
        "### Instruction ###\n" + INJECTION_INSTRUCTION,
        "### Error Type Description ###\n" + entry.definition,
    ]
    parts.extend(render_shot(shot) for shot in shots)
    parts.append(
        "### Example ###\n"
        "**Task Input:**\n"
        f"{source.task_input}\n"
        "**Task Output:**\n"
        f"{source.gold_output}"
    )
    return "\n\n".join(parts)


# Marker tolerance is a closed list; anything else fails the parse.
_MODIFIED_RE = re.compile(r"\*\*Modified Output(?::\*\*|\*\*:)")
_SPAN_RE = re.compile(r"\*\*Error (?:Span\*\*:|Span:\*\*|span:\*\*)")


def parse_injection_response(raw: str) -> InjectionCandidate:
    """Extract (modified_output, error_span) from a response.

    Anchored to the last marker pair so echoed example blocks are skipped;
    missing markers or empty sections fail closed with ParseError.
    """
    span_marks = list(_SPAN_RE.finditer(raw))
    if not span_marks:
        raise ParseError(raw, "error-span marker absent")
    span_mark = span_marks[-1]
    mod_marks = [m for m in _MODIFIED_RE.finditer(raw) if m.start() < span_mark.start()]
    if not mod_marks:
        raise ParseError(raw, "modified-output marker absent")
    mod_mark = mod_marks[-1]
    modified = raw[mod_mark.end() : span_mark.start()].strip()
    span = raw[span_mark.end() :].strip()
    if not modified:
        raise ParseError(raw, "empty modified output")
    if not span:
        raise ParseError(raw, "empty error span")
    return InjectionCandidate(modified_output=modified, error_span=span, raw=raw)


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class InjectionOutcome:
    records: list[HalluRecord]
    n_sources: int
    n_dropped: int
    errors: list[tuple[str, str]] = field(default_factory=list)  # (source_id, message)


def inject(
    sources: Sequence[SourceRecord],
    type_id: str,
    gateway: Gateway,
    endpoint_id: str,
    pool: Sequence[FewShotExample] | None = None,
    taxonomy: Taxonomy | None = None,
    n_candidates: int = DEFAULT_CANDIDATES,
    temperature: float = DEFAULT_TEMPERATURE,
    seed: int = 0,
    max_in_flight: int = 8,
    clock: Callable[[], str] = _utc_now,
) -> InjectionOutcome:
    """Inject one hallucination type into every source.

    One gateway call per source with `n_candidates` samples; each parseable
    candidate becomes a raw HalluRecord whose correction is the source's gold
    output. Unparseable candidates are dropped (counted), per-source endpoint
    failures are recorded and the run continues.
    """
    taxonomy = taxonomy or default_taxonomy()
    if not sources:
        raise ValueError("sources must be nonempty")
    pool = pool if pool is not None else load_fewshot_pool()
    entry = taxonomy.lookup(type_id)
    rng = substream(seed, f"synthesis:{entry.type_id}")
    # Shots are drawn independently per source item, before dispatch, so the
    # prompt set is a pure function of (sources, pool, seed).
    reqs = []
    for source in sources:
        shots = sample_shots(pool, entry.type_id, rng)
        prompt = build_injection_prompt(source, entry, shots, taxonomy)
        reqs.append(
            CompletionRequest(
                endpoint_id=endpoint_id,
                prompt=prompt,
                temperature=temperature,
                n_samples=n_candidates,
            )
        )
    results = gateway.complete_batch(reqs, max_in_flight=max_in_flight)

    records: list[HalluRecord] = []
    n_dropped = 0
    errors: list[tuple[str, str]] = []
    injected_at = clock()
    endpoint = gateway.registry.get(endpoint_id)
    generator_model = endpoint.model or endpoint.endpoint_id
    for source, result in zip(sources, results):
        if isinstance(result, HadkitError):
            errors.append((source.id, str(result)))
            continue
        for idx, text in enumerate(result.texts):
            try:
                candidate = parse_injection_response(text)
            except ParseError:
                n_dropped += 1
                continue
            extras = {}
            if candidate.error_span not in candidate.modified_output:
                extras["span_unanchored"] = True
            records.append(
                HalluRecord(
                    id=f"{source.id}-{entry.type_id}-c{idx}",
                    source_id=source.id,
                    task_kind=source.task_kind,
                    task_input=source.task_input,
                    output=candidate.modified_output,
                    label=Label.of_type(entry.type_id),
                    span=candidate.error_span,
                    correction=source.gold_output,
                    provenance=Provenance(
                        generator_model=generator_model,
                        temperature=temperature,
                        candidate_index=idx,
                        injected_at=injected_at,
                    ),
                    status="raw",
                    extras=extras,
                )
            )
    if n_dropped:
        log.info("injection dropped %d unparseable candidates", n_dropped)
    for source_id, message in errors:
        log.warning("injection failed for source %s: %s", source_id, message)
    return InjectionOutcome(
        records=records, n_sources=len(sources), n_dropped=n_dropped, errors=errors
    )
