"""Automatic verification of raw candidates against the per-type criteria via
a judging endpoint; verdict parsing and pass-rate accounting."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .corpus import HalluRecord
from .errors import HadkitError, LabelMismatch
from .gateway import CompletionRequest, Gateway
from .taxonomy import LabelKind, Taxonomy, TaxonomyEntry, default_taxonomy

CHECK_INSTRUCTION = (
    "Given a task input, a task output containing an error, and a specified span "
    "that represents the erroneous part, your goal is to evaluate whether the "
    "task output and specified span correspond to the specified error type, "
    "based on the provided criteria. For each criterion, provide an analysis "
    "that explains how the task output and specified span either satisfy or "
    "fail to meet it. Finally, aggregate all the analysis carefully, and "
    'conclude with "Conclusion: Yes" if all criteria are met, or '
    '"Conclusion: No" if they are not.'
)


class Conclusion(Enum):
    YES = "yes"
    NO = "no"
    UNPARSEABLE = "unparseable"


@dataclass
class Verdict:
    conclusion: Conclusion
    analysis: str  # the verifier's full reasoning (the raw text when unparseable)


def build_check_prompt(record: HalluRecord, entry: TaxonomyEntry) -> str:
    """Render the judging prompt: instruction, type description, criteria
    (general ones first), then the record under review."""
    if record.label.kind is not LabelKind.TYPE or record.label.type_id != entry.type_id:
        raise LabelMismatch(
            f"record {record.id} is not labeled {entry.type_id}; cannot build its check prompt"
        )
    criteria = "\n".join(entry.criteria)
    return (
        "### Instruction ###\n"
        f"{CHECK_INSTRUCTION}\n\n"
        "### Error Type Description ###\n"
        f"{entry.definition}\n\n"
        "### Criteria ###\n"
        f"{criteria}\n\n"
        "### Example ###\n"
        "**Task Input:**\n"
        f"{record.task_input}\n\n"
        "**Task Output:**\n"
        f"{record.output}\n\n"
        "**Specified Span:**\n"
        f"{record.span}\n\n"
        "### Your Judgement ###"
    )


_CONCLUSION_RE = re.compile(r"conclusion:\s*([a-zA-Z]+)", re.IGNORECASE)


def parse_verdict(raw: str) -> Verdict:
    """Read the token after the last "Conclusion:"; anything other than a
    clean yes/no is Unparseable (a value, never an error)."""
    matches = list(_CONCLUSION_RE.finditer(raw))
    if not matches:
        return Verdict(Conclusion.UNPARSEABLE, raw)
    token = matches[-1].group(1).lower()
    if token == "yes":
        return Verdict(Conclusion.YES, raw)
    if token == "no":
        return Verdict(Conclusion.NO, raw)
    return Verdict(Conclusion.UNPARSEABLE, raw)


@dataclass
class FilterReport:
    total: int
    passed: int
    failed: int
    deferred: int
    pass_rate: float
    per_type: dict[str, dict]
    deferred_ids: list[str] = field(default_factory=list)
    unparseable: int = 0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "passed": self.passed,
            "failed": self.failed,
            "deferred": self.deferred,
            "pass_rate": self.pass_rate,
            "per_type": self.per_type,
            "deferred_ids": self.deferred_ids,
            "unparseable": self.unparseable,
        }


def filter_run(
    records: Sequence[HalluRecord],
    gateway: Gateway,
    endpoint_id: str,
    taxonomy: Taxonomy | None = None,
    max_in_flight: int = 8,
) -> tuple[list[HalluRecord], list[HalluRecord], FilterReport]:
    """Judge each record once at temperature 0.

    Yes moves a record to filtered_pass, No (and unparseable verdicts, which
    fail closed) to filtered_fail. Endpoint failures defer the record: it is
    left raw, excluded from the pass-rate denominator, and listed in the
    report.
    """
    taxonomy = taxonomy or default_taxonomy()
    reqs = []
    for rec in records:
        if rec.label.kind is not LabelKind.TYPE:
            raise LabelMismatch(f"record {rec.id} has no hallucination type; nothing to verify")
        entry = taxonomy.lookup(rec.label.type_id or "")
        prompt = build_check_prompt(rec, entry)
        reqs.append(CompletionRequest(endpoint_id=endpoint_id, prompt=prompt, temperature=0.0))
    results = gateway.complete_batch(reqs, max_in_flight=max_in_flight)

    passed: list[HalluRecord] = []
    failed: list[HalluRecord] = []
    deferred_ids: list[str] = []
    unparseable = 0
    per_type: dict[str, dict] = {}
    for rec, result in zip(records, results):
        type_name = taxonomy.label_key(rec.label)
        bucket = per_type.setdefault(type_name, {"total": 0, "passed": 0, "pass_rate": 0.0})
        if isinstance(result, HadkitError):
            deferred_ids.append(rec.id)
            continue
        verdict = parse_verdict(result.texts[0])
        bucket["total"] += 1
        if verdict.conclusion is Conclusion.YES:
            rec.advance_status("filtered_pass")
            bucket["passed"] += 1
            passed.append(rec)
        else:
            if verdict.conclusion is Conclusion.UNPARSEABLE:
                unparseable += 1
                rec.extras["fail_reason"] = "unparseable_verdict"
            rec.advance_status("filtered_fail")
            failed.append(rec)
    for bucket in per_type.values():
        bucket["pass_rate"] = bucket["passed"] / bucket["total"] if bucket["total"] else 0.0
    judged = len(passed) + len(failed)
    report = FilterReport(
        total=len(records),
        passed=len(passed),
        failed=len(failed),
        deferred=len(deferred_ids),
        pass_rate=len(passed) / judged if judged else 0.0,
        per_type=per_type,
        deferred_ids=deferred_ids,
        unparseable=unparseable,
    )
    return passed, failed, report
