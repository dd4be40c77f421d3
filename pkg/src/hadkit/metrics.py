"""Evaluation mathematics: classification metrics with fractional label
weights, word-level span/correction P/R/F1, and confusion matrices.

All functions are pure and accumulate in a fixed order, so results are
bit-reproducible across runs and machines. Predictions may be a plain class
key or a weight map over classes summing to 1 (used for detectors that emit
half-credit labels such as "unverifiable").
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .errors import AlignmentError, LengthMismatch
from .taxonomy import Taxonomy, collapse_binary, default_taxonomy

Pred = Union[str, Mapping[str, float]]


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def _prf(precision: float, recall: float) -> PRF:
    denom = precision + recall
    f1 = 2.0 * precision * recall / denom if denom > 0 else 0.0
    return PRF(precision, recall, f1)


def word_prf(gold_text: str, pred_text: str) -> PRF:
    """Word-level P/R/F1: whitespace tokenization, case-sensitive, multiset
    intersection. Both empty -> (1,1,1); exactly one empty -> (0,0,0)."""
    gold_tokens = gold_text.split()
    pred_tokens = pred_text.split()
    if not gold_tokens and not pred_tokens:
        return PRF(1.0, 1.0, 1.0)
    if not gold_tokens or not pred_tokens:
        return PRF(0.0, 0.0, 0.0)
    counts: dict[str, int] = {}
    for tok in gold_tokens:
        counts[tok] = counts.get(tok, 0) + 1
    overlap = 0
    for tok in pred_tokens:
        if counts.get(tok, 0) > 0:
            counts[tok] -= 1
            overlap += 1
    return _prf(overlap / len(pred_tokens), overlap / len(gold_tokens))


def _weights(pred: Pred) -> dict[str, float]:
    if isinstance(pred, str):
        return {pred: 1.0}
    return dict(pred)


@dataclass
class ConfusionMatrix:
    """Real-valued confusion counts: rows are gold classes, columns predicted.

    Classes are the label kinds present in gold or predictions; row sums equal
    per-gold-class support.
    """

    classes: list[str]
    cells: list[list[float]]
    support: dict[str, float]

    def row_sum(self, cls: str) -> float:
        i = self.classes.index(cls)
        return sum(self.cells[i])

    def col_sum(self, cls: str) -> float:
        j = self.classes.index(cls)
        total = 0.0
        for row in self.cells:
            total += row[j]
        return total

    def total_mass(self) -> float:
        total = 0.0
        for row in self.cells:
            for cell in row:
                total += cell
        return total

    def to_dict(self) -> dict:
        return {"classes": self.classes, "cells": self.cells, "support": self.support}

    def to_csv(self) -> str:
        def quote(text: str) -> str:
            if any(ch in text for ch in ',"\n'):
                return '"' + text.replace('"', '""') + '"'
            return text

        lines = ["gold\\predicted," + ",".join(quote(c) for c in self.classes)]
        for cls, row in zip(self.classes, self.cells):
            lines.append(quote(cls) + "," + ",".join(repr(v) for v in row))
        return "\n".join(lines) + "\n"


def _present_classes(gold: Sequence[str], pred: Sequence[Pred], class_order: Sequence[str] | None) -> list[str]:
    present: dict[str, None] = {}
    for g in gold:
        present.setdefault(g, None)
    for p in pred:
        for cls, w in _weights(p).items():
            if w != 0.0:
                present.setdefault(cls, None)
    if class_order is None:
        return sorted(present)
    ordered = [c for c in class_order if c in present]
    ordered.extend(c for c in present if c not in set(class_order))
    return ordered


def classification_metrics(
    gold: Sequence[str],
    pred: Sequence[Pred],
    class_order: Sequence[str] | None = None,
) -> tuple[float, float, float, ConfusionMatrix]:
    """Accuracy, balanced accuracy, macro-F1, and the confusion matrix.

    Accuracy is the mean weight landed on the correct class. Balanced accuracy
    averages per-class recall over gold classes. Macro-F1 averages per-class
    F1 over every class present in gold or predictions (0/0 F1 counts as 0).
    """
    if len(gold) != len(pred):
        raise LengthMismatch(len(gold), len(pred))
    classes = _present_classes(gold, pred, class_order)
    index = {c: i for i, c in enumerate(classes)}
    n = len(classes)
    cells = [[0.0] * n for _ in range(n)]
    support = {c: 0.0 for c in classes}
    correct = 0.0
    for g, p in zip(gold, pred):
        gi = index[g]
        support[g] += 1.0
        for cls, w in _weights(p).items():
            cells[gi][index[cls]] += w
            if cls == g:
                correct += w
    cm = ConfusionMatrix(classes, cells, support)
    n_items = len(gold)
    accuracy = correct / n_items if n_items else 0.0

    recalls = []
    f1s = []
    for i, cls in enumerate(classes):
        sup = support[cls]
        col = 0.0
        for row in cells:
            col += row[i]
        tp = cells[i][i]
        recall = tp / sup if sup > 0 else 0.0
        precision = tp / col if col > 0 else 0.0
        if sup > 0:
            recalls.append(recall)
        if sup > 0 or col > 0:
            f1s.append(_prf(precision, recall).f1)
    balanced_accuracy = sum(recalls) / len(recalls) if recalls else 0.0
    macro_f1 = sum(f1s) / len(f1s) if f1s else 0.0
    return accuracy, balanced_accuracy, macro_f1, cm


def micro_f1_positive(gold: Sequence[str], pred: Sequence[Pred], positive: str) -> float:
    """F1 from pooled TP/FP/FN with `positive` as the positive class."""
    if len(gold) != len(pred):
        raise LengthMismatch(len(gold), len(pred))
    tp = fp = fn = 0.0
    for g, p in zip(gold, pred):
        w_pos = _weights(p).get(positive, 0.0)
        if g == positive:
            tp += w_pos
            fn += 1.0 - w_pos
        else:
            fp += w_pos
    denom = 2.0 * tp + fp + fn
    return 2.0 * tp / denom if denom > 0 else 0.0


@dataclass
class ClassReport:
    cls: str
    prf: PRF
    support: float

    def to_dict(self) -> dict:
        return {"class": self.cls, **self.prf.to_dict(), "support": self.support}


@dataclass
class MetricsReport:
    binary_accuracy: float
    fine_accuracy: float
    balanced_accuracy: float
    macro_f1: float
    micro_f1_positive: float
    span: PRF
    correction: PRF
    confusion: ConfusionMatrix
    per_class: list[ClassReport]
    n_items: int
    n_hallucinated: int

    def to_dict(self) -> dict:
        return {
            "binary_accuracy": self.binary_accuracy,
            "fine_accuracy": self.fine_accuracy,
            "balanced_accuracy": self.balanced_accuracy,
            "macro_f1": self.macro_f1,
            "micro_f1_positive": self.micro_f1_positive,
            "span": self.span.to_dict(),
            "correction": self.correction.to_dict(),
            "per_class": [c.to_dict() for c in self.per_class],
            "confusion": self.confusion.to_dict(),
            "n_items": self.n_items,
            "n_hallucinated": self.n_hallucinated,
        }


def per_class_reports(cm: ConfusionMatrix) -> list[ClassReport]:
    out = []
    for i, cls in enumerate(cm.classes):
        tp = cm.cells[i][i]
        col = 0.0
        for row in cm.cells:
            col += row[i]
        sup = cm.support[cls]
        precision = tp / col if col > 0 else 0.0
        recall = tp / sup if sup > 0 else 0.0
        out.append(ClassReport(cls, _prf(precision, recall), sup))
    return out


def _mean_prf(items: Sequence[PRF]) -> PRF:
    if not items:
        return PRF(0.0, 0.0, 0.0)
    n = len(items)
    p = sum(x.precision for x in items) / n
    r = sum(x.recall for x in items) / n
    f = sum(x.f1 for x in items) / n
    return PRF(p, r, f)


def evaluate(gold, preds, taxonomy: Taxonomy | None = None) -> MetricsReport:
    """Score detection results against gold records.

    `gold` is a sequence of HalluRecords; `preds` a sequence of
    (record_id, DetectionResult) pairs covering exactly the gold ids.
    Span and correction P/R/F1 are computed per item over gold-hallucinated
    samples only, then arithmetic-mean averaged; an Invalid prediction scores
    (0,0,0) on both rather than being skipped.
    """
    taxonomy = taxonomy or default_taxonomy()
    by_id = {}
    for record_id, result in preds:
        by_id[record_id] = result
    gold_ids = [rec.id for rec in gold]
    missing = [i for i in gold_ids if i not in by_id]
    extra = [i for i in by_id if i not in set(gold_ids)]
    if missing or extra:
        raise AlignmentError(missing, extra)

    gold_keys = []
    pred_keys = []
    bin_gold = []
    bin_pred = []
    span_prfs = []
    corr_prfs = []
    n_hallu = 0
    for rec in gold:
        result = by_id[rec.id]
        gold_keys.append(taxonomy.label_key(rec.label))
        pred_keys.append(taxonomy.label_key(result.predicted))
        g_bin = collapse_binary(rec.label)
        p_bin = collapse_binary(result.predicted)
        bin_gold.append("yes" if g_bin else "no")
        bin_pred.append("yes" if p_bin else "no")
        if g_bin:
            n_hallu += 1
            if result.predicted.is_invalid:
                span_prfs.append(PRF(0.0, 0.0, 0.0))
                corr_prfs.append(PRF(0.0, 0.0, 0.0))
            else:
                span_prfs.append(word_prf(rec.span, result.span))
                corr_prfs.append(word_prf(rec.correction, result.correction))

    binary_accuracy, _, _, _ = classification_metrics(bin_gold, bin_pred, class_order=["yes", "no"])
    fine_accuracy, balanced_accuracy, macro_f1, cm = classification_metrics(
        gold_keys, pred_keys, class_order=taxonomy.class_order()
    )
    micro = micro_f1_positive(bin_gold, bin_pred, positive="yes")
    return MetricsReport(
        binary_accuracy=binary_accuracy,
        fine_accuracy=fine_accuracy,
        balanced_accuracy=balanced_accuracy,
        macro_f1=macro_f1,
        micro_f1_positive=micro,
        span=_mean_prf(span_prfs),
        correction=_mean_prf(corr_prfs),
        confusion=cm,
        per_class=per_class_reports(cm),
        n_items=len(gold_keys),
        n_hallucinated=n_hallu,
    )
