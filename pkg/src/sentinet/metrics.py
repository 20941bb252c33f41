"""Confusion matrix and the five classification measures.

The confusion matrix is oriented rows = predicted, columns = actual.
Multiclass scores reduce each class one-vs-rest to TP/FP/FN/TN counts and
macro-average the per-class values.  AUC here is the single-threshold
balanced mean of sensitivity and specificity,

    AUC = (R - FP/(FP+TN) + 1) / 2,

not a ranked-score ROC integral.  Any measure whose denominator is zero
is reported as 0 by convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LengthMismatch",
    "LabelOutOfRange",
    "ConfusionMatrix3",
    "BinaryCounts",
    "confusion",
    "one_vs_rest",
    "precision",
    "recall",
    "f1",
    "accuracy",
    "auc",
    "ClassScores",
    "MacroReport",
    "macro_report",
    "report_to_csv",
    "confusion_to_csv",
]

_EXTERNAL = ("-1", "0", "1")


class LengthMismatch(ValueError):
    pass


class LabelOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix3:
    """3x3 count table; cell [p][a] counts predicted p with actual a."""

    counts: np.ndarray

    def __post_init__(self):
        if self.counts.shape != (3, 3):
            raise ValueError(f"expected 3x3 counts, got {self.counts.shape}")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class BinaryCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(predictions, actuals) -> ConfusionMatrix3:
    """Count (predicted, actual) pairs into a ConfusionMatrix3."""
    predictions = list(predictions)
    actuals = list(actuals)
    if len(predictions) != len(actuals):
        raise LengthMismatch(
            f"{len(predictions)} predictions vs {len(actuals)} actuals"
        )
    counts = np.zeros((3, 3), dtype=np.int64)
    for p, a in zip(predictions, actuals):
        if not (0 <= p <= 2 and 0 <= a <= 2):
            raise LabelOutOfRange(f"labels must be 0, 1 or 2: got ({p}, {a})")
        counts[p][a] += 1
    counts.setflags(write=False)
    return ConfusionMatrix3(counts)


def one_vs_rest(cm: ConfusionMatrix3, positive: int) -> BinaryCounts:
    """Collapse the 3x3 table to binary counts for one positive class."""
    c = cm.counts
    tp = int(c[positive, positive])
    fp = int(c[positive].sum()) - tp
    fn = int(c[:, positive].sum()) - tp
    tn = cm.total - tp - fp - fn
    return BinaryCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def precision(c: BinaryCounts) -> float:
    return _ratio(c.tp, c.tp + c.fp)


def recall(c: BinaryCounts) -> float:
    return _ratio(c.tp, c.tp + c.fn)


def f1(c: BinaryCounts) -> float:
    p, r = precision(c), recall(c)
    return _ratio(2.0 * p * r, p + r)


def accuracy(c: BinaryCounts) -> float:
    return _ratio(c.tp + c.tn, c.total)


def auc(c: BinaryCounts) -> float:
    false_positive_rate = _ratio(c.fp, c.fp + c.tn)
    return (recall(c) - false_positive_rate + 1.0) / 2.0


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    auc: float


@dataclass(frozen=True)
class MacroReport:
    per_class: tuple[ClassScores, ClassScores, ClassScores]
    macro: ClassScores
    accuracy: float


def macro_report(cm: ConfusionMatrix3) -> MacroReport:
    """Per-class one-vs-rest scores, their unweighted means, and accuracy."""
    per_class = []
    for label in range(3):
        counts = one_vs_rest(cm, label)
        per_class.append(
            ClassScores(
                precision=precision(counts),
                recall=recall(counts),
                f1=f1(counts),
                auc=auc(counts),
            )
        )
    macro = ClassScores(
        precision=sum(s.precision for s in per_class) / 3.0,
        recall=sum(s.recall for s in per_class) / 3.0,
        f1=sum(s.f1 for s in per_class) / 3.0,
        auc=sum(s.auc for s in per_class) / 3.0,
    )
    overall = _ratio(float(np.trace(cm.counts)), cm.total)
    return MacroReport(per_class=tuple(per_class), macro=macro, accuracy=overall)


def report_to_csv(report: MacroReport) -> str:
    """Report export: one row per class (-1, 0, 1), a macro row, then accuracy."""
    lines = ["class,precision,recall,f1,auc"]
    for name, scores in zip(_EXTERNAL, report.per_class):
        lines.append(
            f"{name},{scores.precision!r},{scores.recall!r},"
            f"{scores.f1!r},{scores.auc!r}"
        )
    m = report.macro
    lines.append(f"macro,{m.precision!r},{m.recall!r},{m.f1!r},{m.auc!r}")
    lines.append(f"accuracy,{report.accuracy!r}")
    return "\n".join(lines) + "\n"


def confusion_to_csv(cm: ConfusionMatrix3) -> str:
    """3x3 export with labeled axes; rows are predicted classes."""
    lines = ["predicted\\actual," + ",".join(_EXTERNAL)]
    for p in range(3):
        row = ",".join(str(int(cm.counts[p, a])) for a in range(3))
        lines.append(f"{_EXTERNAL[p]},{row}")
    return "\n".join(lines) + "\n"
