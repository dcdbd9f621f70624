"""Binary confusion matrices, the four standard scores, and model comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMatrix, LengthMismatch, NonBinaryLabel, TooFewModels


@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int

    def __post_init__(self):
        if min(self.tn, self.fp, self.fn, self.tp) < 0:
            raise ValueError("confusion cells must be non-negative")

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    def to_dict(self) -> dict:
        return {"tn": self.tn, "fp": self.fp, "fn": self.fn, "tp": self.tp}


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    zero_division_notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class ComparisonReport:
    entries: tuple[tuple[str, MetricsReport], ...]
    winner: str

    def to_dict(self) -> dict:
        return {
            "winner": self.winner,
            "entries": [
                {
                    "name": name,
                    "accuracy": r.accuracy,
                    "precision": r.precision,
                    "recall": r.recall,
                    "f1": r.f1,
                }
                for name, r in self.entries
            ],
        }


def confusion(y_true, y_pred) -> ConfusionMatrix:
    """Tally (actual, predicted) pairs; class 1 is the positive (threat) class."""
    t = np.asarray(y_true).reshape(-1)
    p = np.asarray(y_pred).reshape(-1)
    if t.shape != p.shape:
        raise LengthMismatch(f"y_true has {t.size} entries, y_pred has {p.size}")
    if t.size == 0:
        raise LengthMismatch("label vectors are empty")
    for v in (t, p):
        if not np.all((v == 0) | (v == 1)):
            raise NonBinaryLabel("labels must be 0 or 1")
    t = t.astype(bool)
    p = p.astype(bool)
    return ConfusionMatrix(
        tn=int(np.count_nonzero(~t & ~p)),
        fp=int(np.count_nonzero(~t & p)),
        fn=int(np.count_nonzero(t & ~p)),
        tp=int(np.count_nonzero(t & p)),
    )


def scores(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy, precision, recall and F1.

    Undefined ratios (zero denominators) are reported as 0 and named in
    ``zero_division_notes``.
    """
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix has no entries")
    notes = []
    accuracy = (cm.tp + cm.tn) / cm.total
    if cm.tp + cm.fp == 0:
        precision = 0.0
        notes.append("precision")
    else:
        precision = cm.tp / (cm.tp + cm.fp)
    if cm.tp + cm.fn == 0:
        recall = 0.0
        notes.append("recall")
    else:
        recall = cm.tp / (cm.tp + cm.fn)
    if precision + recall == 0:
        f1 = 0.0
        notes.append("f1")
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsReport(accuracy, precision, recall, f1, tuple(notes))


def metrics_document(cm: ConfusionMatrix, report: MetricsReport, **extra) -> dict:
    doc = {
        "confusion": cm.to_dict(),
        "accuracy": report.accuracy,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "flags": list(report.zero_division_notes),
    }
    doc.update(extra)
    return doc


def report_from_document(doc: dict) -> MetricsReport:
    return MetricsReport(
        float(doc["accuracy"]), float(doc["precision"]), float(doc["recall"]),
        float(doc["f1"]), tuple(doc.get("flags", ())),
    )


def compare(reports) -> ComparisonReport:
    """Rank named reports by accuracy, best first; ties keep input order."""
    reports = list(reports)
    if len(reports) < 2:
        raise TooFewModels(f"need at least 2 reports to compare, got {len(reports)}")
    ranked = sorted(reports, key=lambda item: -item[1].accuracy)  # sorted() is stable
    return ComparisonReport(tuple(ranked), ranked[0][0])
