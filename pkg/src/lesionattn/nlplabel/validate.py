"""Weak-label validation against truth labels, one row per class."""

from __future__ import annotations

from dataclasses import dataclass

from ..manifest import ExamRecord


@dataclass
class ClassValidation:
    label: str
    tp: int
    fp: int
    tn: int
    fn: int
    f1: float | None
    sensitivity: float | None
    specificity: float | None
    precision: float | None
    npv: float | None


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def validate_labels(
    records: list[ExamRecord], classes: tuple[str, ...] = ("Normal", "Lesion", "Others")
) -> dict[str, ClassValidation]:
    """One-vs-rest validation of weak labels.

    Unlabeled records count against every class's sensitivity (they are
    never a positive prediction).  Undefined ratios are reported as None.
    """
    out = {}
    for label in classes:
        tp = sum(1 for r in records if r.weak_label == label and r.truth_label == label)
        fp = sum(1 for r in records if r.weak_label == label and r.truth_label != label)
        fn = sum(1 for r in records if r.weak_label != label and r.truth_label == label)
        tn = sum(1 for r in records if r.weak_label != label and r.truth_label != label)
        precision = _ratio(tp, tp + fp)
        sensitivity = _ratio(tp, tp + fn)
        if precision is None or sensitivity is None or precision + sensitivity == 0:
            f1 = None
        else:
            f1 = 2 * precision * sensitivity / (precision + sensitivity)
        out[label] = ClassValidation(
            label=label,
            tp=tp,
            fp=fp,
            tn=tn,
            fn=fn,
            f1=f1,
            sensitivity=sensitivity,
            specificity=_ratio(tn, tn + fp),
            precision=precision,
            npv=_ratio(tn, tn + fn),
        )
    return out


def validation_rows(results: dict[str, ClassValidation]) -> list[dict]:
    """Rows for CSV export: label, counts, and the five headline ratios."""

    def fmt(v: float | None) -> str:
        return "" if v is None else f"{v:.4f}"

    return [
        {
            "label": r.label,
            "tp": r.tp,
            "fp": r.fp,
            "tn": r.tn,
            "fn": r.fn,
            "f1": fmt(r.f1),
            "sensitivity": fmt(r.sensitivity),
            "specificity": fmt(r.specificity),
            "precision": fmt(r.precision),
            "npv": fmt(r.npv),
        }
        for r in results.values()
    ]
