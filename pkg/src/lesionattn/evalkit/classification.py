"""Binary classification metrics (positive class = Lesion)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class BinaryMetrics:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float | None
    sensitivity: float | None
    specificity: float | None
    precision: float | None
    npv: float | None
    f1: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def _harmonic(precision: float | None, sensitivity: float | None) -> float | None:
    """F1 as 2ps/(p+s); stays undefined when either factor is, or both are 0."""
    if precision is None or sensitivity is None or precision + sensitivity == 0:
        return None
    return 2 * precision * sensitivity / (precision + sensitivity)


def binary_metrics(predicted, truth) -> BinaryMetrics:
    """Counts and ratios from 0/1 arrays; undefined ratios become None."""
    predicted = np.asarray(predicted).astype(bool)
    truth = np.asarray(truth).astype(bool)
    if predicted.shape != truth.shape:
        raise ValueError(f"prediction/truth shape mismatch: {predicted.shape} vs {truth.shape}")
    if predicted.size == 0:
        raise ValueError("cannot score an empty prediction set")
    tp = int(np.sum(predicted & truth))
    fp = int(np.sum(predicted & ~truth))
    tn = int(np.sum(~predicted & ~truth))
    fn = int(np.sum(~predicted & truth))
    total = tp + fp + tn + fn
    sensitivity = _ratio(tp, tp + fn)
    precision = _ratio(tp, tp + fp)
    return BinaryMetrics(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        accuracy=_ratio(tp + tn, total),
        sensitivity=sensitivity,
        specificity=_ratio(tn, tn + fp),
        precision=precision,
        npv=_ratio(tn, tn + fn),
        f1=_harmonic(precision, sensitivity),
    )


def metrics_from_counts(tp: int, fn: int, fp: int, tn: int) -> BinaryMetrics:
    predicted = np.concatenate([np.ones(tp + fp, bool), np.zeros(fn + tn, bool)])
    truth = np.concatenate([np.ones(tp, bool), np.zeros(fp, bool), np.ones(fn, bool), np.zeros(tn, bool)])
    return binary_metrics(predicted, truth)
