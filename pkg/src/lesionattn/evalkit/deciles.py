"""Accuracy stratified by lesion size."""

from __future__ import annotations

import warnings

import numpy as np


def exam_size(boxes, mm_per_pixel: float = 1.0) -> float:
    """Size of an exam's largest lesion: longest box side, in mm."""
    if not boxes:
        raise ValueError("exam has no boxes")
    return max(max(x1 - x0 + 1, y1 - y0 + 1) for x0, y0, x1, y1 in boxes) * mm_per_pixel


def decile_table(
    sizes,
    correct,
    n_bins: int = 10,
    exam_ids=None,
) -> list[dict]:
    """Split exams into equal-count size bins (smallest first) and report
    per-bin accuracy.  Ties are broken by exam id for determinism.  With
    fewer exams than bins the table falls back to one-exam bins.
    """
    sizes = np.asarray(sizes, dtype=np.float64)
    correct = np.asarray(correct, dtype=bool)
    if sizes.shape != correct.shape:
        raise ValueError("sizes and correct must have equal length")
    if len(sizes) == 0:
        raise ValueError("need at least one exam")
    if len(sizes) < n_bins:
        warnings.warn(
            f"only {len(sizes)} exams for {n_bins} bins; using {len(sizes)} quantile bins",
            stacklevel=2,
        )
        n_bins = len(sizes)
    keys = exam_ids if exam_ids is not None else list(range(len(sizes)))
    order = sorted(range(len(sizes)), key=lambda i: (sizes[i], keys[i]))
    rows = []
    for b, chunk in enumerate(np.array_split(np.array(order), n_bins)):
        chunk = chunk.astype(int)
        rows.append(
            {
                "bin": b + 1,
                "n": int(len(chunk)),
                "min_size": float(sizes[chunk].min()),
                "max_size": float(sizes[chunk].max()),
                "mean_size": float(sizes[chunk].mean()),
                "accuracy": float(correct[chunk].mean()),
            }
        )
    return rows
