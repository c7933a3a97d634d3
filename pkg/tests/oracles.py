"""Independent reference implementations used to pin derived constants.

Each oracle is deliberately written in a different style from the library
code (set-based scans, explicit loops, plain arithmetic) so agreement is
meaningful rather than two copies of one bug.
"""

from __future__ import annotations

import math

import numpy as np


def flood_fill_components(mask: np.ndarray, connectivity: int = 8) -> tuple[np.ndarray, int]:
    """BFS flood fill over a set of unvisited pixels."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    remaining = {(y, x) for y in range(h) for x in range(w) if mask[y, x]}
    labels = np.zeros((h, w), dtype=np.int32)
    count = 0
    if connectivity == 8:
        offsets = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]
    else:
        offsets = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    for y in range(h):
        for x in range(w):
            if (y, x) not in remaining:
                continue
            count += 1
            frontier = [(y, x)]
            remaining.discard((y, x))
            while frontier:
                cy, cx = frontier.pop(0)
                labels[cy, cx] = count
                for dy, dx in offsets:
                    n = (cy + dy, cx + dx)
                    if n in remaining:
                        remaining.discard(n)
                        frontier.append(n)
    return labels, count


def pixel_iou(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> float:
    """IoU by enumerating the pixel sets of both boxes."""
    pa = {(x, y) for x in range(a[0], a[2] + 1) for y in range(a[1], a[3] + 1)}
    pb = {(x, y) for x in range(b[0], b[2] + 1) for y in range(b[1], b[3] + 1)}
    union = len(pa | pb)
    return len(pa & pb) / union if union else 0.0


def cosine_trigrams(a: str, b: str) -> float:
    """Character-trigram cosine with one '#' pad at each end."""

    def grams(s: str) -> dict[str, int]:
        padded = "#" + s + "#"
        out: dict[str, int] = {}
        for i in range(len(padded) - 2):
            g = padded[i : i + 3]
            out[g] = out.get(g, 0) + 1
        return out

    ga, gb = grams(a), grams(b)
    dot = sum(ga[g] * gb[g] for g in ga if g in gb)
    na = math.sqrt(sum(v * v for v in ga.values()))
    nb = math.sqrt(sum(v * v for v in gb.values()))
    return dot / (na * nb) if na and nb else 0.0


def confusion_metrics(tp: int, fn: int, fp: int, tn: int) -> dict[str, float | None]:
    """Plain-arithmetic confusion ratios; None where the quotient is undefined."""

    def div(n: float, d: float) -> float | None:
        return n / d if d else None

    sens = div(tp, tp + fn)
    prec = div(tp, tp + fp)
    f1 = None
    if sens is not None and prec is not None and (sens + prec) > 0:
        f1 = 2 * prec * sens / (prec + sens)
    return {
        "accuracy": div(tp + tn, tp + fp + tn + fn),
        "sensitivity": sens,
        "specificity": div(tn, tn + fp),
        "precision": prec,
        "npv": div(tn, tn + fn),
        "f1": f1,
    }


def gaussian_mask_reference(
    box: tuple[int, int, int, int], shape: tuple[int, int], sigma: float
) -> np.ndarray:
    """Direct double-loop evaluation of the box Gaussian, peak-normalized.

    Local coordinates run edge-inclusively from 0 to the box side length, so
    the first and last pixel rows/columns sit exactly on the box border.
    """
    x0, y0, x1, y1 = box
    r1 = x1 - x0 + 1
    r2 = y1 - y0 + 1
    h, w = shape
    out = np.zeros((h, w), dtype=np.float64)
    for j in range(x0, x1 + 1):
        for i in range(y0, y1 + 1):
            u = r1 / 2 if r1 == 1 else (j - x0) * r1 / (r1 - 1)
            v = r2 / 2 if r2 == 1 else (i - y0) * r2 / (r2 - 1)
            out[i, j] = math.exp(
                -0.5 * (((u - r1 / 2) / (sigma * r1)) ** 2 + ((v - r2 / 2) / (sigma * r2)) ** 2)
            )
    peak = out.max()
    return out / peak if peak > 0 else out


def area_downsample_reference(arr: np.ndarray, factor: int) -> np.ndarray:
    """Block means by explicit loops."""
    h, w = arr.shape
    out = np.zeros((h // factor, w // factor), dtype=np.float64)
    for i in range(h // factor):
        for j in range(w // factor):
            out[i, j] = arr[i * factor : (i + 1) * factor, j * factor : (j + 1) * factor].mean()
    return out


def normal_log_density(x: float, mean: float, std: float) -> float:
    """Closed-form univariate Gaussian log density."""
    return -0.5 * ((x - mean) / std) ** 2 - math.log(std) - 0.5 * math.log(2 * math.pi)
