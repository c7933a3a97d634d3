"""Scoremap-based localisation: thresholding, components, box matching.

Boxes are (x_min, y_min, x_max, y_max) with inclusive integer corners, so a
single pixel is a box of area 1.
"""

from __future__ import annotations

import numpy as np

from ..manifest import Box


def box_area(box: Box) -> int:
    x0, y0, x1, y1 = box
    return (x1 - x0 + 1) * (y1 - y0 + 1)


def box_iou(a: Box, b: Box) -> float:
    """Intersection over union with inclusive pixel coordinates."""
    ix0, iy0 = max(a[0], b[0]), max(a[1], b[1])
    ix1, iy1 = min(a[2], b[2]), min(a[3], b[3])
    if ix1 < ix0 or iy1 < iy0:
        return 0.0
    inter = (ix1 - ix0 + 1) * (iy1 - iy0 + 1)
    return inter / (box_area(a) + box_area(b) - inter)


def connected_components(mask: np.ndarray, connectivity: int = 8) -> tuple[np.ndarray, int]:
    """Label connected True regions by iterative flood fill.

    Returns (labels, count) where labels is int32 with 0 for background and
    components numbered 1..count in raster-scan order of first pixel.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError(f"expected a 2-d mask, got shape {mask.shape}")
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    if connectivity == 8:
        neigh = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    else:
        neigh = [(-1, 0), (0, -1), (0, 1), (1, 0)]
    count = 0
    for y in range(h):
        for x in range(w):
            if not mask[y, x] or labels[y, x]:
                continue
            count += 1
            stack = [(y, x)]
            labels[y, x] = count
            while stack:
                cy, cx = stack.pop()
                for dy, dx in neigh:
                    ny, nx = cy + dy, cx + dx
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not labels[ny, nx]:
                        labels[ny, nx] = count
                        stack.append((ny, nx))
    return labels, count


def component_boxes(labels: np.ndarray, count: int) -> list[Box]:
    boxes = []
    for c in range(1, count + 1):
        ys, xs = np.nonzero(labels == c)
        boxes.append((int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())))
    return boxes


def threshold_scoremap(scoremap: np.ndarray, threshold: float) -> np.ndarray:
    """Select high-value cells: mask = (scoremap >= t) for t in (0, 1)."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    return np.asarray(scoremap) >= threshold


def scoremap_boxes(scoremap: np.ndarray, threshold: float, factor: int) -> list[Box]:
    """Boxes of above-threshold components, scaled up to image coordinates.

    A scoremap cell (i, j) covers image pixels [j*factor, (j+1)*factor - 1]
    by [i*factor, (i+1)*factor - 1].
    """
    labels, count = connected_components(threshold_scoremap(scoremap, threshold), connectivity=8)
    out = []
    for x0, y0, x1, y1 in component_boxes(labels, count):
        out.append((x0 * factor, y0 * factor, (x1 + 1) * factor - 1, (y1 + 1) * factor - 1))
    return out


def match_boxes(
    predicted: list[Box], truth: list[Box], overlap_threshold: float
) -> list[tuple[int, int, float]]:
    """Greedy one-to-one matching by descending IoU.

    Returns (predicted_index, truth_index, iou) triples with
    iou >= overlap_threshold; each box participates in at most one match.
    """
    pairs = []
    for pi, p in enumerate(predicted):
        for ti, t in enumerate(truth):
            iou = box_iou(p, t)
            if iou >= overlap_threshold:
                pairs.append((iou, pi, ti))
    pairs.sort(key=lambda x: (-x[0], x[1], x[2]))
    used_p: set[int] = set()
    used_t: set[int] = set()
    matches = []
    for iou, pi, ti in pairs:
        if pi in used_p or ti in used_t:
            continue
        used_p.add(pi)
        used_t.add(ti)
        matches.append((pi, ti, iou))
    return matches


def localisation_metrics(
    scoremaps: list[np.ndarray],
    truth_boxes: list[list[Box]],
    threshold: float,
    factor: int,
    overlap_threshold: float,
) -> dict:
    """Detection stats for one scoremap threshold over a set of exams.

    A matched truth box is a TP, an unmatched candidate an FP, an unmatched
    truth box an FN; average_overlap is the mean IoU over matched pairs.
    """
    n_truth = n_pred = tp = 0
    ious: list[float] = []
    for scoremap, boxes in zip(scoremaps, truth_boxes):
        pred = scoremap_boxes(scoremap, threshold, factor)
        matches = match_boxes(pred, boxes, overlap_threshold)
        n_truth += len(boxes)
        n_pred += len(pred)
        tp += len(matches)
        ious.extend(m[2] for m in matches)
    n_images = len(scoremaps)
    return {
        "threshold": threshold,
        "overlap_threshold": overlap_threshold,
        "n_images": n_images,
        "n_truth_boxes": n_truth,
        "n_predicted_boxes": n_pred,
        "tp": tp,
        "fp": n_pred - tp,
        "fn": n_truth - tp,
        "sensitivity": tp / n_truth if n_truth else None,
        "precision": tp / n_pred if n_pred else None,
        "average_overlap": float(np.mean(ious)) if ious else None,
        "false_positives_per_image": (n_pred - tp) / n_images if n_images else None,
    }


def localisation_sweep(
    scoremaps: list[np.ndarray],
    truth_boxes: list[list[Box]],
    thresholds,
    factor: int,
    overlap_threshold: float,
) -> list[dict]:
    return [
        localisation_metrics(scoremaps, truth_boxes, t, factor, overlap_threshold)
        for t in thresholds
    ]


def overlap_sweep(
    scoremaps: list[np.ndarray],
    truth_boxes: list[list[Box]],
    detection_thresholds,
    factor: int,
    overlap_thresholds,
) -> list[dict]:
    """Full grid over detection and overlap thresholds (recall/precision curves)."""
    rows = []
    for t in detection_thresholds:
        for ot in overlap_thresholds:
            rows.append(localisation_metrics(scoremaps, truth_boxes, t, factor, ot))
    return rows
