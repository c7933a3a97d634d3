"""Glimpse hit statistics for the recurrent model."""

from __future__ import annotations

import numpy as np

from ..manifest import Box


def center_to_pixel(center: tuple[float, float], image_size: tuple[int, int]) -> tuple[int, int]:
    """Map a normalized [-1, 1] (x, y) center to integer pixel coordinates."""
    h, w = image_size
    x = int(np.floor((center[0] + 1.0) / 2.0 * (w - 1) + 0.5))
    y = int(np.floor((center[1] + 1.0) / 2.0 * (h - 1) + 0.5))
    return x, y


def glimpse_hit(
    center: tuple[float, float],
    boxes: list[Box],
    image_size: tuple[int, int],
    patch_size: int,
    mode: str = "patch",
) -> bool:
    """Whether one fixation lands on a lesion.

    ``patch`` counts a hit when the fine glimpse window intersects any box;
    ``center`` requires the fixation point itself to fall inside a box.
    """
    x, y = center_to_pixel(center, image_size)
    half = patch_size // 2
    for x0, y0, x1, y1 in boxes:
        if mode == "center":
            if x0 <= x <= x1 and y0 <= y <= y1:
                return True
        else:
            gx0, gy0 = x - half, y - half
            gx1, gy1 = gx0 + patch_size - 1, gy0 + patch_size - 1
            if gx0 <= x1 and gx1 >= x0 and gy0 <= y1 and gy1 >= y0:
                return True
    return False


def glimpse_hit_stats(
    centers_per_exam: list[np.ndarray],  # each [T, 2], normalized (x, y)
    boxes_per_exam: list[list[Box]],
    image_size: tuple[int, int],
    patch_size: int,
    mode: str = "patch",
) -> dict:
    """Fraction of glimpses on-lesion, plus per-exam any-hit coverage."""
    total = hits = exams_hit = 0
    for centers, boxes in zip(centers_per_exam, boxes_per_exam):
        exam_hits = sum(
            1 for c in np.asarray(centers) if glimpse_hit((float(c[0]), float(c[1])), boxes, image_size, patch_size, mode)
        )
        total += len(centers)
        hits += exam_hits
        exams_hit += 1 if exam_hits else 0
    n_exams = len(centers_per_exam)
    return {
        "mode": mode,
        "n_exams": n_exams,
        "n_glimpses": total,
        "n_hits": hits,
        "hit_rate": hits / total if total else None,
        "exam_coverage": exams_hit / n_exams if n_exams else None,
    }


def box_detection_stats(
    centers_per_exam: list[np.ndarray],
    boxes_per_exam: list[list[Box]],
    image_size: tuple[int, int],
    patch_size: int,
    mode: str = "patch",
) -> dict:
    """Fraction of truth boxes touched by at least one fixation."""
    n_boxes = n_detected = 0
    for centers, boxes in zip(centers_per_exam, boxes_per_exam):
        for box in boxes:
            n_boxes += 1
            for c in np.asarray(centers):
                if glimpse_hit((float(c[0]), float(c[1])), [box], image_size, patch_size, mode):
                    n_detected += 1
                    break
    return {
        "mode": mode,
        "n_boxes": n_boxes,
        "n_detected": n_detected,
        "detection_rate": n_detected / n_boxes if n_boxes else None,
    }
