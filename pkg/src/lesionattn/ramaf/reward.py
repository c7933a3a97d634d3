"""Episode reward: classification outcome plus a spatial term.

R_i = r_i + (1/T) * sum_t I * 1[fixation t inside a truth box], with r_i 1
for a correct prediction and 0 otherwise.  The spatial term applies only to
annotated exams (and can be disabled wholesale, which reduces the agent to
its classification-reward-only variant).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..manifest import Box


@dataclass
class RewardBreakdown:
    r_class: np.ndarray  # [B] 0/1 classification reward
    hits: np.ndarray  # [B] fixations that landed inside a box
    spatial: np.ndarray  # [B] spatial term, zero for unannotated exams
    total: np.ndarray  # [B]


def to_pixel_scalar(coord: float, size: int) -> float:
    return (coord + 1.0) / 2.0 * (size - 1)


def fixations_in_boxes(centers: np.ndarray, boxes: list[Box], image_size: tuple[int, int]) -> int:
    """Count fixations (normalized (x, y)) whose pixel lands inside any box."""
    h, w = image_size
    count = 0
    for cx, cy in np.asarray(centers, dtype=np.float64):
        px = int(np.floor(to_pixel_scalar(cx, w) + 0.5))
        py = int(np.floor(to_pixel_scalar(cy, h) + 0.5))
        if any(x0 <= px <= x1 and y0 <= py <= y1 for x0, y0, x1, y1 in boxes):
            count += 1
    return count


def compute_rewards(
    correct: np.ndarray,  # [B] bool
    centers: np.ndarray,  # [B, T, 2] normalized (x, y)
    boxes_per_item: list[list[Box]],
    annotated: np.ndarray,  # [B] bool: spatial term eligible
    image_size: tuple[int, int],
    intermediate_reward: float,
    use_spatial: bool,
) -> RewardBreakdown:
    b, t_steps, _ = centers.shape
    r_class = np.asarray(correct, dtype=np.float64)
    hits = np.zeros(b, dtype=np.float64)
    if use_spatial:
        for i in range(b):
            if annotated[i] and boxes_per_item[i]:
                hits[i] = fixations_in_boxes(centers[i], boxes_per_item[i], image_size)
    spatial = intermediate_reward * hits / t_steps
    return RewardBreakdown(r_class=r_class, hits=hits, spatial=spatial, total=r_class + spatial)
