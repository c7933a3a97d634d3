"""Gaussian target masks for the localisation branch.

Each annotated box becomes an axis-aligned Gaussian bump whose spread
scales with the box: inside a box of width r1 and height r2,

    g(u, v) = exp(-0.5 * (((u - r1/2) / (sigma * r1))^2
                        + ((v - r2/2) / (sigma * r2))^2))

with local coordinates spanning [0, r1] x [0, r2] edge to edge, zero
outside the box, and the peak normalized to exactly 1.  At sigma = 0.25
the value at the midpoint of a box edge is exp(-2).  Multiple boxes
combine by elementwise max; the full-resolution mask is then area-averaged
down to the scoremap grid and re-normalized per connected footprint so
every lesion island again peaks at 1.
"""

from __future__ import annotations

import numpy as np

from ..evalkit.localisation import connected_components
from ..manifest import Box


def gaussian_box_mask(box: Box, image_size: tuple[int, int], sigma: float) -> np.ndarray:
    """Full-resolution mask for a single box, peak exactly 1."""
    h, w = image_size
    x0, y0, x1, y1 = box
    if not (0 <= x0 <= x1 < w and 0 <= y0 <= y1 < h):
        raise ValueError(f"box {box} does not fit inside a {h}x{w} image")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    r1 = x1 - x0 + 1
    r2 = y1 - y0 + 1
    # edge-inclusive local coordinates: pixel columns span u in [0, r1]
    u = np.full(r1, r1 / 2.0) if r1 == 1 else np.arange(r1) * (r1 / (r1 - 1.0))
    v = np.full(r2, r2 / 2.0) if r2 == 1 else np.arange(r2) * (r2 / (r2 - 1.0))
    gu = ((u - r1 / 2.0) / (sigma * r1)) ** 2
    gv = ((v - r2 / 2.0) / (sigma * r2)) ** 2
    patch = np.exp(-0.5 * (gv[:, None] + gu[None, :]))
    patch /= patch.max()
    mask = np.zeros((h, w), dtype=np.float64)
    mask[y0 : y1 + 1, x0 : x1 + 1] = patch
    return mask


def downsample_area(mask: np.ndarray, factor: int) -> np.ndarray:
    h, w = mask.shape
    if h % factor or w % factor:
        raise ValueError(f"mask shape {mask.shape} is not divisible by {factor}")
    return mask.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


def renormalize_islands(mask: np.ndarray) -> np.ndarray:
    """Scale each 8-connected nonzero region to peak 1."""
    out = mask.copy()
    labels, count = connected_components(mask > 0.0, connectivity=8)
    for c in range(1, count + 1):
        region = labels == c
        peak = out[region].max()
        if peak > 0:
            out[region] = out[region] / peak
    return out


def build_target_mask(
    boxes: list[Box],
    image_size: tuple[int, int],
    sigma: float,
    factor: int = 16,
) -> np.ndarray:
    """Scoremap-resolution target: max of box masks, pooled, re-peaked.

    An empty box list yields an all-zero target (negative exams).
    """
    h, w = image_size
    if h % factor or w % factor:
        raise ValueError(f"image_size {image_size} is not divisible by factor {factor}")
    full = np.zeros((h, w), dtype=np.float64)
    for box in boxes:
        full = np.maximum(full, gaussian_box_mask(box, image_size, sigma))
    small = downsample_area(full, factor)
    return renormalize_islands(small)
