"""Scoremap overlays rendered with PIL (blue = low, red = high)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from ..manifest import Box


def _colorize(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] values to a blue-to-red ramp, shape (..., 3)."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    r = v
    g = 0.25 * np.sin(np.pi * v)  # faint green mid-band keeps the ramp readable
    b = 1.0 - v
    return np.stack([r, g, b], axis=-1)


def render_heatmap(
    image: np.ndarray,  # [H, W] floats in [0, 1]
    scoremap: np.ndarray,  # [h, w] floats in [0, 1]
    truth_boxes: list[Box] | None = None,
    predicted_boxes: list[Box] | None = None,
    alpha: float = 0.45,
) -> Image.Image:
    h, w = image.shape
    sm = np.asarray(scoremap, dtype=np.float64)
    fy, fx = h // sm.shape[0], w // sm.shape[1]
    upsampled = np.repeat(np.repeat(sm, fy, axis=0), fx, axis=1)[:h, :w]
    gray = np.stack([image] * 3, axis=-1)
    blended = (1 - alpha) * gray + alpha * _colorize(upsampled)
    canvas = Image.fromarray(np.floor(np.clip(blended, 0, 1) * 255 + 0.5).astype(np.uint8), "RGB")
    draw = ImageDraw.Draw(canvas)
    for box in truth_boxes or []:
        draw.rectangle(box, outline=(0, 255, 0), width=1)
    for box in predicted_boxes or []:
        draw.rectangle(box, outline=(255, 255, 255), width=1)
    return canvas


def save_heatmap(path: str | Path, image, scoremap, truth_boxes=None, predicted_boxes=None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    render_heatmap(image, scoremap, truth_boxes, predicted_boxes).save(path)
