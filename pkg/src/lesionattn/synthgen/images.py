"""Synthetic radiograph rendering.

Each exam is drawn from its own named random substream, so exam k is
byte-identical no matter how many other exams are generated around it.
An image is a layered composite on a [0, 1] grayscale:

  background = base level + vignette + rib stripes + soft clutter
  Lesion     = background + one or more bright elliptical blobs
  Others     = background + a diffuse opacity or a device-like line

Lesion blobs decay so the 10%-of-peak contour is exactly the ellipse with
the sampled radii; the ground-truth box is that contour's bounding box.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import GenConfig
from ..manifest import Box
from ..rng import substream

# background composition budget; lesion contrast is capped at 0.6 by config
# validation so the composite stays essentially inside [0, 1]
_BG_LO, _BG_HI = 0.03, 0.55
_PLACEMENT_BAND = 0.17  # lesions are kept out of the outer 17% of each axis


@dataclass(frozen=True)
class LesionSpec:
    center: tuple[float, float]  # (cx, cy), pixels
    radii: tuple[float, float]  # (rx, ry), pixels, semi-axes of the 10%-of-peak contour
    contrast: float  # additive peak intensity


@dataclass
class RenderedExam:
    pixels: np.ndarray  # float32 HxW in [0, 1]
    background: np.ndarray  # float32 HxW, composite before lesions/distractors
    truth_label: str
    lesions: list[LesionSpec] = field(default_factory=list)
    boxes: list[Box] = field(default_factory=list)


def _iround(x: float) -> int:
    return int(np.floor(x + 0.5))


def _grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    ys = np.arange(h, dtype=np.float64)[:, None]
    xs = np.arange(w, dtype=np.float64)[None, :]
    return ys, xs


def render_background(rng: np.random.Generator, cfg: GenConfig) -> np.ndarray:
    h, w = cfg.image_size
    ys, xs = _grid(h, w)
    base = rng.uniform(0.22, 0.32)
    img = np.full((h, w), base, dtype=np.float64)

    # vignette: broad bright mound, jittered off-center
    amp = rng.uniform(0.10, 0.18)
    cx = w / 2 + rng.uniform(-0.1, 0.1) * w
    cy = h / 2 + rng.uniform(-0.1, 0.1) * h
    sig = rng.uniform(0.45, 0.65) * min(h, w)
    img += amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sig**2))

    # rib stripes: shallow periodic bands at a slight angle
    amp = rng.uniform(0.02, 0.05)
    period = rng.uniform(10.0, 18.0)
    theta = rng.uniform(-0.15, 0.15)
    phase = rng.uniform(0.0, 2 * np.pi)
    img += amp * np.sin(2 * np.pi * (ys * np.cos(theta) + xs * np.sin(theta)) / period + phase)

    # soft clutter blobs, signed
    n_clutter = int(rng.integers(cfg.clutter_count_range[0], cfg.clutter_count_range[1] + 1))
    for _ in range(n_clutter):
        bx = rng.uniform(0, w)
        by = rng.uniform(0, h)
        bs = rng.uniform(4.0, 12.0)
        ba = rng.uniform(-cfg.clutter_amplitude, cfg.clutter_amplitude)
        img += ba * np.exp(-((xs - bx) ** 2 + (ys - by) ** 2) / (2 * bs**2))

    return np.clip(img, _BG_LO, _BG_HI)


def blob_field(h: int, w: int, lesion: LesionSpec) -> np.ndarray:
    """Additive lesion intensity: contrast * 0.1 ** rho2.

    rho2 = ((x-cx)/rx)^2 + ((y-cy)/ry)^2, so the value falls to 10% of the
    peak exactly on the ellipse with semi-axes (rx, ry).
    """
    ys, xs = _grid(h, w)
    cx, cy = lesion.center
    rx, ry = lesion.radii
    rho2 = ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2
    return lesion.contrast * np.power(0.1, rho2)


def lesion_box(lesion: LesionSpec, h: int, w: int) -> Box:
    """Bounding box of the 10%-of-peak contour, rounded to pixel indices."""
    cx, cy = lesion.center
    rx, ry = lesion.radii
    x0 = max(0, _iround(cx - rx))
    y0 = max(0, _iround(cy - ry))
    x1 = min(w - 1, _iround(cx + rx))
    y1 = min(h - 1, _iround(cy + ry))
    return (x0, y0, x1, y1)


def _sample_lesions(rng: np.random.Generator, cfg: GenConfig) -> list[LesionSpec]:
    h, w = cfg.image_size
    rmin, rmax = cfg.lesion_radius_range
    cmin, cmax = cfg.lesion_contrast_range
    nmin, nmax = cfg.lesion_count_range
    target = int(rng.integers(nmin, nmax + 1))
    lesions: list[LesionSpec] = []
    attempts = 0
    while len(lesions) < target and attempts < 200:
        attempts += 1
        rx = rng.uniform(rmin, rmax)
        ry = rng.uniform(rmin, rmax)
        lo_x = max(rx + 1.5, _PLACEMENT_BAND * w)
        hi_x = min(w - rx - 2.5, (1 - _PLACEMENT_BAND) * w)
        lo_y = max(ry + 1.5, _PLACEMENT_BAND * h)
        hi_y = min(h - ry - 2.5, (1 - _PLACEMENT_BAND) * h)
        if lo_x >= hi_x or lo_y >= hi_y:
            continue
        cx = rng.uniform(lo_x, hi_x)
        cy = rng.uniform(lo_y, hi_y)
        contrast = rng.uniform(cmin, cmax)
        cand = LesionSpec(center=(cx, cy), radii=(rx, ry), contrast=contrast)
        rad_c = max(rx, ry)
        ok = True
        for other in lesions:
            rad_o = max(other.radii)
            d = np.hypot(cx - other.center[0], cy - other.center[1])
            if d < rad_c + rad_o + 6.0:
                ok = False
                break
        if ok:
            lesions.append(cand)
    if not lesions:
        raise RuntimeError("could not place any lesion; radius range too large for the image")
    return lesions


def _add_distractor(rng: np.random.Generator, cfg: GenConfig, img: np.ndarray) -> None:
    """Others-class content: diffuse opacity or a device-like bright line."""
    h, w = cfg.image_size
    ys, xs = _grid(h, w)
    kind = rng.choice(["diffuse", "line"])
    if kind == "diffuse":
        cx = rng.uniform(0.25 * w, 0.75 * w)
        cy = rng.uniform(0.25 * h, 0.75 * h)
        sig = rng.uniform(0.18, 0.30) * min(h, w)
        amp = rng.uniform(0.12, 0.25)
        img += amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sig**2))
    else:
        # bright thin segment crossing the image interior
        x0, y0 = rng.uniform(0.1, 0.4) * w, rng.uniform(0.1, 0.9) * h
        x1, y1 = rng.uniform(0.6, 0.9) * w, rng.uniform(0.1, 0.9) * h
        amp = rng.uniform(0.30, 0.50)
        vx, vy = x1 - x0, y1 - y0
        norm2 = vx * vx + vy * vy
        t = np.clip(((xs - x0) * vx + (ys - y0) * vy) / norm2, 0.0, 1.0)
        dist2 = (xs - (x0 + t * vx)) ** 2 + (ys - (y0 + t * vy)) ** 2
        img += amp * np.exp(-dist2 / (2 * 1.2**2))


def render_exam(cfg: GenConfig, root_seed: int, exam_index: int, truth_label: str) -> RenderedExam:
    """Render one exam deterministically from (root_seed, exam_index)."""
    rng = substream(root_seed, "image", exam_index)
    h, w = cfg.image_size
    background = render_background(rng, cfg)
    img = background.copy()
    lesions: list[LesionSpec] = []
    boxes: list[Box] = []
    if truth_label == "Lesion":
        lesions = _sample_lesions(rng, cfg)
        for lesion in lesions:
            img += blob_field(h, w, lesion)
            boxes.append(lesion_box(lesion, h, w))
    elif truth_label == "Others":
        _add_distractor(rng, cfg, img)
    img = np.clip(img, 0.0, 1.0)
    return RenderedExam(
        pixels=img.astype(np.float32),
        background=background.astype(np.float32),
        truth_label=truth_label,
        lesions=lesions,
        boxes=boxes,
    )


def quantize(pixels: np.ndarray) -> np.ndarray:
    """Map a [0, 1] float image to 8-bit grayscale."""
    return np.floor(pixels * 255.0 + 0.5).astype(np.uint8)
