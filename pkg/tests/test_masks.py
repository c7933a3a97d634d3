"""Gaussian target-mask geometry."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lesionattn.conaf.masks import (
    build_target_mask,
    downsample_area,
    gaussian_box_mask,
    renormalize_islands,
)

from oracles import area_downsample_reference, gaussian_mask_reference

SIGMA = 0.25


def _odd_box(cx, cy, half_w, half_h):
    return (cx - half_w, cy - half_h, cx + half_w, cy + half_h)


@pytest.mark.parametrize(
    "box",
    [
        _odd_box(16, 16, 3, 3),
        _odd_box(10, 20, 5, 2),
        _odd_box(25, 7, 1, 6),
        (12, 12, 12, 12),
    ],
)
def test_peak_is_one_at_box_center(box):
    mask = gaussian_box_mask(box, (32, 32), SIGMA)
    cx = (box[0] + box[2]) // 2
    cy = (box[1] + box[3]) // 2
    assert mask[cy, cx] == pytest.approx(1.0, abs=1e-6)
    assert mask.max() == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("box", [_odd_box(16, 16, 4, 4), _odd_box(14, 18, 6, 3)])
def test_edge_midpoint_is_exp_minus_two(box):
    mask = gaussian_box_mask(box, (32, 32), SIGMA)
    x0, y0, x1, y1 = box
    cx, cy = (x0 + x1) // 2, (y0 + y1) // 2
    for edge_value in (mask[cy, x0], mask[cy, x1], mask[y0, cx], mask[y1, cx]):
        assert edge_value == pytest.approx(math.exp(-2.0), abs=1e-3)


def test_single_pixel_box():
    mask = gaussian_box_mask((5, 9, 5, 9), (16, 16), SIGMA)
    assert mask[9, 5] == 1.0
    assert mask.sum() == 1.0


def test_zero_outside_box():
    box = (4, 6, 10, 12)
    mask = gaussian_box_mask(box, (24, 24), SIGMA)
    inside = np.zeros((24, 24), dtype=bool)
    inside[6:13, 4:11] = True
    assert (mask[~inside] == 0.0).all()
    assert (mask[inside] > 0.0).all()


def test_matches_double_loop_reference():
    rng = np.random.default_rng(3)
    for _ in range(50):
        w = int(rng.integers(1, 12))
        h = int(rng.integers(1, 12))
        x0 = int(rng.integers(0, 32 - w))
        y0 = int(rng.integers(0, 32 - h))
        box = (x0, y0, x0 + w - 1, y0 + h - 1)
        got = gaussian_box_mask(box, (32, 32), SIGMA)
        want = gaussian_mask_reference(box, (32, 32), SIGMA)
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_translation_equivariance_100_boxes():
    rng = np.random.default_rng(11)
    for _ in range(100):
        w = int(rng.integers(1, 10))
        h = int(rng.integers(1, 10))
        x0 = int(rng.integers(0, 20 - w))
        y0 = int(rng.integers(0, 20 - h))
        dx = int(rng.integers(0, 44 - w - x0))
        dy = int(rng.integers(0, 44 - h - y0))
        base = gaussian_box_mask((x0, y0, x0 + w - 1, y0 + h - 1), (44, 44), SIGMA)
        moved = gaussian_box_mask(
            (x0 + dx, y0 + dy, x0 + dx + w - 1, y0 + dy + h - 1), (44, 44), SIGMA
        )
        np.testing.assert_array_equal(moved, np.roll(base, (dy, dx), axis=(0, 1)))


def test_mask_rejects_bad_inputs():
    with pytest.raises(ValueError, match="does not fit"):
        gaussian_box_mask((0, 0, 16, 3), (16, 16), SIGMA)
    with pytest.raises(ValueError, match="does not fit"):
        gaussian_box_mask((-1, 0, 3, 3), (16, 16), SIGMA)
    with pytest.raises(ValueError, match="sigma"):
        gaussian_box_mask((0, 0, 3, 3), (16, 16), 0.0)


@given(
    half=st.integers(min_value=0, max_value=6),
    sigma=st.floats(min_value=0.05, max_value=1.0),
)
@settings(max_examples=60, deadline=None)
def test_mask_values_in_unit_interval(half, sigma):
    box = _odd_box(15, 15, half, half)
    mask = gaussian_box_mask(box, (32, 32), sigma)
    assert mask.min() >= 0.0
    assert mask.max() == pytest.approx(1.0, abs=1e-12)


# ------------------------------------------------------------- downsampling


def test_downsample_matches_block_mean_reference():
    rng = np.random.default_rng(5)
    arr = rng.random((48, 32))
    for factor in (2, 4, 8, 16):
        np.testing.assert_allclose(
            downsample_area(arr, factor), area_downsample_reference(arr, factor), atol=1e-12
        )


def test_downsample_rejects_indivisible():
    with pytest.raises(ValueError, match="not divisible"):
        downsample_area(np.zeros((10, 16)), 16)


def test_downsample_preserves_mean():
    rng = np.random.default_rng(6)
    arr = rng.random((32, 32))
    assert downsample_area(arr, 4).mean() == pytest.approx(arr.mean(), abs=1e-12)


# ------------------------------------------------------- island renormalizing


def test_islands_renormalized_independently():
    mask = np.zeros((8, 8))
    mask[1, 1] = 0.5
    mask[1, 2] = 0.25
    mask[6, 6] = 0.1
    out = renormalize_islands(mask)
    assert out[1, 1] == 1.0
    assert out[1, 2] == 0.5
    assert out[6, 6] == 1.0
    assert out.sum() == pytest.approx(2.5)


def test_renormalize_leaves_zeros():
    out = renormalize_islands(np.zeros((4, 4)))
    assert (out == 0.0).all()


# ------------------------------------------------------------ target masks


def test_target_mask_empty_boxes_is_zero():
    target = build_target_mask([], (64, 64), SIGMA, factor=16)
    assert target.shape == (4, 4)
    assert (target == 0.0).all()


def test_target_mask_shape_and_peak():
    target = build_target_mask([(8, 8, 24, 24)], (64, 64), SIGMA, factor=16)
    assert target.shape == (4, 4)
    assert target.max() == pytest.approx(1.0, abs=1e-12)


def test_target_mask_is_max_then_pool_then_repeak():
    boxes = [(2, 2, 14, 14), (10, 10, 28, 26)]
    full = np.maximum(
        gaussian_box_mask(boxes[0], (32, 32), SIGMA),
        gaussian_box_mask(boxes[1], (32, 32), SIGMA),
    )
    want = renormalize_islands(area_downsample_reference(full, 4))
    got = build_target_mask(boxes, (32, 32), SIGMA, factor=4)
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_target_mask_separate_islands_each_peak_one():
    boxes = [(0, 0, 7, 7), (48, 48, 63, 63)]
    target = build_target_mask(boxes, (64, 64), SIGMA, factor=8)
    assert target[0, 0] == pytest.approx(target.max())
    left = target[:2, :2].max()
    right = target[6:, 6:].max()
    assert left == pytest.approx(1.0, abs=1e-12)
    assert right == pytest.approx(1.0, abs=1e-12)


def test_target_mask_rejects_indivisible_image():
    with pytest.raises(ValueError, match="not divisible"):
        build_target_mask([], (60, 64), SIGMA, factor=16)
