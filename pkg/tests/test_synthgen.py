"""Corpus generator: split contract, box geometry, noise, determinism."""

from __future__ import annotations

from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lesionattn.config import GenConfig
from lesionattn.errors import ConfigError
from lesionattn.rng import substream
from lesionattn.synthgen import generate_corpus, inject_label_noise, lesion_size
from lesionattn.synthgen.images import LesionSpec, lesion_box, quantize, render_exam
from lesionattn.synthgen.reports import render_report

SMALL = dict(
    image_size=(64, 64),
    counts={"Normal": 40, "Lesion": 40, "Others": 20},
    lesion_radius_range=(3, 7),
)


@pytest.fixture(scope="module")
def small_records(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    return generate_corpus(GenConfig(**SMALL), 11, root, write_images=False)


def test_class_counts(small_records):
    counts = Counter(r.truth_label for r in small_records)
    assert counts == {"Normal": 40, "Lesion": 40, "Others": 20}


def test_split_sizes_stratified(small_records):
    for cls, n in (("Normal", 40), ("Lesion", 40), ("Others", 20)):
        per = Counter(r.split for r in small_records if r.truth_label == cls)
        assert per["val"] == round(0.1 * n)
        assert per["test"] == round(0.1 * n)
        assert per["train"] == n - per["val"] - per["test"]


def test_annotated_subset_contract(small_records):
    annotated = [r for r in small_records if r.annotated]
    assert len(annotated) == round(0.09 * len(small_records))
    assert all(r.truth_label == "Lesion" for r in annotated)
    assert all(r.boxes for r in annotated)
    placement = Counter(r.split for r in annotated)
    assert placement["train"] == round(0.8 * len(annotated))
    assert placement["test"] == len(annotated) - placement["train"]
    assert placement["val"] == 0


def test_annotated_eighty_twenty_at_ten():
    cfg = GenConfig(
        image_size=(64, 64),
        counts={"Normal": 40, "Lesion": 50, "Others": 21},
        annotated_fraction=10 / 111,
        lesion_radius_range=(3, 7),
    )
    records = generate_corpus(cfg, 3, "/tmp/unused-ann", write_images=False)
    annotated = [r for r in records if r.annotated]
    assert len(annotated) == 10
    placement = Counter(r.split for r in annotated)
    assert placement == {"train": 8, "test": 2}


def test_annotated_demand_beyond_lesions_errors(tmp_path):
    cfg = GenConfig(
        image_size=(64, 64),
        counts={"Normal": 40, "Lesion": 4, "Others": 20},
        annotated_fraction=0.2,
        lesion_radius_range=(3, 7),
    )
    with pytest.raises(ConfigError, match="annotated"):
        generate_corpus(cfg, 1, tmp_path, write_images=False)


def test_too_few_records_per_stratum_errors(tmp_path):
    cfg = GenConfig(
        image_size=(64, 64),
        counts={"Normal": 40, "Lesion": 10, "Others": 20},
        annotated_fraction=9 / 70,  # all 9 annotated come from 10 lesions
        split_fractions=(0.2, 0.4, 0.4),
        lesion_radius_range=(3, 7),
    )
    with pytest.raises(ConfigError, match="val/test"):
        generate_corpus(cfg, 1, tmp_path, write_images=False)


def test_boxes_only_on_lesions(small_records):
    for r in small_records:
        if r.truth_label == "Lesion":
            assert 1 <= len(r.boxes) <= 3
        else:
            assert r.boxes == []


def test_generation_is_deterministic(small_records):
    again = generate_corpus(GenConfig(**SMALL), 11, "/tmp/unused-det", write_images=False)
    assert [r.to_json() for r in again] == [r.to_json() for r in small_records]


def test_different_seed_changes_corpus(small_records):
    other = generate_corpus(GenConfig(**SMALL), 12, "/tmp/unused-seed", write_images=False)
    assert [r.to_json() for r in other] != [r.to_json() for r in small_records]


def test_box_sides_bounded_by_radius_range(small_records):
    rmin, rmax = SMALL["lesion_radius_range"]
    for r in small_records:
        for x0, y0, x1, y1 in r.boxes:
            for side in (x1 - x0 + 1, y1 - y0 + 1):
                assert 2 * rmin - 1 <= side <= 2 * rmax + 1


def test_boxes_inside_image(small_records):
    h, w = SMALL["image_size"]
    for r in small_records:
        for x0, y0, x1, y1 in r.boxes:
            assert 0 <= x0 <= x1 < w
            assert 0 <= y0 <= y1 < h


def test_min_contrast_inside_boxes():
    cfg = GenConfig(**SMALL)
    for idx in range(6):
        exam = render_exam(cfg, 21, idx, "Lesion")
        blob_total = exam.pixels - exam.background
        for (x0, y0, x1, y1), lesion in zip(exam.boxes, exam.lesions):
            mean_lift = blob_total[y0 : y1 + 1, x0 : x1 + 1].mean()
            assert mean_lift >= cfg.min_box_mean_contrast


def test_pixels_in_unit_range():
    exam = render_exam(GenConfig(**SMALL), 5, 0, "Lesion")
    assert exam.pixels.min() >= 0.0 and exam.pixels.max() <= 1.0
    q = quantize(exam.pixels)
    assert q.dtype == np.uint8


def test_lesion_box_contains_center_support():
    spec = LesionSpec(center=(20.0, 30.0), radii=(4.0, 6.0), contrast=0.3)
    x0, y0, x1, y1 = lesion_box(spec, 64, 64)
    assert x0 <= 20 <= x1 and y0 <= 30 <= y1
    assert (x1 - x0 + 1, y1 - y0 + 1) == (9, 13)


def test_lesion_size_longest_side():
    assert lesion_size((3, 4, 12, 9)) == 10.0
    assert lesion_size((3, 4, 12, 9), mm_per_pixel=0.5) == 5.0
    assert lesion_size((0, 0, 0, 0)) == 1.0


def test_noise_rate_bounds():
    with pytest.raises(ValueError, match=r"\[0, 0.5\]"):
        inject_label_noise([], 0.51, 0)
    assert inject_label_noise([], 0.5, 0) == []


@pytest.fixture(scope="module")
def weakly_labelled(small_records):
    """Noise applies to labelled records only, so copy truth into weak."""
    import dataclasses

    return [dataclasses.replace(r, weak_label=r.truth_label) for r in small_records]


def test_noise_leaves_test_split_alone(weakly_labelled):
    noisy = inject_label_noise(weakly_labelled, 0.5, 99)
    for before, after in zip(weakly_labelled, noisy):
        if before.split == "test":
            assert after.weak_label == before.weak_label
        assert after.truth_label == before.truth_label
        assert after.boxes == before.boxes


def test_noise_skips_unlabelled(small_records):
    assert inject_label_noise(small_records, 0.5, 99) == list(small_records)


def test_noise_flips_to_a_different_class(weakly_labelled):
    noisy = inject_label_noise(weakly_labelled, 0.5, 99)
    flipped = [
        (b, a) for b, a in zip(weakly_labelled, noisy) if a.weak_label != b.weak_label
    ]
    assert flipped, "a 50% rate should flip something"
    for before, after in flipped:
        assert after.weak_label != before.weak_label
        assert after.weak_label in ("Normal", "Lesion", "Others")


def test_noise_rate_roughly_honoured(weakly_labelled):
    eligible = [r for r in weakly_labelled if r.split in ("train", "val")]
    noisy = inject_label_noise(weakly_labelled, 0.5, 99)
    flips = sum(1 for b, a in zip(weakly_labelled, noisy) if a.weak_label != b.weak_label)
    assert 0.25 * len(eligible) <= flips <= 0.75 * len(eligible)


def test_noise_is_deterministic(weakly_labelled):
    a = inject_label_noise(weakly_labelled, 0.3, 5)
    b = inject_label_noise(weakly_labelled, 0.3, 5)
    assert [r.weak_label for r in a] == [r.weak_label for r in b]
    c = inject_label_noise(weakly_labelled, 0.3, 6)
    assert [r.weak_label for r in c] != [r.weak_label for r in a]


def test_zero_noise_is_identity(weakly_labelled):
    assert inject_label_noise(weakly_labelled, 0.0, 1) == list(weakly_labelled)


@settings(deadline=None, max_examples=20)
@given(st.integers(0, 10_000))
def test_report_matches_truth_structure(exam_index):
    cfg = GenConfig(**SMALL, typo_rate=0.0)
    normal = render_report(cfg, 31, exam_index, "Normal", n_lesions=0)
    lesion = render_report(cfg, 31, exam_index, "Lesion", n_lesions=2)
    assert "lesion" in normal.lower() or "nodule" in normal.lower() or "mass" in normal.lower()
    assert normal != lesion


def test_reports_deterministic():
    cfg = GenConfig(**SMALL)
    a = render_report(cfg, 11, 7, "Others", n_lesions=0)
    b = render_report(cfg, 11, 7, "Others", n_lesions=0)
    assert a == b


def test_image_stream_independent_of_report_stream():
    cfg = GenConfig(**SMALL)
    pixels_a = render_exam(cfg, 11, 3, "Lesion").pixels
    render_report(cfg, 11, 3, "Lesion", n_lesions=1)
    pixels_b = render_exam(cfg, 11, 3, "Lesion").pixels
    assert np.array_equal(pixels_a, pixels_b)


def test_written_images_match_manifest(tmp_path):
    cfg = GenConfig(
        image_size=(64, 64),
        counts={"Normal": 3, "Lesion": 3, "Others": 3},
        annotated_fraction=0.0,
        lesion_radius_range=(3, 7),
    )
    records = generate_corpus(cfg, 2, tmp_path)
    for r in records:
        assert (tmp_path / r.image_path).exists()
    assert (tmp_path / "manifest.jsonl").exists()
