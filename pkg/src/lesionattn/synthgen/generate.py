"""Corpus generation: images, reports, splits, and the manifest."""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np
from PIL import Image

from ..config import CLASS_NAMES, GenConfig
from ..errors import ConfigError
from ..manifest import ExamRecord, write_manifest
from ..rng import substream
from .images import quantize, render_exam
from .reports import render_report


def _class_assignment(cfg: GenConfig) -> list[str]:
    labels: list[str] = []
    for name in CLASS_NAMES:
        labels.extend([name] * int(cfg.counts[name]))
    return labels


def _choose_annotated(labels: list[str], cfg: GenConfig, rng: np.random.Generator) -> set[int]:
    """The annotated subset: a fraction of the whole corpus, all Lesion."""
    lesion_idx = [i for i, lab in enumerate(labels) if lab == "Lesion"]
    n_annotated = int(round(cfg.annotated_fraction * len(labels)))
    if n_annotated > len(lesion_idx):
        raise ConfigError(
            f"annotated_fraction {cfg.annotated_fraction} asks for {n_annotated} annotated exams "
            f"but only {len(lesion_idx)} Lesion exams exist"
        )
    if n_annotated == 0:
        return set()
    chosen = rng.choice(len(lesion_idx), size=n_annotated, replace=False)
    return {lesion_idx[int(i)] for i in chosen}


def _assign_splits(
    labels: list[str],
    annotated: set[int],
    fractions,
    rng: np.random.Generator,
) -> list[str]:
    """Stratified splits with the annotated subset forced 80/20 train/test.

    Annotated exams never land in val; the remaining records fill per-class
    targets of round(fraction * class count).
    """
    splits = ["train"] * len(labels)
    ann = sorted(annotated)
    ann_arr = np.array(ann, dtype=int)
    rng.shuffle(ann_arr)
    n_ann_train = int(round(fractions[0] * len(ann_arr)))
    ann_test = {int(i) for i in ann_arr[n_ann_train:]}
    for i in ann_test:
        splits[i] = "test"

    for name in sorted(set(labels)):
        idx_all = [i for i, lab in enumerate(labels) if lab == name]
        n = len(idx_all)
        target_val = int(round(fractions[1] * n))
        target_test = int(round(fractions[2] * n))
        target_test = max(0, target_test - sum(1 for i in idx_all if i in ann_test))
        free = np.array([i for i in idx_all if i not in annotated], dtype=int)
        if target_val + target_test > len(free):
            raise ConfigError(
                f"class {name}: {len(free)} unannotated exams cannot fill "
                f"val/test targets {target_val}/{target_test}"
            )
        rng.shuffle(free)
        for i in free[:target_val]:
            splits[int(i)] = "val"
        for i in free[target_val : target_val + target_test]:
            splits[int(i)] = "test"
    return splits


def generate_corpus(
    cfg: GenConfig,
    root_seed: int,
    out_dir: str | Path,
    write_images: bool = True,
) -> list[ExamRecord]:
    """Render the corpus under ``out_dir`` and return its manifest records.

    Images land in ``out_dir/images``; the manifest is written to
    ``out_dir/manifest.jsonl`` with ``weak_label`` set to ``Unlabeled``.
    """
    cfg.validate()
    out_dir = Path(out_dir)
    image_dir = out_dir / "images"
    if write_images:
        image_dir.mkdir(parents=True, exist_ok=True)

    labels = _class_assignment(cfg)
    annotated = _choose_annotated(labels, cfg, substream(root_seed, "annotated"))
    splits = _assign_splits(labels, annotated, cfg.split_fractions, substream(root_seed, "split"))

    records: list[ExamRecord] = []
    for exam_index, truth_label in enumerate(labels):
        rendered = render_exam(cfg, root_seed, exam_index, truth_label)
        exam_id = f"exam{exam_index:06d}"
        rel_path = f"images/{exam_id}.png"
        if write_images:
            Image.fromarray(quantize(rendered.pixels), mode="L").save(image_dir / f"{exam_id}.png")
        report = render_report(cfg, root_seed, exam_index, truth_label, n_lesions=len(rendered.lesions))
        records.append(
            ExamRecord(
                exam_id=exam_id,
                image_path=rel_path,
                truth_label=truth_label,
                weak_label="Unlabeled",
                boxes=list(rendered.boxes),
                split=splits[exam_index],
                annotated=exam_index in annotated,
                report_text=report,
            )
        )

    write_manifest(records, out_dir / "manifest.jsonl")
    return records


def lesion_size(box: tuple[int, int, int, int], mm_per_pixel: float | None = None) -> float:
    """Longest side of a bounding box, in pixels or millimetres."""
    x0, y0, x1, y1 = box
    side = float(max(x1 - x0 + 1, y1 - y0 + 1))
    return side * mm_per_pixel if mm_per_pixel is not None else side


def inject_label_noise(
    records: list[ExamRecord],
    rate: float,
    seed: int,
    splits: tuple[str, ...] = ("train", "val"),
) -> list[ExamRecord]:
    """Flip a fraction of weak labels to a different class, uniformly.

    Only labelled records in the given splits are eligible; test weak labels
    are left untouched because evaluation is against truth labels anyway.
    """
    if not 0.0 <= rate <= 0.5:
        raise ValueError(f"noise rate must lie in [0, 0.5], got {rate}")
    rng = substream(seed, "label-noise")
    out: list[ExamRecord] = []
    for record in records:
        if record.split in splits and record.weak_label != "Unlabeled" and rng.random() < rate:
            others = [c for c in CLASS_NAMES if c != record.weak_label]
            flipped = others[int(rng.integers(len(others)))]
            out.append(dataclasses.replace(record, weak_label=flipped))
        else:
            out.append(record)
    return out
