"""Manifest-backed corpus access with cached image loading."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ManifestError
from .manifest import ExamRecord, read_manifest


class Corpus:
    def __init__(self, records: list[ExamRecord], image_root: str | Path):
        self.records = records
        self.image_root = Path(image_root)
        self.by_id = {r.exam_id: r for r in records}
        self._cache: dict[str, np.ndarray] = {}

    @classmethod
    def load(cls, manifest_path: str | Path) -> "Corpus":
        manifest_path = Path(manifest_path)
        records = read_manifest(manifest_path)
        return cls(records, manifest_path.parent)

    def split(self, name: str) -> list[ExamRecord]:
        return [r for r in self.records if r.split == name]

    def image(self, exam_id: str) -> np.ndarray:
        """8-bit grayscale PNG as float32 in [0, 1]."""
        if exam_id not in self._cache:
            record = self.by_id.get(exam_id)
            if record is None:
                raise ManifestError(f"unknown exam_id {exam_id!r}")
            path = self.image_root / record.image_path
            if not path.exists():
                raise ManifestError(f"image file missing for {exam_id}: {path}")
            with Image.open(path) as img:
                arr = np.asarray(img.convert("L"), dtype=np.float32) / 255.0
            self._cache[exam_id] = arr
        return self._cache[exam_id]

    def image_size(self) -> tuple[int, int]:
        first = self.image(self.records[0].exam_id)
        return first.shape[0], first.shape[1]

    def stack(self, records: list[ExamRecord]) -> np.ndarray:
        return np.stack([self.image(r.exam_id) for r in records])


def task_filter(records: list[ExamRecord], task: str, by: str = "weak_label") -> list[ExamRecord]:
    """Records usable for a binary task, by weak or truth label.

    lesion-vs-normal drops Others; lesion-vs-rest keeps everything and
    treats non-Lesion as negative.  Unlabeled records are always dropped
    when filtering by weak label.
    """
    if task not in ("lesion-vs-normal", "lesion-vs-rest"):
        raise ValueError(f"unknown task {task!r}")
    out = []
    for r in records:
        label = getattr(r, by)
        if label == "Unlabeled":
            continue
        if task == "lesion-vs-normal" and label == "Others":
            continue
        out.append(r)
    return out


def binary_target(record: ExamRecord, by: str = "weak_label") -> int:
    return 1 if getattr(record, by) == "Lesion" else 0
