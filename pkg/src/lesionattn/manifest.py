"""Corpus manifest: one JSONL line per exam.

``image_path`` is stored relative to the manifest's directory so a run
directory can be moved wholesale.  ``weak_label`` is ``Unlabeled`` until the
report labeller has been applied (or when it abstains).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestError

TRUTH_LABELS = ("Normal", "Lesion", "Others")
WEAK_LABELS = TRUTH_LABELS + ("Unlabeled",)
SPLITS = ("train", "val", "test")

Box = tuple[int, int, int, int]  # x_min, y_min, x_max, y_max, all inclusive


@dataclass
class ExamRecord:
    exam_id: str
    image_path: str
    truth_label: str
    weak_label: str
    boxes: list[Box] = field(default_factory=list)
    split: str = "train"
    annotated: bool = False
    report_text: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "exam_id": self.exam_id,
                "image_path": self.image_path,
                "truth_label": self.truth_label,
                "weak_label": self.weak_label,
                "boxes": [list(b) for b in self.boxes],
                "split": self.split,
                "annotated": self.annotated,
                "report_text": self.report_text,
            },
            sort_keys=False,
        )


_REQUIRED_FIELDS = (
    "exam_id",
    "image_path",
    "truth_label",
    "weak_label",
    "boxes",
    "split",
    "annotated",
    "report_text",
)


def _parse_box(raw, line_number: int) -> Box:
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise ManifestError(f"box must be [x_min, y_min, x_max, y_max], got {raw!r}", line_number)
    coords = []
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ManifestError(f"box coordinates must be integers, got {raw!r}", line_number)
        coords.append(v)
    x0, y0, x1, y1 = coords
    if x0 < 0 or y0 < 0 or x1 < x0 or y1 < y0:
        raise ManifestError(f"box corners must satisfy 0 <= min <= max, got {raw!r}", line_number)
    return (x0, y0, x1, y1)


def parse_record(data: dict, line_number: int | None = None) -> ExamRecord:
    if not isinstance(data, dict):
        raise ManifestError(f"expected a JSON object, got {type(data).__name__}", line_number)
    missing = [f for f in _REQUIRED_FIELDS if f not in data]
    if missing:
        raise ManifestError(f"missing fields {missing}", line_number)
    if data["truth_label"] not in TRUTH_LABELS:
        raise ManifestError(f"truth_label must be one of {TRUTH_LABELS}, got {data['truth_label']!r}", line_number)
    if data["weak_label"] not in WEAK_LABELS:
        raise ManifestError(f"weak_label must be one of {WEAK_LABELS}, got {data['weak_label']!r}", line_number)
    if data["split"] not in SPLITS:
        raise ManifestError(f"split must be one of {SPLITS}, got {data['split']!r}", line_number)
    if not isinstance(data["annotated"], bool):
        raise ManifestError(f"annotated must be a boolean, got {data['annotated']!r}", line_number)
    if not isinstance(data["boxes"], list):
        raise ManifestError(f"boxes must be a list, got {data['boxes']!r}", line_number)
    boxes = [_parse_box(b, line_number) for b in data["boxes"]]
    if data["truth_label"] != "Lesion" and boxes:
        raise ManifestError(f"{data['truth_label']} exam must not carry boxes", line_number)
    if data["truth_label"] == "Lesion" and not boxes:
        raise ManifestError("Lesion exam must carry at least one box", line_number)
    if data["annotated"] and not boxes:
        raise ManifestError("annotated exam must carry at least one box", line_number)
    for key in ("exam_id", "image_path", "report_text"):
        if not isinstance(data[key], str):
            raise ManifestError(f"{key} must be a string", line_number)
    if not data["exam_id"]:
        raise ManifestError("exam_id must be nonempty", line_number)
    return ExamRecord(
        exam_id=data["exam_id"],
        image_path=data["image_path"],
        truth_label=data["truth_label"],
        weak_label=data["weak_label"],
        boxes=boxes,
        split=data["split"],
        annotated=data["annotated"],
        report_text=data["report_text"],
    )


def read_manifest(path: str | Path) -> list[ExamRecord]:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    records = []
    seen_ids: set[str] = set()
    with path.open() as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"invalid JSON ({exc.msg})", line_number) from exc
            record = parse_record(data, line_number)
            if record.exam_id in seen_ids:
                raise ManifestError(f"duplicate exam_id {record.exam_id!r}", line_number)
            seen_ids.add(record.exam_id)
            records.append(record)
    if not records:
        raise ManifestError(f"manifest is empty: {path}")
    return records


def write_manifest(records: list[ExamRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for record in records:
            fh.write(record.to_json() + "\n")


def split_records(records: list[ExamRecord], split: str) -> list[ExamRecord]:
    if split not in SPLITS:
        raise ManifestError(f"unknown split {split!r}")
    return [r for r in records if r.split == split]
