#!/usr/bin/env python3
"""Render a small grid of sample exams (one per class) for eyeballing."""

import argparse
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from lesionattn.config import GenConfig
from lesionattn.synthgen.images import quantize, render_exam
from lesionattn.synthgen.reports import render_report


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="samples", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--per-class", type=int, default=4)
    args = parser.parse_args()

    cfg = GenConfig()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    idx = 0
    for label in ("Normal", "Lesion", "Others"):
        for _ in range(args.per_class):
            exam = render_exam(cfg, args.seed, idx, label)
            img = Image.fromarray(quantize(exam.pixels), "L").convert("RGB")
            draw = ImageDraw.Draw(img)
            for box in exam.boxes:
                draw.rectangle(box, outline=(0, 255, 0), width=1)
            img.save(out / f"{label.lower()}_{idx:03d}.png")
            report = render_report(cfg, args.seed, idx, label, n_lesions=max(1, len(exam.lesions)))
            (out / f"{label.lower()}_{idx:03d}.txt").write_text(report + "\n")
            idx += 1
    print(f"wrote {idx} samples to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
