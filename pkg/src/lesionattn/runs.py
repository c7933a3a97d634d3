"""Run-directory plumbing shared by the CLI subcommands.

Rebuilds models from self-describing checkpoints and drives the evaluation
pipelines, writing JSON summaries plus JSONL/CSV tables under each run's
--out tree.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import torch

from .checkpoints import load_checkpoint, read_header
from .conaf.losses import normalize_scoremap
from .conaf.network import ConafNet
from .conaf.train import predict_probs, predict_scoremaps
from .config import EvalConfig, RamafConfig
from .data import Corpus, binary_target, task_filter
from .errors import CheckpointError, ConfigError
from .evalkit import (
    binary_metrics,
    box_detection_stats,
    decile_table,
    exam_size,
    glimpse_hit_stats,
    localisation_metrics,
    overlap_sweep,
    scoremap_boxes,
)
from .evalkit.heatmap import save_heatmap
from .manifest import ExamRecord
from .ramaf.modules import RamafAgent

OVERLAP_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))  # 0.05 .. 0.95


def _check_kind(header: dict, expected: str, checkpoint_dir) -> None:
    kind = header.get("model_kind")
    if kind != expected:
        raise CheckpointError(
            f"checkpoint under {checkpoint_dir} holds a {kind!r} model, expected {expected!r}"
        )


def load_conaf(checkpoint_dir: str | Path) -> ConafNet:
    header = read_header(checkpoint_dir)
    _check_kind(header, "conaf", checkpoint_dir)
    extra = header.get("extra", {})
    try:
        model = ConafNet(tuple(extra["channels"]), int(extra["convs_per_block"]))
    except KeyError as exc:
        raise CheckpointError(f"checkpoint header lacks architecture field {exc}") from exc
    load_checkpoint(checkpoint_dir, model, expected_kind="conaf")
    model.eval()
    return model


def load_ramaf(checkpoint_dir: str | Path) -> RamafAgent:
    header = read_header(checkpoint_dir)
    _check_kind(header, "ramaf", checkpoint_dir)
    extra = header.get("extra", {})
    try:
        rcfg = RamafConfig(
            num_glimpses=int(extra["num_glimpses"]),
            patch_size=int(extra["patch_size"]),
            enc_maps=int(extra["enc_maps"]),
            hidden_size=int(extra["hidden_size"]),
            loc_embed_dim=int(extra["loc_embed_dim"]),
        )
    except KeyError as exc:
        raise CheckpointError(f"checkpoint header lacks architecture field {exc}") from exc
    agent = RamafAgent(rcfg)
    load_checkpoint(checkpoint_dir, agent, expected_kind="ramaf")
    agent.eval()
    return agent


def load_model(checkpoint_dir: str | Path):
    """(kind, model) from a checkpoint directory of either flavour."""
    kind = read_header(checkpoint_dir).get("model_kind")
    if kind == "conaf":
        return kind, load_conaf(checkpoint_dir)
    if kind == "ramaf":
        return kind, load_ramaf(checkpoint_dir)
    raise CheckpointError(f"unknown model kind {kind!r} in {checkpoint_dir}")


def write_jsonl(path: str | Path, rows: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def write_csv(path: str | Path, rows: list[dict], fieldnames: list[str] | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        path.write_text("")
        return
    fieldnames = fieldnames or list(rows[0].keys())
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in fieldnames})


def _predict_binary(kind: str, model, images: np.ndarray) -> np.ndarray:
    """0/1 Lesion predictions with the deterministic (no-sampling) path."""
    if kind == "conaf":
        return (predict_probs(model, images) >= 0.5).astype(int)
    from .ramaf.train import predict_labels

    return predict_labels(model, images).astype(int)


def _annotated_test(corpus: Corpus) -> list[ExamRecord]:
    records = [r for r in corpus.split("test") if r.annotated]
    if not records:
        raise ConfigError("no annotated test exams in this manifest")
    return records


def eval_classification(manifest_path: str | Path, checkpoint_dir: str | Path, out_dir: str | Path, task: str) -> dict:
    """Test-split binary metrics against truth labels (Table 2 layout)."""
    corpus = Corpus.load(manifest_path)
    kind, model = load_model(checkpoint_dir)
    records = task_filter(corpus.split("test"), task, by="truth_label")
    if not records:
        raise ConfigError("no test exams for this task")
    preds = _predict_binary(kind, model, corpus.stack(records))
    truth = np.array([binary_target(r, "truth_label") for r in records])
    m = binary_metrics(preds, truth)
    result = {"model": kind, "task": task, "n_exams": len(records), **m.to_dict()}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "classification.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    table = [
        {
            "model": kind,
            "accuracy": m.accuracy,
            "f1": m.f1,
            "sensitivity": m.sensitivity,
            "precision": m.precision,
        }
    ]
    write_csv(out_dir / "classification.csv", table)
    write_jsonl(out_dir / "classification.jsonl", table)
    return result


def eval_localisation(
    manifest_path: str | Path,
    checkpoint_dir: str | Path,
    out_dir: str | Path,
    ecfg: EvalConfig,
) -> dict:
    """Scoremap detection sweep on annotated test exams (Table 3 layout)."""
    corpus = Corpus.load(manifest_path)
    model = load_conaf(checkpoint_dir)
    records = _annotated_test(corpus)
    raw = predict_scoremaps(model, corpus.stack(records))
    phi = normalize_scoremap(torch.from_numpy(raw)).numpy()
    maps = [phi[i] for i in range(len(records))]
    boxes = [list(r.boxes) for r in records]
    factor = model.downsample_factor

    headline_rows = [
        localisation_metrics(maps, boxes, t, factor, ecfg.overlap_threshold)
        for t in ecfg.detection_thresholds
    ]
    curve_rows = overlap_sweep(maps, boxes, ecfg.detection_thresholds, factor, OVERLAP_GRID)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_jsonl(out_dir / "localisation.jsonl", headline_rows)
    write_csv(
        out_dir / "localisation.csv",
        [
            {
                "threshold": r["threshold"],
                "sensitivity": r["sensitivity"],
                "precision": r["precision"],
                "average_overlap": r["average_overlap"],
            }
            for r in headline_rows
        ],
    )
    write_csv(out_dir / "localisation_curves.csv", curve_rows)

    scored = [r for r in headline_rows if r["sensitivity"] is not None]
    best = max(scored, key=lambda r: r["sensitivity"]) if scored else None
    summary = {
        "n_exams": len(records),
        "overlap_threshold": ecfg.overlap_threshold,
        "best_threshold": None if best is None else best["threshold"],
        "best_sensitivity": None if best is None else best["sensitivity"],
        "rows": headline_rows,
    }
    (out_dir / "localisation.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def collect_traces(agent: RamafAgent, images: np.ndarray, chunk: int = 64) -> list[np.ndarray]:
    """Mean-path fixation sequences, one [T, 2] array per exam."""
    agent.eval()
    traces: list[np.ndarray] = []
    with torch.no_grad():
        for i in range(0, len(images), chunk):
            x = torch.from_numpy(images[i : i + chunk]).unsqueeze(1)
            episode = agent.run_episode(x, sample=False)
            centers = episode.centers.numpy()
            traces.extend(centers[j] for j in range(len(centers)))
    return traces


def eval_glimpse(manifest_path: str | Path, checkpoint_dir: str | Path, out_dir: str | Path) -> dict:
    """Fixation hit statistics on annotated test exams, both variants."""
    corpus = Corpus.load(manifest_path)
    agent = load_ramaf(checkpoint_dir)
    records = _annotated_test(corpus)
    traces = collect_traces(agent, corpus.stack(records))
    boxes = [list(r.boxes) for r in records]
    size = corpus.image_size()
    k = agent.cfg.patch_size

    result = {"n_exams": len(records), "patch_size": k}
    rows = []
    for mode in ("patch", "center"):
        hits = glimpse_hit_stats(traces, boxes, size, k, mode)
        detect = box_detection_stats(traces, boxes, size, k, mode)
        result[mode] = {**hits, **{f"box_{key}": v for key, v in detect.items() if key != "mode"}}
        rows.append(
            {
                "mode": mode,
                "hit_rate": hits["hit_rate"],
                "exam_coverage": hits["exam_coverage"],
                "box_detection_rate": detect["detection_rate"],
            }
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "glimpse.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    write_csv(out_dir / "glimpse.csv", rows)
    write_jsonl(out_dir / "glimpse.jsonl", rows)
    return result


def eval_deciles(
    manifest_path: str | Path,
    checkpoint_dir: str | Path,
    out_dir: str | Path,
    n_bins: int,
    mm_per_pixel: float | None = None,
) -> dict:
    """Per-size-bin accuracy over annotated test lesions."""
    corpus = Corpus.load(manifest_path)
    kind, model = load_model(checkpoint_dir)
    records = _annotated_test(corpus)
    preds = _predict_binary(kind, model, corpus.stack(records))
    scale = 1.0 if mm_per_pixel is None else mm_per_pixel
    sizes = [exam_size(r.boxes, scale) for r in records]
    correct = [int(p) == 1 for p in preds]  # every annotated exam is a Lesion
    rows = decile_table(sizes, correct, n_bins=n_bins, exam_ids=[r.exam_id for r in records])
    result = {
        "model": kind,
        "n_exams": len(records),
        "units": "mm" if mm_per_pixel is not None else "px",
        "rows": rows,
    }
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "deciles.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    write_csv(out_dir / "deciles.csv", rows)
    write_jsonl(out_dir / "deciles.jsonl", rows)
    return result


def render_exam_heatmap(
    manifest_path: str | Path,
    checkpoint_dir: str | Path,
    exam_id: str,
    out_path: str | Path,
    threshold: float = 0.4,
) -> dict:
    corpus = Corpus.load(manifest_path)
    model = load_conaf(checkpoint_dir)
    if exam_id not in corpus.by_id:
        raise ConfigError(f"unknown exam_id {exam_id!r}")
    record = corpus.by_id[exam_id]
    image = corpus.image(exam_id)
    raw = predict_scoremaps(model, image[None])
    phi = normalize_scoremap(torch.from_numpy(raw)).numpy()[0]
    predicted = scoremap_boxes(phi, threshold, model.downsample_factor)
    save_heatmap(out_path, image, phi, list(record.boxes), predicted)
    return {"exam_id": exam_id, "out": str(out_path), "n_predicted_boxes": len(predicted)}


def merge_reports(run_dirs: list[str | Path], out_dir: str | Path) -> dict:
    """Collect per-run JSON artifacts into one comparison table."""
    rows = []
    merged: dict[str, dict] = {}
    for run in run_dirs:
        run = Path(run)
        if not run.exists():
            raise ConfigError(f"run directory {run} does not exist")
        entry: dict = {"run": run.name}
        for name in ("classification", "localisation", "glimpse", "deciles", "summary"):
            path = run / f"{name}.json"
            if path.exists():
                entry[name] = json.loads(path.read_text())
        merged[run.name] = entry
        cls = entry.get("classification", {})
        loc = entry.get("localisation", {})
        gl = entry.get("glimpse", {})
        rows.append(
            {
                "run": run.name,
                "model": cls.get("model"),
                "accuracy": cls.get("accuracy"),
                "f1": cls.get("f1"),
                "sensitivity": cls.get("sensitivity"),
                "precision": cls.get("precision"),
                "loc_sensitivity": loc.get("best_sensitivity"),
                "glimpse_hit_rate": (gl.get("patch") or {}).get("hit_rate"),
            }
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(merged, indent=2, sort_keys=True) + "\n")
    write_csv(out_dir / "report.csv", rows)
    return merged
