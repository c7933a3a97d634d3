"""Training loop for the two-branch network."""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np
import torch

from ..checkpoints import save_checkpoint
from ..config import RunConfig, config_hash
from ..data import Corpus, binary_target, task_filter
from ..evalkit.classification import binary_metrics
from ..rng import derive_seed, substream
from .batching import MixedBatchSampler
from .losses import classification_loss, hybrid_loss, localization_loss
from .masks import build_target_mask
from .network import ConafNet


def make_optimizer(name: str, params, lr: float) -> torch.optim.Optimizer:
    if name == "adadelta":
        return torch.optim.Adadelta(params, lr=lr)
    if name == "adam":
        return torch.optim.Adam(params, lr=lr)
    if name == "sgd":
        return torch.optim.SGD(params, lr=lr)
    raise ValueError(f"unknown optimizer {name!r}")


@torch.no_grad()
def predict_probs(model: ConafNet, images: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Lesion probability per image, chunked to bound memory."""
    model.eval()
    probs = []
    for i in range(0, len(images), chunk):
        x = torch.from_numpy(images[i : i + chunk]).unsqueeze(1)
        p, _ = model(x)
        probs.append(p[:, 1].numpy())
    model.train()
    return np.concatenate(probs) if probs else np.zeros(0, dtype=np.float32)


@torch.no_grad()
def predict_scoremaps(model: ConafNet, images: np.ndarray, chunk: int = 64) -> np.ndarray:
    model.eval()
    maps = []
    for i in range(0, len(images), chunk):
        x = torch.from_numpy(images[i : i + chunk]).unsqueeze(1)
        _, sm = model(x)
        maps.append(sm.numpy())
    model.train()
    return np.concatenate(maps)


def _classifier_metrics(model: ConafNet, corpus: Corpus, records, by: str) -> dict:
    if not records:
        return {"accuracy": None, "f1": None, "sensitivity": None, "precision": None}
    probs = predict_probs(model, corpus.stack(records))
    truth = np.array([binary_target(r, by) for r in records])
    m = binary_metrics(probs >= 0.5, truth)
    return {
        "accuracy": m.accuracy,
        "f1": m.f1,
        "sensitivity": m.sensitivity,
        "precision": m.precision,
    }


def train_conaf(cfg: RunConfig, manifest_path: str | Path, out_dir: str | Path) -> dict:
    """Train on weak labels with interleaved annotated batches.

    Writes metrics.jsonl plus best/ and last/ checkpoints under ``out_dir``
    and returns a summary dict.
    """
    cfg.validate()
    ccfg = cfg.conaf
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if ccfg.deterministic:
        torch.set_num_threads(1)
    torch.manual_seed(derive_seed(cfg.seed, "conaf-init"))
    model = ConafNet(ccfg.channels, ccfg.convs_per_block)
    optimizer = make_optimizer(ccfg.optimizer, model.parameters(), ccfg.learning_rate)

    corpus = Corpus.load(manifest_path)
    h, w = corpus.image_size()
    train_records = task_filter(corpus.split("train"), ccfg.task)
    val_records = task_filter(corpus.split("val"), ccfg.task)
    sampler = MixedBatchSampler(
        train_records, ccfg.batch_size, ccfg.mix_weak_prob, ccfg.task, substream(cfg.seed, "conaf-batch")
    )

    mask_cache: dict[str, np.ndarray] = {}

    def target_mask(record) -> np.ndarray:
        if record.exam_id not in mask_cache:
            mask_cache[record.exam_id] = build_target_mask(
                record.boxes, (h, w), ccfg.sigma, factor=model.downsample_factor
            ).astype(np.float32)
        return mask_cache[record.exam_id]

    chash = config_hash(cfg)
    metrics_path = out_dir / "metrics.jsonl"
    best = {"f1": -1.0, "step": 0}
    last_row: dict = {}
    with metrics_path.open("w") as metrics_file:
        for step in range(1, ccfg.max_steps + 1):
            plan = sampler.draw()
            x = torch.from_numpy(corpus.stack(plan.records)).unsqueeze(1)
            y = torch.from_numpy(plan.targets)
            probs, scoremaps = model(x)
            h_c = classification_loss(probs[:, 1], y)
            h_l = None
            if plan.annotated:
                pos = [i for i, r in enumerate(plan.records) if plan.targets[i] == 1]
                z = torch.from_numpy(np.stack([target_mask(plan.records[i]) for i in pos]))
                h_l = localization_loss(scoremaps[pos], z, ccfg.alpha)
            loss = hybrid_loss(h_c, h_l, ccfg.lambda1, ccfg.lambda2)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()

            if step % ccfg.eval_every == 0 or step == ccfg.max_steps:
                val = _classifier_metrics(model, corpus, val_records, "weak_label")
                row = {
                    "step": step,
                    "H": float(loss.item()),
                    "H_c": float(h_c.item()),
                    "H_l": None if h_l is None else float(h_l.item()),
                    "val_accuracy": val["accuracy"],
                    "val_f1": val["f1"],
                    "val_sensitivity": val["sensitivity"],
                    "val_precision": val["precision"],
                    "timestamp": None if ccfg.deterministic else time.time(),
                }
                metrics_file.write(json.dumps(row) + "\n")
                last_row = row
                f1 = val["f1"] if val["f1"] is not None else -1.0
                if f1 > best["f1"]:
                    best = {"f1": f1, "step": step}
                    save_checkpoint(
                        out_dir / "best",
                        model,
                        model_kind="conaf",
                        step=step,
                        config_hash=chash,
                        extra={"channels": list(ccfg.channels), "convs_per_block": ccfg.convs_per_block},
                    )

    extra = {"channels": list(ccfg.channels), "convs_per_block": ccfg.convs_per_block}
    save_checkpoint(out_dir / "last", model, model_kind="conaf", step=ccfg.max_steps, config_hash=chash, extra=extra)
    if best["step"] == 0:  # val F1 was never defined; fall back to the final weights
        save_checkpoint(out_dir / "best", model, model_kind="conaf", step=ccfg.max_steps, config_hash=chash, extra=extra)
    summary = {
        "steps": ccfg.max_steps,
        "best_step": best["step"],
        "best_val_f1": None if best["f1"] < 0 else best["f1"],
        "final": last_row,
        "lambda2": ccfg.lambda2,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary
