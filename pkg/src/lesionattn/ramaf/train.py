"""REINFORCE training loop for the glimpse agent."""

from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from ..checkpoints import save_checkpoint
from ..config import RunConfig, config_hash
from ..data import Corpus, binary_target
from ..errors import ConfigError
from ..rng import derive_seed, substream
from .modules import RamafAgent
from .pretrain import pretrain_encoder
from .reward import compute_rewards


def _pools(records):
    positives = [r for r in records if r.weak_label == "Lesion"]
    negatives = [r for r in records if r.weak_label == "Normal"]
    annotated = [r for r in positives if r.annotated and r.boxes]
    if not positives or not negatives:
        raise ConfigError("training split needs both weak Lesion and weak Normal exams")
    return positives, negatives, annotated


def _draw_batch(positives, negatives, annotated, cfg, rng):
    """Half Lesion, half Normal; a sampled number of the Lesion half is
    annotated (box-carrying) so the spatial reward has something to score."""
    half = cfg.batch_size // 2
    n_annot = int(rng.integers(cfg.annotated_min, cfg.annotated_max + 1))
    n_annot = min(n_annot, half, len(annotated))
    chosen = []
    if n_annot:
        idx = rng.choice(len(annotated), size=n_annot, replace=False)
        chosen += [annotated[int(i)] for i in idx]
    n_weak = half - n_annot
    if n_weak:
        idx = rng.choice(len(positives), size=n_weak, replace=len(positives) < n_weak)
        chosen += [positives[int(i)] for i in idx]
    n_neg = cfg.batch_size - len(chosen)
    idx = rng.choice(len(negatives), size=n_neg, replace=len(negatives) < n_neg)
    chosen += [negatives[int(i)] for i in idx]
    return chosen


@torch.no_grad()
def predict_labels(
    agent: RamafAgent, images: np.ndarray, generator: torch.Generator | None = None, chunk: int = 64
) -> np.ndarray:
    """Deterministic (policy-mean) predictions unless a generator is given."""
    agent.eval()
    preds = []
    for i in range(0, len(images), chunk):
        x = torch.from_numpy(images[i : i + chunk]).unsqueeze(1)
        episode = agent.run_episode(x, generator=generator, sample=generator is not None)
        preds.append(episode.logits.argmax(dim=-1).numpy())
    agent.train()
    return np.concatenate(preds)


def train_ramaf(cfg: RunConfig, manifest_path: str | Path, out_dir: str | Path) -> dict:
    """Train the agent; writes metrics.jsonl and best/ and last/ checkpoints."""
    cfg.validate()
    rcfg = cfg.ramaf
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if rcfg.deterministic:
        torch.set_num_threads(1)
    torch.manual_seed(derive_seed(cfg.seed, "ramaf-init"))
    agent = RamafAgent(rcfg)
    init_gen = torch.Generator().manual_seed(derive_seed(cfg.seed, "ramaf-init-uniform"))
    agent.init_uniform(init_gen)

    corpus = Corpus.load(manifest_path)
    h, w = corpus.image_size()
    train_records = corpus.split("train")
    positives, negatives, annotated = _pools(train_records)
    val_records = [r for r in corpus.split("val") if r.weak_label in ("Lesion", "Normal")]

    pretrain_stats = None
    if rcfg.pretrain:
        pretrain_stats = pretrain_encoder(agent.glimpse.encoder, corpus, train_records, rcfg, cfg.seed)

    optimizer = torch.optim.Adam(agent.parameters(), lr=rcfg.learning_rate)
    rng = substream(cfg.seed, "ramaf-batch")
    sample_gen = torch.Generator().manual_seed(derive_seed(cfg.seed, "ramaf-sample"))
    steps_per_epoch = rcfg.steps_per_epoch or max(1, math.ceil((len(positives) + len(negatives)) / rcfg.batch_size))
    chash = config_hash(cfg)

    best = {"val_accuracy": -1.0, "epoch": 0}
    history = []
    extra = {
        "num_glimpses": rcfg.num_glimpses,
        "patch_size": rcfg.patch_size,
        "enc_maps": rcfg.enc_maps,
        "hidden_size": rcfg.hidden_size,
        "loc_embed_dim": rcfg.loc_embed_dim,
        "use_spatial_reward": rcfg.use_spatial_reward,
    }
    metrics_path = out_dir / "metrics.jsonl"
    with metrics_path.open("w") as metrics_file:
        for epoch in range(1, rcfg.epochs + 1):
            acc_sum = reward_sum = baseline_mse_sum = 0.0
            for _ in range(steps_per_epoch):
                batch = _draw_batch(positives, negatives, annotated, rcfg, rng)
                x = torch.from_numpy(corpus.stack(batch)).unsqueeze(1)
                y = torch.from_numpy(np.array([binary_target(r) for r in batch], dtype=np.int64))
                episode = agent.run_episode(x, generator=sample_gen, sample=True)
                ce = F.cross_entropy(episode.logits, y)
                correct = (episode.logits.argmax(dim=-1) == y).numpy().astype(bool)
                breakdown = compute_rewards(
                    correct,
                    episode.centers.detach().numpy(),
                    [r.boxes for r in batch],
                    np.array([r.annotated for r in batch]),
                    (h, w),
                    rcfg.intermediate_reward,
                    rcfg.use_spatial_reward,
                )
                reward = torch.from_numpy(breakdown.total).to(x.dtype)
                advantage = (reward - episode.baseline).detach()
                policy_loss = -(episode.log_probs.sum(dim=1) * advantage).mean()
                baseline_loss = F.mse_loss(episode.baseline, reward)
                loss = ce + policy_loss + baseline_loss
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                acc_sum += float(correct.mean())
                reward_sum += float(breakdown.total.mean())
                baseline_mse_sum += float(baseline_loss.item())

            val_accuracy = None
            if val_records:
                preds = predict_labels(agent, corpus.stack(val_records))
                truth = np.array([binary_target(r) for r in val_records])
                val_accuracy = float((preds == truth).mean())
            row = {
                "epoch": epoch,
                "train_accuracy": acc_sum / steps_per_epoch,
                "mean_reward": reward_sum / steps_per_epoch,
                "baseline_mse": baseline_mse_sum / steps_per_epoch,
                "val_accuracy": val_accuracy,
                "timestamp": None if rcfg.deterministic else time.time(),
            }
            metrics_file.write(json.dumps(row) + "\n")
            history.append(row)
            if val_accuracy is not None and val_accuracy > best["val_accuracy"]:
                best = {"val_accuracy": val_accuracy, "epoch": epoch}
                save_checkpoint(out_dir / "best", agent, model_kind="ramaf", step=epoch, config_hash=chash, extra=extra)

    save_checkpoint(out_dir / "last", agent, model_kind="ramaf", step=rcfg.epochs, config_hash=chash, extra=extra)
    if best["epoch"] == 0:
        save_checkpoint(out_dir / "best", agent, model_kind="ramaf", step=rcfg.epochs, config_hash=chash, extra=extra)
    summary = {
        "epochs": rcfg.epochs,
        "steps_per_epoch": steps_per_epoch,
        "best_epoch": best["epoch"],
        "best_val_accuracy": None if best["val_accuracy"] < 0 else best["val_accuracy"],
        "final": history[-1] if history else {},
        "val_accuracy_by_epoch": [r["val_accuracy"] for r in history],
        "use_spatial_reward": rcfg.use_spatial_reward,
        "pretrain": pretrain_stats,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary
