"""Greedy layerwise autoencoder pretraining for the glimpse encoder.

Each conv+pool stage is trained to reconstruct its own input from the
pooled code through a throwaway nearest-upsample decoder; stage 2 sees the
frozen stage-1 codes.  Patches are random fine-glimpse-sized crops from
training images.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..config import RamafConfig
from ..data import Corpus
from ..manifest import ExamRecord
from ..rng import derive_seed, substream
from .modules import PatchEncoder


def sample_patches(
    corpus: Corpus, records: list[ExamRecord], n: int, k: int, rng: np.random.Generator
) -> np.ndarray:
    h, w = corpus.image_size()
    out = np.empty((n, 1, k, k), dtype=np.float32)
    for i in range(n):
        record = records[int(rng.integers(len(records)))]
        y0 = int(rng.integers(h - k + 1))
        x0 = int(rng.integers(w - k + 1))
        out[i, 0] = corpus.image(record.exam_id)[y0 : y0 + k, x0 : x0 + k]
    return out


def _train_stage(
    stage_fn,
    params: list[torch.Tensor],
    decoder: nn.Module,
    inputs_fn,
    steps: int,
    lr: float,
) -> float:
    optimizer = torch.optim.Adam(list(params) + list(decoder.parameters()), lr=lr)
    loss_val = 0.0
    for _ in range(steps):
        x = inputs_fn()
        code = stage_fn(x)
        recon = decoder(code)
        loss = F.mse_loss(recon, x)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        loss_val = float(loss.item())
    return loss_val


def pretrain_encoder(
    encoder: PatchEncoder,
    corpus: Corpus,
    records: list[ExamRecord],
    cfg: RamafConfig,
    seed: int,
) -> dict:
    """Train conv1 then conv2 in place; returns final per-stage losses."""
    rng = substream(seed, "ramaf-pretrain")
    gen = torch.Generator().manual_seed(derive_seed(seed, "ramaf-pretrain-init"))
    k = cfg.patch_size

    def batch() -> torch.Tensor:
        return torch.from_numpy(sample_patches(corpus, records, cfg.pretrain_batch, k, rng))

    dec1 = nn.Sequential(nn.Upsample(scale_factor=2, mode="nearest"), nn.Conv2d(cfg.enc_maps, 1, 3, padding=1))
    for p in dec1.parameters():
        p.data.uniform_(-cfg.init_range, cfg.init_range, generator=gen)
    loss1 = _train_stage(
        encoder.stage1, list(encoder.conv1.parameters()), dec1, batch, cfg.pretrain_steps, cfg.pretrain_lr
    )

    dec2 = nn.Sequential(
        nn.Upsample(scale_factor=2, mode="nearest"), nn.Conv2d(cfg.enc_maps, cfg.enc_maps, 3, padding=1)
    )
    for p in dec2.parameters():
        p.data.uniform_(-cfg.init_range, cfg.init_range, generator=gen)

    def stage2_inputs() -> torch.Tensor:
        with torch.no_grad():
            return encoder.stage1(batch())

    loss2 = _train_stage(
        encoder.stage2, list(encoder.conv2.parameters()), dec2, stage2_inputs, cfg.pretrain_steps, cfg.pretrain_lr
    )
    return {"stage1_mse": loss1, "stage2_mse": loss2}
