"""Recurrent glimpse agent.

Per step the sensor crops a fine k x k patch and a coarse 2k x 2k patch
(pooled back to k x k) around the fixation point from a zero-padded image.
Both pass through one shared conv encoder; the flattened codes plus an
embedding of the fixation feed a fully connected layer producing the
glimpse vector v_t, which drives an LSTM core.  A locator head proposes
the next fixation as the mean of a fixed-variance Gaussian; the first
fixation is always the image center and contributes no log-probability.
Classification and a reward baseline both read the final hidden state,
the baseline through a detached copy so its fit does not shape the
features.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..config import RamafConfig


def to_pixel(coord: torch.Tensor, size: int) -> torch.Tensor:
    """Map normalized [-1, 1] coordinates to pixel indices (float)."""
    return (coord + 1.0) / 2.0 * (size - 1)


def location_log_prob(raw: torch.Tensor, mean: torch.Tensor, std: float) -> torch.Tensor:
    """Log-density of a fixation [.., 2] under an isotropic Gaussian policy."""
    dist = torch.distributions.Normal(mean, torch.as_tensor(std, dtype=mean.dtype))
    return dist.log_prob(raw).sum(dim=-1)


class GlimpseSensor:
    """Two-scale crops; stateless, so plain Python rather than a module."""

    def __init__(self, patch_size: int):
        self.patch_size = patch_size

    def extract(self, images: torch.Tensor, centers: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """images [B, 1, H, W]; centers [B, 2] normalized (x, y).

        Returns (fine, coarse) both [B, 1, k, k]; the coarse patch covers a
        2k window average-pooled by 2.  Regions beyond the border read 0.
        """
        b, _, h, w = images.shape
        k = self.patch_size
        pad = k  # enough for the coarse window at any in-range center
        padded = F.pad(images, (pad, pad, pad, pad))
        xs = torch.floor(to_pixel(centers[:, 0], w) + 0.5).long() + pad
        ys = torch.floor(to_pixel(centers[:, 1], h) + 0.5).long() + pad
        fine = torch.stack(
            [padded[i, :, ys[i] - k // 2 : ys[i] + k - k // 2, xs[i] - k // 2 : xs[i] + k - k // 2] for i in range(b)]
        )
        coarse_raw = torch.stack(
            [padded[i, :, ys[i] - k : ys[i] + k, xs[i] - k : xs[i] + k] for i in range(b)]
        )
        coarse = F.avg_pool2d(coarse_raw, 2)
        return fine, coarse


class PatchEncoder(nn.Module):
    """Two conv+pool stages shared by both scales; pretrainable layerwise."""

    def __init__(self, maps: int):
        super().__init__()
        self.conv1 = nn.Conv2d(1, maps, kernel_size=3, padding=1)
        self.conv2 = nn.Conv2d(maps, maps, kernel_size=3, padding=1)

    def stage1(self, x: torch.Tensor) -> torch.Tensor:
        return F.max_pool2d(torch.relu(self.conv1(x)), 2)

    def stage2(self, x: torch.Tensor) -> torch.Tensor:
        return F.max_pool2d(torch.relu(self.conv2(x)), 2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.stage2(self.stage1(x))


class GlimpseNetwork(nn.Module):
    def __init__(self, cfg: RamafConfig):
        super().__init__()
        self.sensor = GlimpseSensor(cfg.patch_size)
        self.encoder = PatchEncoder(cfg.enc_maps)
        code = cfg.enc_maps * (cfg.patch_size // 4) ** 2
        self.loc_embed = nn.Linear(2, cfg.loc_embed_dim)
        self.fc = nn.Linear(2 * code + cfg.loc_embed_dim, cfg.hidden_size)

    def forward(self, images: torch.Tensor, centers: torch.Tensor) -> torch.Tensor:
        fine, coarse = self.sensor.extract(images, centers)
        codes = torch.cat([self.encoder(fine).flatten(1), self.encoder(coarse).flatten(1)], dim=1)
        return self.fc(torch.cat([codes, self.loc_embed(centers)], dim=1))


@dataclass
class Episode:
    logits: torch.Tensor  # [B, 2]
    log_probs: torch.Tensor  # [B, T]; column 0 is zero (fixed start)
    centers: torch.Tensor  # [B, T, 2] normalized, clamped to [-1, 1]
    baseline: torch.Tensor  # [B]
    hidden: torch.Tensor  # [B, hidden]

    @property
    def probs(self) -> torch.Tensor:
        return torch.softmax(self.logits, dim=-1)


class RamafAgent(nn.Module):
    def __init__(self, cfg: RamafConfig):
        super().__init__()
        self.cfg = cfg
        self.glimpse = GlimpseNetwork(cfg)
        self.core = nn.LSTMCell(cfg.hidden_size, cfg.hidden_size)
        self.locator = nn.Linear(cfg.hidden_size, 2)
        self.classifier = nn.Linear(cfg.hidden_size, 2)
        self.baseline_head = nn.Linear(cfg.hidden_size, 1)

    def init_uniform(self, generator: torch.Generator | None = None) -> None:
        r = self.cfg.init_range
        for p in self.parameters():
            p.data.uniform_(-r, r, generator=generator)

    @property
    def loc_std(self) -> float:
        return self.cfg.sigma_sq**0.5 if self.cfg.sigma_mode == "variance" else self.cfg.sigma_sq

    def run_episode(
        self,
        images: torch.Tensor,
        generator: torch.Generator | None = None,
        sample: bool = True,
    ) -> Episode:
        b = images.shape[0]
        dtype = images.dtype
        t_steps = self.cfg.num_glimpses
        std = self.loc_std
        h = torch.zeros(b, self.cfg.hidden_size, dtype=dtype)
        c = torch.zeros_like(h)
        loc = torch.zeros(b, 2, dtype=dtype)  # first fixation: image center
        log_probs = [torch.zeros(b, dtype=dtype)]
        centers = [loc]
        for t in range(t_steps):
            v = self.glimpse(images, loc)
            h, c = self.core(v, (h, c))
            if t + 1 < t_steps:
                mean = torch.tanh(self.locator(h))
                if sample:
                    noise = torch.randn(b, 2, generator=generator, dtype=dtype)
                    raw = (mean + std * noise).detach()
                else:
                    raw = mean.detach()
                log_probs.append(location_log_prob(raw, mean, std))
                loc = raw.clamp(-1.0, 1.0)
                centers.append(loc)
        return Episode(
            logits=self.classifier(h),
            log_probs=torch.stack(log_probs, dim=1),
            centers=torch.stack(centers, dim=1),
            baseline=self.baseline_head(h.detach()).squeeze(-1),
            hidden=h,
        )
