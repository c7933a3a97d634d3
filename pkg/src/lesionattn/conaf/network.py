"""Two-branch convolutional network.

A shared trunk of conv blocks (each: 3x3 convs + 2x2 max pool, four blocks
in total for a /16 downsample) feeds a classification branch (global max
pool, then c -> c/2 -> 2 with softmax) and a localisation branch (1x1
convs c -> c/2 -> 1 with sigmoid) that emits a dense scoremap.
"""

from __future__ import annotations

import torch
from torch import nn


class FeatureExtractor(nn.Module):
    """Conv trunk: one 2x2 pool per block, so /2**len(channels) overall."""

    def __init__(self, channels: tuple[int, ...], convs_per_block: int = 2, in_channels: int = 1):
        super().__init__()
        if not channels:
            raise ValueError("need at least one block width")
        layers: list[nn.Module] = []
        prev = in_channels
        for width in channels:
            for _ in range(convs_per_block):
                layers += [nn.Conv2d(prev, width, kernel_size=3, padding=1), nn.ReLU()]
                prev = width
            layers.append(nn.MaxPool2d(2))
        self.trunk = nn.Sequential(*layers)
        self.out_channels = prev
        self.in_channels = in_channels
        self.downsample_factor = 2 ** len(channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-3] != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {x.shape[-3]}")
        if x.shape[-2] % self.downsample_factor or x.shape[-1] % self.downsample_factor:
            raise ValueError(
                f"input {tuple(x.shape[-2:])} is not divisible by the trunk stride "
                f"{self.downsample_factor}"
            )
        return self.trunk(x)


class ClassifierHead(nn.Module):
    """Global max pool then two pointwise layers to 2-way softmax."""

    def __init__(self, in_channels: int):
        super().__init__()
        self.fc1 = nn.Linear(in_channels, in_channels // 2)
        self.fc2 = nn.Linear(in_channels // 2, 2)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        pooled = features.amax(dim=(-2, -1))
        return torch.softmax(self.fc2(torch.relu(self.fc1(pooled))), dim=-1)


class LocalizerHead(nn.Module):
    """Two 1x1 convolutions to a sigmoid scoremap, one cell per /16 patch."""

    def __init__(self, in_channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, in_channels // 2, kernel_size=1)
        self.conv2 = nn.Conv2d(in_channels // 2, 1, kernel_size=1)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.conv2(torch.relu(self.conv1(features)))).squeeze(1)


class ConafNet(nn.Module):
    def __init__(self, channels: tuple[int, ...] = (16, 32, 64, 128), convs_per_block: int = 2):
        super().__init__()
        self.features = FeatureExtractor(channels, convs_per_block)
        self.classifier = ClassifierHead(self.features.out_channels)
        self.localizer = LocalizerHead(self.features.out_channels)
        self.downsample_factor = self.features.downsample_factor

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Return (class probabilities [B, 2], scoremap at the trunk stride)."""
        features = self.features(x)
        return self.classifier(features), self.localizer(features)
