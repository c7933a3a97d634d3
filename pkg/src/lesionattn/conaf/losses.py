"""Hybrid loss: weighted classification + localisation terms.

H = lambda1 * H_c + lambda2 * H_l.  H_c is binary cross-entropy on the
Lesion probability with a clamp guard; H_l compares the peak-normalized
scoremap phi* against the Gaussian target z through a denominator
(alpha - z) that up-weights errors near the peak (alpha > 1 keeps it
strictly positive).  H_l is summed over scoremap cells and averaged over
the annotated items only.
"""

from __future__ import annotations

import torch

PROB_FLOOR = 1e-7
NORM_EPS = 1e-8


def classification_loss(lesion_prob: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean BCE of P(Lesion) against 0/1 targets, clamped away from {0, 1}."""
    p = lesion_prob.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
    t = target.to(p.dtype)
    return -(t * torch.log(p) + (1.0 - t) * torch.log(1.0 - p)).mean()


def normalize_scoremap(scoremap: torch.Tensor) -> torch.Tensor:
    """Divide each item's scoremap by its max (guarded for flat-zero maps)."""
    peak = scoremap.flatten(-2).max(dim=-1).values.clamp_min(NORM_EPS)
    return scoremap / peak[..., None, None]


def localization_residual_loss(phi_star: torch.Tensor, target: torch.Tensor, alpha: float) -> torch.Tensor:
    """Sum of squared weighted residuals per item, averaged over items.

    ``phi_star`` is the already peak-normalized scoremap [N, h, w]; each
    cell contributes ((phi* - z) / (alpha - z))**2.
    """
    if alpha <= 1.0:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    if phi_star.shape != target.shape:
        raise ValueError(f"scoremap/target shape mismatch: {phi_star.shape} vs {target.shape}")
    residual = (phi_star - target) / (alpha - target)
    return residual.pow(2).sum(dim=(-2, -1)).mean()


def localization_loss(scoremap: torch.Tensor, target: torch.Tensor, alpha: float) -> torch.Tensor:
    """Residual loss on the raw sigmoid output [N, h, w]; normalization to
    phi* happens here so callers pass the branch output directly.
    """
    return localization_residual_loss(normalize_scoremap(scoremap), target, alpha)


def hybrid_loss(
    h_c: torch.Tensor,
    h_l: torch.Tensor | None,
    lambda1: float,
    lambda2: float,
) -> torch.Tensor:
    """Weighted sum; batches without annotated items carry no H_l term."""
    total = lambda1 * h_c
    if h_l is not None:
        total = total + lambda2 * h_l
    return total
