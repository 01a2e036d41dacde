"""Training objectives.

Content losses are restricted to the event segment plus a half-hour margin
on each side (the H-window), so the networks concentrate on the gap and its
transitions instead of the easy 20-odd observed hours. The adversarial and
feature-matching terms run the critic over the full spliced window; splicing
guarantees fake and real inputs differ only inside the mask.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F

from loadfill.samples import EventSpec


def loss_window(event: EventSpec, margin_steps: int, window_len: int) -> tuple[int, int]:
    """Half-open index range covering the event plus margins, edge-clipped."""
    if margin_steps < 0:
        raise ValueError("margin_steps must be >= 0")
    start = max(0, event.start_index - margin_steps)
    stop = min(window_len, event.stop_index + margin_steps)
    return start, stop


def window_mask(events: list[EventSpec], margin_steps: int, window_len: int, dtype=torch.float32) -> torch.Tensor:
    """(B, 1, W) indicator of each sample's H-window."""
    out = torch.zeros(len(events), 1, window_len, dtype=dtype)
    for i, event in enumerate(events):
        start, stop = loss_window(event, margin_steps, window_len)
        out[i, 0, start:stop] = 1.0
    return out


def content_loss(pred: torch.Tensor, truth: torch.Tensor, hmask: torch.Tensor) -> torch.Tensor:
    """Mean squared error inside each sample's H-window, averaged over the batch."""
    counts = hmask.sum(dim=(1, 2))
    if (counts == 0).any():
        raise ValueError("a sample has an empty loss window")
    se = ((pred - truth) ** 2 * hmask).sum(dim=(1, 2))
    return (se / counts).mean()


def coarse_loss(stage1: torch.Tensor, truth: torch.Tensor, hmask: torch.Tensor) -> torch.Tensor:
    return content_loss(stage1, truth, hmask)


def adv_loss(fake_scores: torch.Tensor) -> torch.Tensor:
    """Generator-side adversarial term: the negated mean critic score."""
    return -fake_scores.mean()


def feat_loss(fake_features: list[torch.Tensor], real_features: list[torch.Tensor]) -> torch.Tensor:
    """Sum over tapped layers of the mean squared feature-map difference."""
    if len(fake_features) != len(real_features):
        raise ValueError(f"feature lists differ in length: {len(fake_features)} vs {len(real_features)}")
    total = None
    for fake, real in zip(fake_features, real_features):
        if fake.shape != real.shape:
            raise ValueError(f"feature shapes differ: {tuple(fake.shape)} vs {tuple(real.shape)}")
        term = F.mse_loss(fake, real)
        total = term if total is None else total + term
    if total is None:
        raise ValueError("no features to match")
    return total


def refine_loss(
    stage2: torch.Tensor,
    truth: torch.Tensor,
    hmask: torch.Tensor,
    fake_scores: torch.Tensor,
    fake_features: list[torch.Tensor],
    real_features: list[torch.Tensor],
    lambda_adv: float,
    lambda_feat: float,
) -> torch.Tensor:
    loss = content_loss(stage2, truth, hmask)
    if lambda_adv != 0.0:
        loss = loss + lambda_adv * adv_loss(fake_scores)
    if lambda_feat != 0.0:
        loss = loss + lambda_feat * feat_loss(fake_features, real_features)
    return loss


def disc_loss(real_scores: torch.Tensor, fake_scores: torch.Tensor) -> torch.Tensor:
    """Hinge objective: reals above +1, fakes below -1, saturating beyond."""
    return F.relu(1.0 - real_scores).mean() + F.relu(1.0 + fake_scores).mean()
