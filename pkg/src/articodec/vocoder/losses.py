"""Least-squares GAN objectives, mel reconstruction and feature matching."""
from __future__ import annotations

import torch

from .config import LossWeights, MelConfig
from .mel import mel_spectrogram_t


class LossDiverged(RuntimeError):
    """A loss component became non-finite; the training step must abort."""


def mel_l1(real: torch.Tensor, fake: torch.Tensor,
           mel_cfg: MelConfig | None = None) -> torch.Tensor:
    """Mean absolute log-mel distance between (B, L) waves."""
    cfg = mel_cfg or MelConfig()
    return torch.mean(torch.abs(
        mel_spectrogram_t(real, cfg) - mel_spectrogram_t(fake, cfg)))


def adversarial_loss(fake_outs) -> torch.Tensor:
    """Generator-side least-squares loss, summed over discriminators."""
    loss = 0.0
    for score, _ in fake_outs:
        loss = loss + torch.mean((score - 1.0) ** 2)
    return loss


def feature_match_loss(real_outs, fake_outs) -> torch.Tensor:
    """L1 between real/fake intermediate discriminator features."""
    loss = 0.0
    for (_, real_feats), (_, fake_feats) in zip(real_outs, fake_outs):
        for r, f in zip(real_feats, fake_feats):
            loss = loss + torch.mean(torch.abs(r.detach() - f))
    return loss


def _check_finite(components: dict) -> None:
    for name, value in components.items():
        if not torch.isfinite(value):
            raise LossDiverged(
                f"loss component {name!r} is non-finite ({float(value)!r}); "
                "aborting step")


def generator_loss(real: torch.Tensor, fake: torch.Tensor, bank,
                   weights: LossWeights | None = None,
                   mel_cfg: MelConfig | None = None):
    """Weighted generator objective; returns (total, component dict).

    Components are reported after weighting, so doubling a weight doubles
    exactly that component.
    """
    weights = weights or LossWeights()
    fake_outs = bank(fake)
    with torch.no_grad():
        real_outs = bank(real)
    components = {
        "gan": weights.gan * adversarial_loss(fake_outs),
        "mel": weights.mel * mel_l1(real, fake, mel_cfg),
        "feature_match": weights.feature_match * feature_match_loss(
            real_outs, fake_outs),
    }
    _check_finite(components)
    total = components["gan"] + components["mel"] + components["feature_match"]
    return total, components


def discriminator_loss(real_outs, fake_outs):
    """Least-squares discriminator objective; fake scores must be detached
    upstream. Returns (total, component dict)."""
    real_loss = 0.0
    fake_loss = 0.0
    for (score, _), (fake_score, _) in zip(real_outs, fake_outs):
        real_loss = real_loss + torch.mean((score - 1.0) ** 2)
        fake_loss = fake_loss + torch.mean(fake_score ** 2)
    components = {"real": real_loss, "fake": fake_loss}
    _check_finite(components)
    return real_loss + fake_loss, components
