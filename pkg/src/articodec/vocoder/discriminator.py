"""Multi-period and multi-scale waveform discriminators."""
from __future__ import annotations

import math

import torch
import torch.nn.functional as F

from .config import DiscriminatorConfig
from .generator import LRELU_SLOPE, _maybe_weight_norm


def period_frames(length: int, period: int) -> tuple[int, int]:
    """2-D shape (period, frames) a length-L signal folds into after padding."""
    return period, math.ceil(length / period)


def _fold_periodic(x: torch.Tensor, period: int) -> torch.Tensor:
    """(B, 1, L) -> (B, 1, ceil(L/p), p) with reflect padding to a multiple."""
    b, c, length = x.shape
    remainder = length % period
    if remainder:
        x = F.pad(x, (0, period - remainder), mode="reflect")
        length = x.shape[-1]
    return x.view(b, c, length // period, period)


class PeriodDiscriminator(torch.nn.Module):
    """Judges the signal folded into period-spaced 2-D frames."""

    def __init__(self, period: int, channels: tuple = (32, 128, 512, 1024),
                 use_weight_norm: bool = True):
        super().__init__()
        self.period = period
        convs = []
        in_ch = 1
        for out_ch in channels:
            convs.append(_maybe_weight_norm(
                torch.nn.Conv2d(in_ch, out_ch, (5, 1), stride=(3, 1),
                                padding=(2, 0)), use_weight_norm))
            in_ch = out_ch
        convs.append(_maybe_weight_norm(
            torch.nn.Conv2d(in_ch, in_ch, (5, 1), padding=(2, 0)),
            use_weight_norm))
        self.convs = torch.nn.ModuleList(convs)
        self.output_conv = _maybe_weight_norm(
            torch.nn.Conv2d(in_ch, 1, (3, 1), padding=(1, 0)), use_weight_norm)

    def forward(self, x: torch.Tensor):
        """Returns (score map, list of intermediate feature maps)."""
        feats = []
        h = _fold_periodic(x, self.period)
        for conv in self.convs:
            h = F.leaky_relu(conv(h), LRELU_SLOPE)
            feats.append(h)
        score = self.output_conv(h)
        feats.append(score)
        return score.flatten(1), feats


def _scale_pool(x: torch.Tensor, scale: int) -> torch.Tensor:
    """Non-overlapping average pooling to length ceil(L/scale)."""
    if scale == 1:
        return x
    remainder = x.shape[-1] % scale
    if remainder:
        x = F.pad(x, (0, scale - remainder), mode="replicate")
    return F.avg_pool1d(x, kernel_size=scale, stride=scale)


class ScaleDiscriminator(torch.nn.Module):
    """Judges an average-pooled view of the raw waveform."""

    def __init__(self, scale: int, channels: tuple, strides: tuple,
                 groups: tuple, use_weight_norm: bool = True):
        super().__init__()
        self.scale = scale
        kernels = (15,) + (41,) * (len(channels) - 2) + (5,)
        convs = []
        in_ch = 1
        for out_ch, k, s, g in zip(channels, kernels, strides, groups):
            g = math.gcd(g, math.gcd(in_ch, out_ch))
            convs.append(_maybe_weight_norm(
                torch.nn.Conv1d(in_ch, out_ch, k, stride=s, groups=g,
                                padding=(k - 1) // 2), use_weight_norm))
            in_ch = out_ch
        self.convs = torch.nn.ModuleList(convs)
        self.output_conv = _maybe_weight_norm(
            torch.nn.Conv1d(in_ch, 1, 3, padding=1), use_weight_norm)

    def forward(self, x: torch.Tensor):
        feats = []
        h = _scale_pool(x, self.scale)
        for conv in self.convs:
            h = F.leaky_relu(conv(h), LRELU_SLOPE)
            feats.append(h)
        score = self.output_conv(h)
        feats.append(score)
        return score.flatten(1), feats


class DiscriminatorBank(torch.nn.Module):
    """Five period discriminators + three scale discriminators."""

    def __init__(self, cfg: DiscriminatorConfig | None = None):
        super().__init__()
        cfg = cfg or DiscriminatorConfig()
        self.cfg = cfg
        self.discriminators = torch.nn.ModuleList(
            [PeriodDiscriminator(p, cfg.mpd_channels, cfg.use_weight_norm)
             for p in cfg.periods]
            + [ScaleDiscriminator(s, cfg.msd_channels, cfg.msd_strides,
                                  cfg.msd_groups, cfg.use_weight_norm)
               for s in cfg.scales]
        )

    def forward(self, wave: torch.Tensor):
        """(B, L) audio -> list of (score map, feature list) per discriminator."""
        x = wave[:, None, :]
        return [d(x) for d in self.discriminators]


def discriminate(wave: torch.Tensor, bank: DiscriminatorBank):
    """Score maps + intermediate features for real or generated audio."""
    return bank(wave)
