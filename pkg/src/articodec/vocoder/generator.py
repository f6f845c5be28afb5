"""FiLM-conditioned GAN generator: articulatory features + speaker embedding
-> 16 kHz waveform."""
from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import DataError
from ..types import ArticulatoryFeatures, SpeakerEmbedding, Waveform
from .config import GeneratorConfig

LRELU_SLOPE = 0.1


def _maybe_weight_norm(module, enabled):
    if enabled:
        return torch.nn.utils.parametrizations.weight_norm(module)
    return module


class FilmLayer(torch.nn.Module):
    """Per-channel affine modulation predicted from the conditioning vector.

    out[c, t] = scale[c] * x[c, t] + center[c]. The scale head predicts a
    residual around 1 so a fresh layer starts near the identity and does not
    crush activations at init.
    """

    def __init__(self, cond_dim: int, channels: int, hidden: int,
                 dropout: float = 0.2):
        super().__init__()
        self.channels = channels
        self.net = torch.nn.Sequential(
            torch.nn.Linear(cond_dim, hidden),
            torch.nn.ReLU(),
            torch.nn.Dropout(dropout),
            torch.nn.Linear(hidden, 2 * channels),
        )

    def modulation(self, cond: torch.Tensor):
        """Predicted (scale, center), each (B, channels)."""
        out = self.net(cond)
        raw_scale, center = out.chunk(2, dim=-1)
        return 1.0 + raw_scale, center

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.channels:
            raise DataError(
                f"FiLM expects {self.channels} channels, got {x.shape[1]}")
        scale, center = self.modulation(cond)
        return scale[:, :, None] * x + center[:, :, None]


class ResidualUnit(torch.nn.Module):
    """One dilated + one plain conv, FiLM after each, residual add."""

    def __init__(self, channels: int, kernel: int, dilation: int,
                 cond_dim: int, film_hidden: int, use_weight_norm: bool):
        super().__init__()
        pad1 = (kernel - 1) * dilation // 2
        pad2 = (kernel - 1) // 2
        self.conv1 = _maybe_weight_norm(
            torch.nn.Conv1d(channels, channels, kernel, dilation=dilation,
                            padding=pad1), use_weight_norm)
        self.conv2 = _maybe_weight_norm(
            torch.nn.Conv1d(channels, channels, kernel, padding=pad2),
            use_weight_norm)
        self.film1 = FilmLayer(cond_dim, channels, film_hidden)
        self.film2 = FilmLayer(cond_dim, channels, film_hidden)

    def forward(self, x, cond):
        h = F.leaky_relu(x, LRELU_SLOPE)
        h = self.film1(self.conv1(h), cond)
        h = F.leaky_relu(h, LRELU_SLOPE)
        h = self.film2(self.conv2(h), cond)
        return x + h


class MrfBlock(torch.nn.Module):
    """Residual stack for a single kernel size, one unit per dilation."""

    def __init__(self, channels: int, kernel: int, dilations: tuple,
                 cond_dim: int, film_hidden: int, use_weight_norm: bool):
        super().__init__()
        self.units = torch.nn.ModuleList([
            ResidualUnit(channels, kernel, d, cond_dim, film_hidden, use_weight_norm)
            for d in dilations
        ])

    def forward(self, x, cond):
        for unit in self.units:
            x = unit(x, cond)
        return x


class Mrf(torch.nn.Module):
    """Multi-receptive-field fusion: mean over parallel kernel-size stacks."""

    def __init__(self, channels: int, kernels: tuple, dilations: tuple,
                 cond_dim: int, film_hidden: int, use_weight_norm: bool):
        super().__init__()
        self.blocks = torch.nn.ModuleList([
            MrfBlock(channels, k, dilations, cond_dim, film_hidden, use_weight_norm)
            for k in kernels
        ])

    def forward(self, x, cond):
        out = None
        for block in self.blocks:
            y = block(x, cond)
            out = y if out is None else out + y
        return out / len(self.blocks)


class Generator(torch.nn.Module):
    """Transposed-conv stack with MRF modules and FiLM speaker conditioning.

    Input features at 50 Hz are first repeated x pre_upsample_repeat, then the
    stride product carries them to 16 kHz, so output length is exactly
    samples_per_frame * T.
    """

    def __init__(self, cfg: GeneratorConfig | None = None):
        super().__init__()
        cfg = cfg or GeneratorConfig()
        self.cfg = cfg
        ch = cfg.base_channels
        self.input_conv = _maybe_weight_norm(
            torch.nn.Conv1d(cfg.input_channels, ch, 7, padding=3),
            cfg.use_weight_norm)
        self.upsamples = torch.nn.ModuleList()
        self.mrfs = torch.nn.ModuleList()
        for i, (k, s) in enumerate(zip(cfg.upsample_kernels, cfg.upsample_strides)):
            # halved per level, floored at 1 so very small test configs work
            in_ch = max(ch // (2 ** i), 1)
            out_ch = max(ch // (2 ** (i + 1)), 1)
            self.upsamples.append(_maybe_weight_norm(
                torch.nn.ConvTranspose1d(
                    in_ch, out_ch, k, stride=s,
                    padding=s // 2 + s % 2, output_padding=s % 2),
                cfg.use_weight_norm))
            self.mrfs.append(Mrf(out_ch, cfg.mrf_kernels, cfg.mrf_dilations,
                                 cfg.speaker_dim, cfg.film_hidden,
                                 cfg.use_weight_norm))
        final_ch = max(ch // (2 ** len(cfg.upsample_kernels)), 1)
        self.output_conv = _maybe_weight_norm(
            torch.nn.Conv1d(final_ch, 1, 7, padding=3), cfg.use_weight_norm)

    def forward(self, feats: torch.Tensor, spk: torch.Tensor) -> torch.Tensor:
        """(B, 14, T) features + (B, 64) embedding -> (B, samples_per_frame*T)."""
        if feats.shape[1] != self.cfg.input_channels:
            raise DataError(
                f"expected {self.cfg.input_channels} input channels, "
                f"got {feats.shape[1]}")
        x = torch.repeat_interleave(feats, self.cfg.pre_upsample_repeat, dim=-1)
        x = self.input_conv(x)
        for upsample, mrf in zip(self.upsamples, self.mrfs):
            x = F.leaky_relu(x, LRELU_SLOPE)
            x = upsample(x)
            x = mrf(x, spk)
        x = F.leaky_relu(x, LRELU_SLOPE)
        x = torch.tanh(self.output_conv(x))
        return x[:, 0, :]


def film_modulate(activations: np.ndarray, spk: SpeakerEmbedding,
                  film: FilmLayer) -> np.ndarray:
    """Apply one FiLM layer to a (C, T) activation map outside the graph."""
    x = torch.from_numpy(np.asarray(activations, dtype=np.float32))[None]
    cond = torch.from_numpy(spk.vector)[None]
    film.eval()
    with torch.no_grad():
        out = film(x, cond)
    return out[0].numpy()


def prepare_input(features: ArticulatoryFeatures, cfg: GeneratorConfig) -> np.ndarray:
    """Scale the pitch row and return the (14, T) conditioning matrix."""
    matrix = features.to_matrix().astype(np.float32)
    matrix[12] = matrix[12] / cfg.pitch_divisor
    return matrix


def synthesize(features: ArticulatoryFeatures, spk: SpeakerEmbedding,
               gen: Generator) -> Waveform:
    """Deterministic (eval-mode) synthesis of a feature clip."""
    matrix = prepare_input(features, gen.cfg)
    if matrix.shape[0] != gen.cfg.input_channels:
        raise DataError(
            f"expected {gen.cfg.input_channels} channels, got {matrix.shape[0]}")
    was_training = gen.training
    gen.eval()
    try:
        with torch.no_grad():
            x = torch.from_numpy(matrix)[None]
            cond = torch.from_numpy(spk.vector)[None]
            out = gen(x, cond)
    finally:
        gen.train(was_training)
    return Waveform(out[0].numpy().astype(np.float64), 16000)
