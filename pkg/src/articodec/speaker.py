"""Speaker identity encoding: frozen frame features, periodicity-weighted
pooling and a small trainable projection."""
from __future__ import annotations

import warnings
from typing import Protocol, Sequence

import numpy as np
import torch

from .errors import DataError, MissingAssetError
from .types import AUDIO_RATE, FRAME_RATE, SPEAKER_DIM, SpeakerEmbedding, Waveform

FRONTEND_DIM = 1024


class FrameFrontend(Protocol):
    """Frozen acoustic front-end: 16 kHz wave -> (T, dim) frame features."""

    frontend_id: str
    dim: int
    frame_rate: int

    def extract(self, wave: Waveform) -> np.ndarray:
        ...


class MockFrameFrontend:
    """Deterministic front-end stand-in, same contract as the frozen CNN stack."""

    frame_rate = FRAME_RATE

    def __init__(self, frontend_id: str = "mock-frontend", dim: int = FRONTEND_DIM):
        self.frontend_id = frontend_id
        self.dim = dim
        seed = abs(hash(("frontend", frontend_id))) % (2 ** 32)
        rng = np.random.default_rng(seed)
        self._projection = rng.standard_normal((16, dim)) / 4.0

    def extract(self, wave: Waveform) -> np.ndarray:
        if wave.sample_rate != AUDIO_RATE:
            raise DataError(f"front-end expects {AUDIO_RATE} Hz, got {wave.sample_rate}")
        from .analysis import MockSpeechEncoder

        stats = MockSpeechEncoder._frame_stats(wave.samples)
        return np.tanh(stats @ self._projection)


class WavlmFrameFrontend:
    """Pre-transformer features of a locally installed WavLM model
    (CNN extractor + positional conv + projection)."""

    frame_rate = FRAME_RATE
    dim = FRONTEND_DIM

    def __init__(self, model_path: str = "microsoft/wavlm-large"):
        self.frontend_id = f"wavlm-frontend:{model_path}"
        self.model_path = model_path
        self._model = None

    def _load(self):
        if self._model is None:
            from .analysis import WavlmEncoder

            self._model = WavlmEncoder(self.model_path)._load()
        return self._model

    def extract(self, wave: Waveform) -> np.ndarray:
        model = self._load()
        x = torch.from_numpy(wave.samples).float()[None, :]
        with torch.no_grad():
            feats = model.feature_extractor(x).transpose(1, 2)
            feats, _ = model.feature_projection(feats)
            feats = feats + model.encoder.pos_conv_embed(feats)
        return feats[0].numpy().astype(np.float64)


def weighted_pool(features: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted average of frame features: sum(w_t f_t) / sum(w_t).

    All-zero weights fall back to a uniform average with a warning (silence
    should not kill batch training).
    """
    features = np.asarray(features, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if features.ndim != 2 or weights.ndim != 1:
        raise DataError("expected (T, D) features and (T,) weights")
    if features.shape[0] != len(weights):
        raise DataError(
            f"frame counts differ: {features.shape[0]} vs {len(weights)}")
    if len(weights) == 0:
        raise DataError("cannot pool zero frames")
    if np.any(weights < 0):
        raise DataError("pooling weights must be nonnegative")
    total = weights.sum()
    if total == 0.0:
        warnings.warn("all pooling weights are zero; falling back to uniform")
        weights = np.ones_like(weights)
        total = weights.sum()
    return (weights[:, None] * features).sum(axis=0) / total


class SpeakerFfn(torch.nn.Module):
    """Trainable projection from pooled frame features to the 64-d embedding.

    The only trainable part of the encoding stack; everything upstream stays
    frozen.
    """

    def __init__(self, in_dim: int = FRONTEND_DIM, hidden_dim: int = FRONTEND_DIM,
                 out_dim: int = SPEAKER_DIM, dropout: float = 0.2):
        super().__init__()
        self.layer1 = torch.nn.Linear(in_dim, hidden_dim)
        self.activation = torch.nn.GELU()
        self.dropout = torch.nn.Dropout(dropout)
        self.layer2 = torch.nn.Linear(hidden_dim, out_dim)

    def forward(self, pooled: torch.Tensor) -> torch.Tensor:
        h = self.layer1(pooled)
        h = self.activation(h)
        h = self.dropout(h)
        return self.layer2(h)


def encode_speaker(wave: Waveform, periodicity: np.ndarray, ffn: SpeakerFfn,
                   frontend: FrameFrontend, mode: str = "eval") -> SpeakerEmbedding:
    """Pool frozen frame features by periodicity and project to 64 dims.

    Frame features and the 50 Hz periodicity stream may disagree by an edge
    frame; both are truncated to the common minimum.
    """
    if mode not in ("train", "eval"):
        raise DataError(f"mode must be 'train' or 'eval', got {mode!r}")
    features = frontend.extract(wave)
    periodicity = np.asarray(periodicity, dtype=np.float64)
    t = min(features.shape[0], len(periodicity))
    if t == 0:
        raise DataError("no frames to pool")
    pooled = weighted_pool(features[:t], periodicity[:t])
    was_training = ffn.training
    ffn.train(mode == "train")
    try:
        with torch.no_grad():
            vec = ffn(torch.from_numpy(pooled).to(next(ffn.parameters()).dtype))
    finally:
        ffn.train(was_training)
    return SpeakerEmbedding(vec.numpy())


def make_template(clips: Sequence[Waveform], ffn: SpeakerFfn,
                  frontend: FrameFrontend, tracker=None,
                  k: int = 10) -> SpeakerEmbedding:
    """Template embedding from the first min(k, n) clips, concatenated in order."""
    from .signal import zscore
    from .source import track_pitch

    if not clips:
        raise DataError("need at least one clip for a speaker template")
    selected = list(clips)[: max(1, k)]
    for clip in selected:
        if clip.sample_rate != AUDIO_RATE:
            raise DataError("template clips must be resampled to 16 kHz first")
    concat = Waveform(np.concatenate([c.samples for c in selected]), AUDIO_RATE)
    normalized = Waveform(zscore(concat.samples), AUDIO_RATE)
    _, periodicity = track_pitch(normalized, tracker=tracker, mode="inference")
    return encode_speaker(normalized, periodicity, ffn, frontend, mode="eval")
