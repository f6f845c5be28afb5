"""Differentiable log-mel spectrogram used by the reconstruction loss."""
from __future__ import annotations

import numpy as np
import torch

from ..errors import DataError
from ..types import Waveform
from .config import MelConfig

LOG_CLAMP_EPS = 1e-5


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: MelConfig) -> np.ndarray:
    """Triangular mel filterbank, (num_mels, fft_size // 2 + 1), peak 1."""
    n_bins = cfg.fft_size // 2 + 1
    fft_freqs = np.arange(n_bins) * cfg.fs / cfg.fft_size
    mel_points = np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.num_mels + 2)
    hz_points = mel_to_hz(mel_points)
    fb = np.zeros((cfg.num_mels, n_bins))
    for m in range(cfg.num_mels):
        left, center, right = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        rising = (fft_freqs - left) / max(center - left, 1e-12)
        falling = (right - fft_freqs) / max(right - center, 1e-12)
        fb[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


_CACHE: dict = {}


def _window_and_fb(cfg: MelConfig, device, dtype):
    key = (cfg, device, dtype)
    if key not in _CACHE:
        window = torch.hann_window(cfg.effective_win_length, device=device, dtype=dtype)
        fb = torch.from_numpy(mel_filterbank(cfg)).to(device=device, dtype=dtype)
        _CACHE[key] = (window, fb)
    return _CACHE[key]


def mel_spectrogram_t(x: torch.Tensor, cfg: MelConfig) -> torch.Tensor:
    """Log-magnitude mel of a (B, L) batch -> (B, num_mels, frames).

    Frames are centered by reflect-padding (fft - hop) / 2 on both sides, so a
    length-L clip yields 1 + (L - hop) // hop frames.
    """
    if x.dim() == 1:
        x = x[None, :]
    if x.shape[-1] < cfg.fft_size:
        raise DataError(
            f"clip shorter than one FFT window ({x.shape[-1]} < {cfg.fft_size})")
    window, fb = _window_and_fb(cfg, x.device, x.dtype)
    pad = (cfg.fft_size - cfg.hop_size) // 2
    x = torch.nn.functional.pad(x[:, None, :], (pad, pad), mode="reflect")[:, 0, :]
    spec = torch.stft(
        x, cfg.fft_size, hop_length=cfg.hop_size,
        win_length=cfg.effective_win_length, window=window,
        center=False, return_complex=True,
    )
    magnitude = torch.abs(spec)
    mel = torch.matmul(fb, magnitude)
    return torch.log(torch.clamp(mel, min=LOG_CLAMP_EPS))


def mel_spectrogram(wave: Waveform, cfg: MelConfig | None = None) -> np.ndarray:
    """Log-mel of a waveform, (num_mels, frames)."""
    cfg = cfg or MelConfig()
    if wave.sample_rate != cfg.fs:
        raise DataError(f"mel expects {cfg.fs} Hz, got {wave.sample_rate}")
    x = torch.from_numpy(wave.samples).to(torch.float64)
    with torch.no_grad():
        out = mel_spectrogram_t(x, cfg)
    return out[0].numpy()


def mel_frame_count(n_samples: int, cfg: MelConfig | None = None) -> int:
    cfg = cfg or MelConfig()
    padded = n_samples + 2 * ((cfg.fft_size - cfg.hop_size) // 2)
    return 1 + (padded - cfg.fft_size) // cfg.hop_size
