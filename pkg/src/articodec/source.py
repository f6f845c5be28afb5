"""Source-feature extraction: pitch/periodicity tracking and loudness."""
from __future__ import annotations

from typing import Protocol

import numpy as np

from .errors import DataError, MissingAssetError
from .signal import rate_convert
from .types import AUDIO_RATE, F0_MAX, F0_MIN, SAMPLES_PER_FRAME, Waveform

TRACKER_HOP = 80            # 200 Hz tracker frames at 16 kHz
TRACKER_RATE = AUDIO_RATE // TRACKER_HOP
PERIODICITY_THRESHOLD = 0.4
LOUDNESS_KERNEL = SAMPLES_PER_FRAME  # 320-sample mean-|x| bins


class PitchTracker(Protocol):
    """Tracker contract: z-scored 16 kHz wave -> (f0, periodicity) at 200 Hz."""

    hop: int
    fmin: float
    fmax: float

    def track(self, samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ...


class AutocorrelationTracker:
    """Deterministic fallback tracker: normalized autocorrelation + Viterbi.

    Emits a raw pitch estimate for every frame (voicing is decided downstream
    by periodicity thresholding), with frames every ``hop`` samples and
    candidates restricted to [fmin, fmax].
    """

    def __init__(self, hop: int = TRACKER_HOP, fmin: float = F0_MIN,
                 fmax: float = F0_MAX, window: int = 1024,
                 transition_weight: float = 1.0, short_lag_bias: float = 0.01):
        self.hop = hop
        self.fmin = fmin
        self.fmax = fmax
        self.window = window
        self.transition_weight = transition_weight
        self.short_lag_bias = short_lag_bias
        lag_min = int(np.ceil(AUDIO_RATE / fmax))
        lag_max = int(np.floor(AUDIO_RATE / fmin))
        self.lags = np.arange(lag_min, lag_max + 1)
        self.freqs = AUDIO_RATE / self.lags
        log_f = np.log2(self.freqs)
        self._transition = transition_weight * np.abs(log_f[:, None] - log_f[None, :])
        self._bias = short_lag_bias * (self.lags - lag_min) / (lag_max - lag_min)

    def _frames(self, x: np.ndarray) -> np.ndarray:
        n = len(x) // self.hop
        half = self.window // 2
        # reflect pad of half is always valid since len(x) >= window
        padded = np.pad(x, (half, half), mode="reflect")
        centers = np.arange(n) * self.hop + self.hop // 2
        idx = centers[:, None] + np.arange(self.window)[None, :]
        return padded[idx]

    def _normalized_autocorr(self, frames: np.ndarray) -> np.ndarray:
        nfft = 2 * self.window
        spec = np.fft.rfft(frames, n=nfft, axis=1)
        acorr = np.fft.irfft(np.abs(spec) ** 2, n=nfft, axis=1)[:, : self.window]
        sq = frames ** 2
        csum = np.concatenate(
            [np.zeros((len(frames), 1)), np.cumsum(sq, axis=1)], axis=1)
        total = csum[:, -1]
        # energy of the leading window-minus-lag samples and the trailing ones
        e_head = csum[:, self.window - self.lags]
        e_tail = total[:, None] - csum[:, self.lags]
        denom = np.sqrt(e_head * e_tail) + 1e-12
        nac = acorr[:, self.lags] / denom
        silent = total < 1e-10
        nac[silent] = 0.0
        return np.clip(nac, 0.0, 1.0)

    def _viterbi(self, nac: np.ndarray) -> np.ndarray:
        emission = nac - self._bias[None, :]
        n, s = emission.shape
        back = np.zeros((n, s), dtype=np.int32)
        dp = emission[0]
        for t in range(1, n):
            cand = dp[None, :] - self._transition
            back[t] = np.argmax(cand, axis=1)
            dp = emission[t] + cand[np.arange(s), back[t]]
        path = np.zeros(n, dtype=np.int32)
        path[-1] = int(np.argmax(dp))
        for t in range(n - 1, 0, -1):
            path[t - 1] = back[t, path[t]]
        return path

    def track(self, samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(samples, dtype=np.float64)
        if len(x) < self.window:
            raise DataError("clip too short for pitch tracking")
        frames = self._frames(x)
        nac = self._normalized_autocorr(frames)
        path = self._viterbi(nac)
        f0 = self.freqs[path]
        periodicity = nac[np.arange(len(path)), path]
        return f0, periodicity


class TorchcrepeTracker:
    """Adapter for the torchcrepe neural tracker, if installed."""

    hop = TRACKER_HOP
    fmin = F0_MIN
    fmax = F0_MAX

    def __init__(self, model: str = "full"):
        self.model = model

    def track(self, samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        try:
            import torch
            import torchcrepe
        except ImportError as exc:
            raise MissingAssetError(
                "torchcrepe is not installed; pip install torchcrepe or use "
                "the autocorrelation fallback tracker"
            ) from exc
        x = torch.from_numpy(np.asarray(samples, dtype=np.float32))[None, :]
        f0, periodicity = torchcrepe.predict(
            x, AUDIO_RATE, hop_length=self.hop, fmin=self.fmin, fmax=self.fmax,
            model=self.model, return_periodicity=True,
            decoder=torchcrepe.decode.viterbi, batch_size=512, device="cpu",
        )
        return f0[0].numpy().astype(np.float64), periodicity[0].numpy().astype(np.float64)


def track_pitch(wave: Waveform, tracker: PitchTracker | None = None,
                mode: str = "inference") -> tuple[np.ndarray, np.ndarray]:
    """Track pitch + periodicity at 50 Hz.

    The wave must already be at 16 kHz and z-scored within the utterance.
    The 200 Hz tracker output is block-mean downsampled by 4; in inference
    mode, frames with periodicity <= 0.4 get f0 = 0 (explicit unvoiced
    marker). Train mode keeps the raw estimate everywhere.
    """
    if mode not in ("train", "inference"):
        raise DataError(f"mode must be 'train' or 'inference', got {mode!r}")
    if wave.sample_rate != AUDIO_RATE:
        raise DataError(f"pitch tracking expects {AUDIO_RATE} Hz, got {wave.sample_rate}")
    if tracker is None:
        tracker = AutocorrelationTracker()
    f0_raw, per_raw = tracker.track(wave.samples)
    f0 = rate_convert(np.asarray(f0_raw, dtype=np.float64), TRACKER_RATE, 50)
    periodicity = rate_convert(np.asarray(per_raw, dtype=np.float64), TRACKER_RATE, 50)
    periodicity = np.clip(periodicity, 0.0, 1.0)
    if mode == "inference":
        f0 = np.where(periodicity > PERIODICITY_THRESHOLD, f0, 0.0)
    return f0, periodicity


def compute_loudness(wave: Waveform) -> np.ndarray:
    """Mean absolute amplitude per 20 ms bin (stride = kernel = 320 samples)."""
    if wave.sample_rate != AUDIO_RATE:
        raise DataError(f"loudness expects {AUDIO_RATE} Hz, got {wave.sample_rate}")
    if len(wave) < LOUDNESS_KERNEL:
        raise DataError(
            f"need at least {LOUDNESS_KERNEL} samples for loudness, got {len(wave)}"
        )
    n = len(wave) // LOUDNESS_KERNEL
    blocks = wave.samples[: n * LOUDNESS_KERNEL].reshape(n, LOUDNESS_KERNEL)
    return np.abs(blocks).mean(axis=1)
