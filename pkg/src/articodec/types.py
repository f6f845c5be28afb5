"""Domain value types shared across the codec.

All feature-domain arrays are stored as float32 so that on-disk round trips
are bit-exact; audio samples stay float64 for filter headroom.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

AUDIO_RATE = 16000
FRAME_RATE = 50
SAMPLES_PER_FRAME = AUDIO_RATE // FRAME_RATE  # 320
INGEST_RATES = (16000, 22050, 24000, 44100, 48000)

EMA_CHANNELS = (
    "UL_x", "UL_y",
    "LL_x", "LL_y",
    "LI_x", "LI_y",
    "TT_x", "TT_y",
    "TB_x", "TB_y",
    "TD_x", "TD_y",
)
ARTICULATORS = ("UL", "LL", "LI", "TT", "TB", "TD")
FEATURE_CHANNELS = EMA_CHANNELS + ("f0", "loudness")

F0_MIN = 50.0
F0_MAX = 550.0
SPEAKER_DIM = 64


def _check_finite(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains NaN or Inf")


@dataclass(frozen=True)
class Waveform:
    """Mono audio samples with their sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DataError(f"waveform must be 1-D, got shape {samples.shape}")
        _check_finite(samples, "waveform samples")
        if int(self.sample_rate) <= 0:
            raise DataError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class EmaTrace:
    """12 midsagittal articulator channels (x, y per articulator) over time."""

    values: np.ndarray  # (12, T)
    rate: int = FRAME_RATE
    channel_names: tuple = EMA_CHANNELS

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        if values.ndim != 2 or values.shape[0] != len(EMA_CHANNELS):
            raise DataError(
                f"EMA trace must have {len(EMA_CHANNELS)} channels, got shape {values.shape}"
            )
        _check_finite(values, "EMA values")
        if tuple(self.channel_names) != EMA_CHANNELS:
            raise DataError("unexpected EMA channel order")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channel_names", EMA_CHANNELS)

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SourceFeatures:
    """Pitch, periodicity and loudness series at the feature frame rate.

    Analysis output obeys f0 in {0} | [F0_MIN, F0_MAX] and loudness >= 0;
    manipulation ops may legitimately leave that domain, so only structural
    checks run here.
    """

    f0: np.ndarray
    periodicity: np.ndarray
    loudness: np.ndarray
    rate: int = FRAME_RATE

    def __post_init__(self):
        f0 = np.asarray(self.f0, dtype=np.float32)
        per = np.asarray(self.periodicity, dtype=np.float32)
        loud = np.asarray(self.loudness, dtype=np.float32)
        for name, arr in (("f0", f0), ("periodicity", per), ("loudness", loud)):
            if arr.ndim != 1:
                raise DataError(f"{name} must be 1-D")
            _check_finite(arr, name)
        if not (len(f0) == len(per) == len(loud)):
            raise DataError(
                f"source series lengths differ: f0={len(f0)}, "
                f"periodicity={len(per)}, loudness={len(loud)}"
            )
        if len(per) and (per.min() < 0.0 or per.max() > 1.0):
            raise DataError("periodicity must lie in [0, 1]")
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "periodicity", per)
        object.__setattr__(self, "loudness", loud)

    @property
    def n_frames(self) -> int:
        return len(self.f0)

    @property
    def voiced_mask(self) -> np.ndarray:
        return self.f0 > 0


@dataclass(frozen=True)
class ArticulatoryFeatures:
    """The codec's code: 12 EMA channels + pitch + loudness at 50 Hz."""

    ema: EmaTrace
    source: SourceFeatures

    def __post_init__(self):
        if self.ema.n_frames != self.source.n_frames:
            raise DataError(
                f"EMA and source frame counts differ "
                f"({self.ema.n_frames} vs {self.source.n_frames})"
            )
        if self.ema.rate != self.source.rate:
            raise DataError("EMA and source rates differ")

    @property
    def n_frames(self) -> int:
        return self.ema.n_frames

    @property
    def rate(self) -> int:
        return self.ema.rate

    def to_matrix(self) -> np.ndarray:
        """Stack all 14 channels as a (14, T) float32 matrix in canonical order."""
        return np.vstack(
            [self.ema.values, self.source.f0[None, :], self.source.loudness[None, :]]
        ).astype(np.float32)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, periodicity: np.ndarray,
                    rate: int = FRAME_RATE) -> "ArticulatoryFeatures":
        matrix = np.asarray(matrix, dtype=np.float32)
        if matrix.ndim != 2 or matrix.shape[0] != len(FEATURE_CHANNELS):
            raise DataError(
                f"expected {len(FEATURE_CHANNELS)} channels, got shape {matrix.shape}"
            )
        ema = EmaTrace(matrix[:12], rate=rate)
        source = SourceFeatures(matrix[12], periodicity, matrix[13], rate=rate)
        return cls(ema, source)


@dataclass(frozen=True)
class SpeakerEmbedding:
    """64-dimensional voice-texture vector, disentangled from articulation."""

    vector: np.ndarray = field(repr=False)

    def __post_init__(self):
        vector = np.asarray(self.vector, dtype=np.float32).ravel()
        if vector.shape != (SPEAKER_DIM,):
            raise DataError(
                f"speaker embedding must have {SPEAKER_DIM} dims, got {vector.shape}"
            )
        _check_finite(vector, "speaker embedding")
        object.__setattr__(self, "vector", vector)


def channel_index(name: str) -> int:
    """Index of a named channel within the 14-channel feature matrix."""
    try:
        return FEATURE_CHANNELS.index(name)
    except ValueError:
        raise DataError(
            f"unknown channel {name!r}; valid: {', '.join(FEATURE_CHANNELS)}"
        ) from None


def expand_channel_mask(names) -> np.ndarray:
    """Boolean mask over the 14 feature channels.

    Accepts full channel names (``TT_x``, ``f0``, ``loudness``) and bare
    articulator names (``TT`` selects both axes).
    """
    mask = np.zeros(len(FEATURE_CHANNELS), dtype=bool)
    for name in names:
        if name in ARTICULATORS:
            mask[channel_index(f"{name}_x")] = True
            mask[channel_index(f"{name}_y")] = True
        else:
            mask[channel_index(name)] = True
    return mask
