"""Dataclass configs for the generator, discriminators, losses and training."""
from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field

from ..errors import DataError
from ..types import AUDIO_RATE, FRAME_RATE, SPEAKER_DIM


@dataclass(frozen=True)
class GeneratorConfig:
    upsample_kernels: tuple = (10, 8, 4, 4)
    upsample_strides: tuple = (5, 4, 2, 2)
    mrf_kernels: tuple = (3, 7, 11)
    mrf_dilations: tuple = (1, 3, 5)
    base_channels: int = 512
    input_channels: int = 14
    pre_upsample_repeat: int = 4
    film_hidden: int = 64
    speaker_dim: int = SPEAKER_DIM
    # pitch enters as f0 / pitch_divisor (set 1.0 for a raw-Hz ablation)
    pitch_divisor: float = 100.0
    use_weight_norm: bool = True

    def __post_init__(self):
        if len(self.upsample_kernels) != len(self.upsample_strides):
            raise DataError("upsample kernel/stride lists must pair up")
        for k, s in zip(self.upsample_kernels, self.upsample_strides):
            if k != 2 * s:
                raise DataError(
                    f"each upsample stride must be half its kernel (got k={k}, s={s})")
        total = math.prod(self.upsample_strides) * self.pre_upsample_repeat * FRAME_RATE
        if total != AUDIO_RATE:
            raise DataError(
                f"stride product * repeat * {FRAME_RATE} must equal {AUDIO_RATE}, "
                f"got {total}")

    @property
    def samples_per_frame(self) -> int:
        return math.prod(self.upsample_strides) * self.pre_upsample_repeat


@dataclass(frozen=True)
class DiscriminatorConfig:
    periods: tuple = (2, 3, 5, 7, 11)
    scales: tuple = (1, 2, 4)
    mpd_channels: tuple = (32, 128, 512, 1024)
    msd_channels: tuple = (128, 128, 256, 512, 1024, 1024, 1024)
    msd_strides: tuple = (1, 2, 2, 4, 4, 1, 1)
    msd_groups: tuple = (1, 4, 16, 16, 16, 16, 1)
    use_weight_norm: bool = True

    def __post_init__(self):
        if not (len(self.msd_channels) == len(self.msd_strides) == len(self.msd_groups)):
            raise DataError("MSD channel/stride/group lists must pair up")

    @classmethod
    def tiny(cls) -> "DiscriminatorConfig":
        return cls(
            mpd_channels=(4, 8, 16, 32),
            msd_channels=(8, 8, 16, 32, 32, 32, 32),
        )


@dataclass(frozen=True)
class MelConfig:
    fs: int = 16000
    fft_size: int = 1024
    hop_size: int = 160
    window: str = "hann"
    num_mels: int = 80
    fmin: float = 0.0
    fmax: float = 8000.0
    win_length: int | None = None  # None = fft_size

    def __post_init__(self):
        if self.fmax > self.fs / 2:
            raise DataError(f"fmax {self.fmax} above Nyquist {self.fs / 2}")
        if self.window != "hann":
            raise DataError("only the hann window is supported")

    @property
    def effective_win_length(self) -> int:
        return self.fft_size if self.win_length is None else self.win_length


@dataclass(frozen=True)
class LossWeights:
    gan: float = 1.0
    mel: float = 45.0
    feature_match: float = 2.0


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    betas: tuple = (0.5, 0.9)
    total_steps: int = 1_500_000
    lr_halve_every: int = 8_000
    lr_freeze_after: int = 320_000
    window_ms: int = 320
    batch_size: int = 64
    checkpoint_every: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if (self.window_ms * FRAME_RATE) % 1000 != 0:
            raise DataError(
                f"window_ms must be a whole number of {1000 // FRAME_RATE} ms frames")

    @property
    def window_frames(self) -> int:
        return self.window_ms * FRAME_RATE // 1000

    @property
    def window_samples(self) -> int:
        return self.window_ms * AUDIO_RATE // 1000


def config_hash(*configs) -> str:
    """Digest of the canonicalized key=value dump of one or more configs."""
    lines = []
    for cfg in configs:
        name = type(cfg).__name__
        for key, value in sorted(asdict(cfg).items()):
            lines.append(f"{name}.{key} = {value!r}")
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()
