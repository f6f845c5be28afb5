"""Articulatory manipulation: interpolation, channel time-shift, pitch
rescaling and zero-shot voice conversion."""
from __future__ import annotations

import warnings

import numpy as np

from .errors import DataError
from .types import (
    F0_MAX,
    F0_MIN,
    FRAME_RATE,
    ArticulatoryFeatures,
    SourceFeatures,
    SpeakerEmbedding,
    Waveform,
    channel_index,
    expand_channel_mask,
)

FRAME_MS = 1000 // FRAME_RATE  # 20 ms granularity


def interpolate(a: ArticulatoryFeatures, b: ArticulatoryFeatures, alpha: float,
                channels) -> ArticulatoryFeatures:
    """Mix masked channels as alpha*a + (1-alpha)*b; copy the rest from a.

    alpha may lie outside [0, 1] (extrapolation is a legitimate probe).
    Mixed pitch values below the voiced floor snap to the unvoiced marker 0.
    """
    if a.n_frames != b.n_frames:
        raise DataError("traces must be time-aligned")
    mask = expand_channel_mask(channels)
    mat_a = a.to_matrix().astype(np.float64)
    mat_b = b.to_matrix().astype(np.float64)
    out = mat_a.copy()
    out[mask] = alpha * mat_a[mask] + (1.0 - alpha) * mat_b[mask]
    f0_row = channel_index("f0")
    if mask[f0_row]:
        f0 = out[f0_row]
        out[f0_row] = np.where(f0 < F0_MIN, 0.0, np.minimum(f0, F0_MAX))
    return ArticulatoryFeatures.from_matrix(
        out.astype(np.float32), a.source.periodicity, rate=a.rate)


def shift_channel(f: ArticulatoryFeatures, channel: str,
                  shift_ms: float) -> ArticulatoryFeatures:
    """Time-shift one channel by a whole number of 20 ms frames.

    Negative shifts advance the channel (frame t takes the old value at
    t + k); vacated frames repeat the boundary value.
    """
    if abs(shift_ms / FRAME_MS - round(shift_ms / FRAME_MS)) > 1e-9:
        raise DataError(
            f"shift must be a multiple of {FRAME_MS} ms, got {shift_ms}")
    k = int(round(shift_ms / FRAME_MS))
    row = channel_index(channel)
    matrix = f.to_matrix()
    series = matrix[row]
    t = len(series)
    if k == 0 or t == 0:
        shifted = series.copy()
    elif abs(k) >= t:
        # entire channel pushed past the clip: hold the boundary value
        shifted = np.full_like(series, series[0] if k > 0 else series[-1])
    elif k < 0:
        shifted = np.concatenate([series[-k:], np.full(-k, series[-1])])
    else:
        shifted = np.concatenate([np.full(k, series[0]), series[:-k]])
    matrix[row] = shifted
    return ArticulatoryFeatures.from_matrix(
        matrix, f.source.periodicity, rate=f.rate)


def rescale_pitch(src: SourceFeatures, target_mean: float,
                  target_std: float) -> SourceFeatures:
    """Shift and rescale voiced pitch to a target center and spread.

    Statistics are computed over voiced frames only; unvoiced frames stay 0,
    loudness and periodicity are untouched, and voiced output is clamped to
    the tracker range.
    """
    voiced = src.voiced_mask
    n_voiced = int(voiced.sum())
    if n_voiced == 0:
        raise DataError("no voiced frames to rescale")
    if n_voiced < 2:
        raise DataError("need at least 2 voiced frames to estimate pitch spread")
    f0 = src.f0.astype(np.float64)
    mean = f0[voiced].mean()
    std = f0[voiced].std()
    out = f0.copy()
    if std == 0.0:
        warnings.warn("zero voiced pitch spread; mapping all voiced frames to "
                      "the target mean")
        out[voiced] = target_mean
    else:
        out[voiced] = (f0[voiced] - mean) / std * target_std + target_mean
    out[voiced] = np.clip(out[voiced], F0_MIN, F0_MAX)
    return SourceFeatures(out.astype(np.float32), src.periodicity,
                          src.loudness, rate=src.rate)


def convert_voice(source_wave: Waveform, target_template: SpeakerEmbedding,
                  target_pitch_stats, stack, p_rescale: bool = True) -> Waveform:
    """Re-synthesize a clip with a different speaker embedding.

    Articulation passes through untouched; optionally the pitch trace is
    rescaled to the target speaker's voiced statistics before synthesis.
    """
    if source_wave.duration < 2.0:
        warnings.warn(
            f"clip of {source_wave.duration:.2f} s is shorter than the 2 s "
            "recommended for voice conversion")
    features, _ = stack.encode(source_wave)
    if p_rescale:
        mean, std = target_pitch_stats
        source = rescale_pitch(features.source, float(mean), float(std))
        features = ArticulatoryFeatures(features.ema, source)
    return stack.synthesize(features, target_template)
