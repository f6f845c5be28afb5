"""Deterministic signal utilities: resampling, normalization, filtering."""
from __future__ import annotations

import math
import warnings

import numpy as np
import scipy.signal

from .errors import DataError
from .types import Waveform

LOWPASS_CUTOFF_HZ = 10.0
LOWPASS_ORDER = 5


def resample(wave: Waveform, target_rate: int) -> Waveform:
    """Band-limited polyphase resampling to ``target_rate``."""
    if target_rate <= 0:
        raise DataError(f"target rate must be positive, got {target_rate}")
    if len(wave) == 0:
        raise DataError("empty waveform")
    if wave.sample_rate == target_rate:
        return wave
    g = math.gcd(wave.sample_rate, int(target_rate))
    up, down = int(target_rate) // g, wave.sample_rate // g
    out = scipy.signal.resample_poly(wave.samples, up, down)
    return Waveform(out, int(target_rate))


def zscore(series: np.ndarray) -> np.ndarray:
    """Standardize to zero mean, unit population std.

    A constant input returns all zeros with a "constant-channel" warning so
    batch pipelines survive silent clips.
    """
    series = np.asarray(series)
    if series.ndim != 1:
        raise DataError("zscore expects a 1-D series")
    if len(series) < 2:
        raise DataError(f"zscore needs at least 2 samples, got {len(series)}")
    x = series.astype(np.float64)
    mean = x.mean()
    std = x.std()  # population std (ddof=0)
    # x.std() of an all-identical array can round to a tiny nonzero value
    if std == 0.0 or x.max() == x.min():
        warnings.warn("constant-channel input to zscore; returning zeros")
        return np.zeros_like(series, dtype=series.dtype)
    return (((x - mean) / std)).astype(series.dtype)


def _butter_lowpass(cutoff: float, rate: float):
    return scipy.signal.butter(LOWPASS_ORDER, cutoff / (rate / 2.0), btype="low")


def lowpass(series: np.ndarray, cutoff: float = LOWPASS_CUTOFF_HZ,
            rate: float = 50.0) -> np.ndarray:
    """Zero-phase low-pass filtering (forward-backward Butterworth).

    Works on 1-D series or (C, T) channel stacks along the last axis. Series
    shorter than the filter warm-up length are returned unchanged with a
    warning.
    """
    series = np.asarray(series)
    if cutoff >= rate / 2.0:
        raise DataError(f"cutoff {cutoff} must be below Nyquist ({rate / 2.0})")
    b, a = _butter_lowpass(cutoff, rate)
    padlen = 3 * max(len(a), len(b))
    if series.shape[-1] <= padlen:
        warnings.warn(
            f"series of length {series.shape[-1]} shorter than filter warm-up "
            f"({padlen + 1}); returning input unchanged"
        )
        return series.copy()
    out = scipy.signal.filtfilt(b, a, series.astype(np.float64), axis=-1)
    return out.astype(series.dtype)


def rate_convert(values: np.ndarray, rate_in: int, rate_out: int) -> np.ndarray:
    """Integer-ratio frame-rate conversion along the last axis.

    Downsampling averages each block of k frames; upsampling repeats each
    frame k times (nearest neighbor). Non-integer ratios are rejected.
    """
    values = np.asarray(values)
    if rate_in <= 0 or rate_out <= 0:
        raise DataError("rates must be positive")
    if rate_in == rate_out:
        return values.copy()
    if rate_in % rate_out == 0:
        k = rate_in // rate_out
        n = (values.shape[-1] // k) * k
        trimmed = values[..., :n]
        shape = trimmed.shape[:-1] + (n // k, k)
        return trimmed.reshape(shape).mean(axis=-1).astype(values.dtype)
    if rate_out % rate_in == 0:
        k = rate_out // rate_in
        return np.repeat(values, k, axis=-1)
    raise DataError(
        f"rates must be integer multiples of each other, got {rate_in} -> {rate_out}"
    )
