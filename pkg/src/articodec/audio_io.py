"""WAV loading/saving at the ingest boundary (PCM16 on disk, float inside)."""
from __future__ import annotations

import io

import numpy as np
import scipy.io.wavfile

from .errors import DataError
from .types import INGEST_RATES, Waveform

PCM16_SCALE = 32768.0


def wav_bytes_to_waveform(data: bytes, enforce_ingest_rates: bool = True) -> Waveform:
    """Decode WAV bytes to a mono float waveform in [-1, 1]."""
    try:
        rate, samples = scipy.io.wavfile.read(io.BytesIO(data))
    except Exception as exc:
        raise DataError(f"undecodable audio: {exc}") from exc
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if samples.dtype == np.int16:
        samples = samples.astype(np.float64) / PCM16_SCALE
    elif samples.dtype == np.int32:
        samples = samples.astype(np.float64) / 2147483648.0
    elif samples.dtype == np.uint8:
        samples = (samples.astype(np.float64) - 128.0) / 128.0
    else:
        samples = samples.astype(np.float64)
    if enforce_ingest_rates and rate not in INGEST_RATES:
        raise DataError(
            f"sample rate {rate} not supported on ingest; expected one of "
            f"{sorted(INGEST_RATES)}")
    return Waveform(samples, int(rate))


def waveform_to_wav_bytes(wave: Waveform) -> bytes:
    """Encode as 16-bit PCM WAV."""
    clipped = np.clip(wave.samples, -1.0, 32767.0 / PCM16_SCALE)
    pcm = np.round(clipped * PCM16_SCALE).astype(np.int16)
    buf = io.BytesIO()
    scipy.io.wavfile.write(buf, wave.sample_rate, pcm)
    return buf.getvalue()


def load_wav(path, enforce_ingest_rates: bool = True) -> Waveform:
    with open(path, "rb") as fh:
        return wav_bytes_to_waveform(fh.read(), enforce_ingest_rates)


def save_wav(wave: Waveform, path) -> None:
    with open(path, "wb") as fh:
        fh.write(waveform_to_wav_bytes(wave))
