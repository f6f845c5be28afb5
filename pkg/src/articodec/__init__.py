"""articodec: an articulatory speech codec.

Speech audio is encoded into 14 interpretable channels (12 vocal-tract
articulator traces + pitch + loudness) at 50 Hz plus a 64-d speaker
embedding, and decoded back to 16 kHz audio by a FiLM-conditioned GAN
vocoder. Includes manipulation primitives, evaluation metrics, a CLI and a
local HTTP service.
"""
from .types import (
    ArticulatoryFeatures,
    EmaTrace,
    SourceFeatures,
    SpeakerEmbedding,
    Waveform,
)

__version__ = "0.1.0"

__all__ = [
    "ArticulatoryFeatures",
    "EmaTrace",
    "SourceFeatures",
    "SpeakerEmbedding",
    "Waveform",
    "__version__",
]
