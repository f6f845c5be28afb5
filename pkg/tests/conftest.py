import numpy as np
import pytest

from articodec.analysis import LinearMap, MockSpeechEncoder
from articodec.signal import zscore
from articodec.source import AutocorrelationTracker
from articodec.speaker import MockFrameFrontend, SpeakerFfn
from articodec.stack import CodecStack
from articodec.types import SPEAKER_DIM, Waveform
from articodec.vocoder import Generator, GeneratorConfig

SR = 16000


def speechlike(duration_s: float = 1.5, f0: float = 160.0, seed: int = 0,
               sr: int = SR) -> Waveform:
    """Synthetic voiced clip: harmonic tone with vibrato, an amplitude
    envelope and a noisy unvoiced tail."""
    rng = np.random.default_rng(seed)
    n = int(duration_s * sr)
    t = np.arange(n) / sr
    vibrato = f0 * (1.0 + 0.03 * np.sin(2 * np.pi * 5.0 * t))
    phase = 2 * np.pi * np.cumsum(vibrato) / sr
    tone = 0.6 * np.sin(phase) + 0.25 * np.sin(2 * phase) + 0.1 * np.sin(3 * phase)
    envelope = 0.4 + 0.6 * np.sin(np.pi * t / duration_s) ** 2
    x = tone * envelope
    tail = slice(int(0.8 * n), n)
    x[tail] = 0.05 * rng.standard_normal(n - tail.start)
    return Waveform(0.5 * x, sr)


def build_tiny_stack(tmp_path, seed: int = 7) -> CodecStack:
    rng = np.random.default_rng(seed)
    encoder = MockSpeechEncoder(dim=24, n_layers=4)
    aai = LinearMap(rng.standard_normal((24, 12)) * 0.3,
                    rng.standard_normal(12) * 0.1, 2, encoder.encoder_id)
    frontend = MockFrameFrontend(dim=48)
    import torch
    torch.manual_seed(seed)
    ffn = SpeakerFfn(in_dim=48, hidden_dim=48)
    gen = Generator(GeneratorConfig(base_channels=16, film_hidden=8))
    stack = CodecStack(encoder=encoder, aai=aai,
                       tracker=AutocorrelationTracker(), frontend=frontend,
                       ffn=ffn, generator=gen, config_hash="tiny")
    # one save/load cycle so every component is float32-quantized and all
    # later save/load round trips are bit-stable
    stack.save(tmp_path)
    return CodecStack.load(tmp_path)


@pytest.fixture(scope="session")
def tiny_stack(tmp_path_factory):
    return build_tiny_stack(tmp_path_factory.mktemp("stack"))


@pytest.fixture()
def voiced_clip():
    return speechlike()


@pytest.fixture()
def normalized_clip():
    wave = speechlike()
    return Waveform(zscore(wave.samples), SR)
