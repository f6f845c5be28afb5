"""GAN vocoder: generator, discriminators, losses, training and checkpoints."""
from .checkpoint import VocoderCheckpoint, load_checkpoint, save_checkpoint
from .config import (
    DiscriminatorConfig,
    GeneratorConfig,
    LossWeights,
    MelConfig,
    TrainConfig,
    config_hash,
)
from .discriminator import DiscriminatorBank, discriminate, period_frames
from .generator import FilmLayer, Generator, film_modulate, prepare_input, synthesize
from .losses import (
    LossDiverged,
    discriminator_loss,
    feature_match_loss,
    generator_loss,
    mel_l1,
)
from .mel import mel_filterbank, mel_frame_count, mel_spectrogram, mel_spectrogram_t
from .train import TrainUtterance, VocoderTrainer, lr_factor, sample_window

__all__ = [
    "DiscriminatorBank",
    "DiscriminatorConfig",
    "FilmLayer",
    "Generator",
    "GeneratorConfig",
    "LossDiverged",
    "LossWeights",
    "MelConfig",
    "TrainConfig",
    "TrainUtterance",
    "VocoderCheckpoint",
    "VocoderTrainer",
    "config_hash",
    "discriminate",
    "discriminator_loss",
    "feature_match_loss",
    "film_modulate",
    "generator_loss",
    "load_checkpoint",
    "lr_factor",
    "mel_filterbank",
    "mel_frame_count",
    "mel_l1",
    "mel_spectrogram",
    "mel_spectrogram_t",
    "period_frames",
    "prepare_input",
    "sample_window",
    "save_checkpoint",
    "synthesize",
]
