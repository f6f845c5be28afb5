"""Codec assembly: one object owning the full analysis + synthesis pipeline."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .analysis import (
    LinearMap,
    MockSpeechEncoder,
    SpeechEncoder,
    WavlmEncoder,
    extract_ssl_features,
    predict_ema,
)
from .config import ConfigField, Schema, config_digest
from .errors import DataError, MissingAssetError
from .formats import read_features, write_features  # noqa: F401  (re-export)
from .signal import zscore
from .source import AutocorrelationTracker, TorchcrepeTracker, compute_loudness, track_pitch
from .speaker import (
    FrameFrontend,
    MockFrameFrontend,
    SpeakerFfn,
    WavlmFrameFrontend,
    encode_speaker,
    make_template,
    weighted_pool,
)
from .types import (
    AUDIO_RATE,
    ArticulatoryFeatures,
    EmaTrace,
    SourceFeatures,
    SpeakerEmbedding,
    Waveform,
)
from .vocoder import (
    Generator,
    GeneratorConfig,
    load_checkpoint,
    save_checkpoint,
    synthesize as vocoder_synthesize,
)
from . import signal as _signal

STACK_SCHEMA = Schema([
    ConfigField("encoder", "str", "mock", "speech encoder: mock | wavlm:<path>"),
    ConfigField("encoder_dim", "int", 32, "mock encoder feature dim"),
    ConfigField("encoder_layers", "int", 12, "mock encoder layer count"),
    ConfigField("aai_layer", "int", 3, "encoder layer feeding the linear head"),
    ConfigField("aai_map", "str", "aai.aaiw", "fitted linear head file"),
    ConfigField("tracker", "str", "autocorr", "pitch tracker: autocorr | torchcrepe"),
    ConfigField("frontend", "str", "mock", "speaker front-end: mock | wavlm:<path>"),
    ConfigField("frontend_dim", "int", 1024, "front-end feature dim"),
    ConfigField("checkpoint", "str", "vocoder.ckpt", "vocoder checkpoint file"),
    ConfigField("checkpoint_hash", "str", "", "expected checkpoint config hash"),
    ConfigField("templates", "str", "templates.json", "speaker template store"),
    ConfigField("gen_base_channels", "int", 512, ""),
    ConfigField("gen_film_hidden", "int", 64, ""),
    ConfigField("gen_pitch_divisor", "float", 100.0, ""),
    ConfigField("gen_use_weight_norm", "bool", True, ""),
    ConfigField("max_clip_seconds", "float", 60.0, ""),
])


def _make_encoder(name: str, dim: int, n_layers: int) -> SpeechEncoder:
    if name == "mock":
        return MockSpeechEncoder(dim=dim, n_layers=n_layers)
    if name.startswith("wavlm"):
        _, _, path = name.partition(":")
        return WavlmEncoder(path) if path else WavlmEncoder()
    raise DataError(f"unknown encoder {name!r}")


def _make_frontend(name: str, dim: int) -> FrameFrontend:
    if name == "mock":
        return MockFrameFrontend(dim=dim)
    if name.startswith("wavlm"):
        _, _, path = name.partition(":")
        return WavlmFrameFrontend(path) if path else WavlmFrameFrontend()
    raise DataError(f"unknown front-end {name!r}")


def _make_tracker(name: str):
    if name == "autocorr":
        return AutocorrelationTracker()
    if name == "torchcrepe":
        return TorchcrepeTracker()
    raise DataError(f"unknown tracker {name!r}")


@dataclass
class CodecStack:
    """Everything needed to encode and decode: frozen analyzers, the fitted
    linear head, the speaker FFN and the generator."""

    encoder: SpeechEncoder
    aai: LinearMap
    tracker: object
    frontend: FrameFrontend
    ffn: SpeakerFfn
    generator: Generator
    config_hash: str = ""
    max_clip_seconds: float = 60.0

    def encode(self, wave: Waveform, train_mode: bool = False
               ) -> tuple[ArticulatoryFeatures, SpeakerEmbedding]:
        """Full analysis: articulation + source features + speaker embedding."""
        wave = _signal.resample(wave, AUDIO_RATE)
        normalized = Waveform(zscore(wave.samples), AUDIO_RATE)
        stack = extract_ssl_features(normalized, self.encoder,
                                     [self.aai.source_layer])
        ema = predict_ema(self.aai, stack.layers[0])
        # analysis-side normalization so the code is utterance-standardized
        ema_values = np.stack([
            zscore(ch) if ch.std() > 0 else np.zeros_like(ch)
            for ch in ema.values
        ])
        mode = "train" if train_mode else "inference"
        f0, periodicity = track_pitch(normalized, tracker=self.tracker, mode=mode)
        loudness = compute_loudness(normalized)
        t = min(ema_values.shape[1], len(f0), len(loudness))
        if t == 0:
            raise DataError("clip too short to produce any feature frames")
        features = ArticulatoryFeatures(
            EmaTrace(ema_values[:, :t]),
            SourceFeatures(f0[:t], periodicity[:t], loudness[:t]),
        )
        spk = encode_speaker(normalized, periodicity[:t], self.ffn,
                             self.frontend, mode="eval")
        return features, spk

    def synthesize(self, features: ArticulatoryFeatures,
                   spk: SpeakerEmbedding) -> Waveform:
        return vocoder_synthesize(features, spk, self.generator)

    def make_template(self, clips, k: int = 10) -> SpeakerEmbedding:
        clips16 = [_signal.resample(c, AUDIO_RATE) for c in clips]
        return make_template(clips16, self.ffn, self.frontend,
                             tracker=self.tracker, k=k)

    def pitch_stats(self, clips, k: int = 10) -> tuple[float, float]:
        """Voiced-pitch mean/std over the template clips."""
        voiced = []
        for clip in list(clips)[: max(1, k)]:
            wave = _signal.resample(clip, AUDIO_RATE)
            normalized = Waveform(zscore(wave.samples), AUDIO_RATE)
            f0, _ = track_pitch(normalized, tracker=self.tracker, mode="inference")
            voiced.append(f0[f0 > 0])
        merged = np.concatenate(voiced) if voiced else np.array([])
        if merged.size < 2:
            raise DataError("not enough voiced frames for pitch statistics")
        return float(merged.mean()), float(merged.std())

    def pooled_frontend(self, wave: Waveform) -> np.ndarray:
        """Periodicity-weighted front-end average (the FFN training input)."""
        wave = _signal.resample(wave, AUDIO_RATE)
        normalized = Waveform(zscore(wave.samples), AUDIO_RATE)
        _, periodicity = track_pitch(normalized, tracker=self.tracker,
                                     mode="inference")
        features = self.frontend.extract(normalized)
        t = min(features.shape[0], len(periodicity))
        return weighted_pool(features[:t], periodicity[:t])

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        values = STACK_SCHEMA.defaults()
        encoder = self.encoder
        values.update({
            "encoder": getattr(encoder, "encoder_id", "mock").split(":")[0]
            if not isinstance(encoder, MockSpeechEncoder) else "mock",
            "encoder_dim": encoder.dim,
            "encoder_layers": encoder.n_layers,
            "aai_layer": self.aai.source_layer,
            "tracker": "torchcrepe" if isinstance(self.tracker, TorchcrepeTracker)
            else "autocorr",
            "frontend": "mock" if isinstance(self.frontend, MockFrameFrontend)
            else getattr(self.frontend, "frontend_id", "mock").split(":")[0],
            "frontend_dim": self.frontend.dim,
            "gen_base_channels": self.generator.cfg.base_channels,
            "gen_film_hidden": self.generator.cfg.film_hidden,
            "gen_pitch_divisor": self.generator.cfg.pitch_divisor,
            "gen_use_weight_norm": self.generator.cfg.use_weight_norm,
            "max_clip_seconds": self.max_clip_seconds,
            "checkpoint_hash": self.config_hash,
        })
        (directory / "stack.cfg").write_text(STACK_SCHEMA.dump(values))
        (directory / "aai.aaiw").write_bytes(self.aai.to_bytes())
        tensors = {}
        for prefix, module in (("gen", self.generator), ("ffn", self.ffn)):
            for name, value in module.state_dict().items():
                tensors[f"{prefix}/{name}"] = value.detach().cpu().numpy()
        from .vocoder import VocoderCheckpoint

        save_checkpoint(
            VocoderCheckpoint(step=0, config_hash=self.config_hash, lr=0.0,
                              tensors=tensors),
            directory / "vocoder.ckpt")

    @classmethod
    def load(cls, directory) -> "CodecStack":
        directory = Path(directory)
        cfg_path = directory / "stack.cfg"
        if not cfg_path.exists():
            raise MissingAssetError(
                f"no stack config at {cfg_path}; build or download a stack "
                "directory first")
        values = STACK_SCHEMA.load(cfg_path)
        encoder = _make_encoder(values["encoder"], values["encoder_dim"],
                                values["encoder_layers"])
        frontend = _make_frontend(values["frontend"], values["frontend_dim"])
        tracker = _make_tracker(values["tracker"])
        aai_path = directory / values["aai_map"]
        if not aai_path.exists():
            raise MissingAssetError(f"missing linear head file {aai_path}")
        aai = LinearMap.from_bytes(aai_path.read_bytes())
        ckpt_path = directory / values["checkpoint"]
        if not ckpt_path.exists():
            raise MissingAssetError(f"missing vocoder checkpoint {ckpt_path}")
        ckpt = load_checkpoint(ckpt_path)
        expected = values["checkpoint_hash"]
        if expected and ckpt.config_hash != expected:
            raise DataError(
                f"checkpoint hash {ckpt.config_hash[:12]}... does not match "
                f"stack config {expected[:12]}...")
        gen_cfg = GeneratorConfig(
            base_channels=values["gen_base_channels"],
            film_hidden=values["gen_film_hidden"],
            pitch_divisor=values["gen_pitch_divisor"],
            use_weight_norm=values["gen_use_weight_norm"],
        )
        generator = Generator(gen_cfg)
        generator.load_state_dict(
            {k: torch.from_numpy(v) for k, v in ckpt.select("gen").items()})
        generator.eval()
        ffn = SpeakerFfn(in_dim=values["frontend_dim"],
                         hidden_dim=values["frontend_dim"])
        ffn_state = ckpt.select("ffn")
        if ffn_state:
            ffn.load_state_dict(
                {k: torch.from_numpy(v) for k, v in ffn_state.items()})
        ffn.eval()
        return cls(encoder=encoder, aai=aai, tracker=tracker, frontend=frontend,
                   ffn=ffn, generator=generator, config_hash=ckpt.config_hash,
                   max_clip_seconds=values["max_clip_seconds"])

    def effective_config(self) -> str:
        values = STACK_SCHEMA.defaults()
        values.update({
            "encoder_dim": self.encoder.dim,
            "encoder_layers": self.encoder.n_layers,
            "aai_layer": self.aai.source_layer,
            "frontend_dim": self.frontend.dim,
            "gen_base_channels": self.generator.cfg.base_channels,
            "gen_film_hidden": self.generator.cfg.film_hidden,
            "gen_pitch_divisor": self.generator.cfg.pitch_divisor,
            "gen_use_weight_norm": self.generator.cfg.use_weight_norm,
            "max_clip_seconds": self.max_clip_seconds,
            "checkpoint_hash": self.config_hash,
        })
        return STACK_SCHEMA.dump(values)

    def config_digest(self) -> str:
        return config_digest(self.effective_config())
