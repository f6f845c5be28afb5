"""Vocoder training loop: windowed batches, alternating GAN updates,
stepped learning-rate decay and resumable checkpoints."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import torch

from ..errors import DataError
from ..speaker import SpeakerFfn
from ..types import ArticulatoryFeatures
from .checkpoint import VocoderCheckpoint, load_checkpoint, save_checkpoint
from .config import (
    DiscriminatorConfig,
    GeneratorConfig,
    LossWeights,
    MelConfig,
    TrainConfig,
    config_hash,
)
from .discriminator import DiscriminatorBank
from .generator import Generator, prepare_input
from .losses import discriminator_loss, generator_loss, mel_l1


@dataclass
class TrainUtterance:
    """One training clip: audio, aligned features, pooled front-end vector."""

    wave: np.ndarray                 # (L,) float at 16 kHz
    features: ArticulatoryFeatures   # T frames, L == 320 * T (trimmed to match)
    pooled: np.ndarray               # frozen front-end average, FFN input


def lr_factor(step: int, cfg: TrainConfig) -> float:
    """Halve every lr_halve_every steps, frozen after lr_freeze_after."""
    effective = min(step, cfg.lr_freeze_after)
    return 0.5 ** (effective // cfg.lr_halve_every)


def sample_window(utt: TrainUtterance, rng: np.random.Generator,
                  frames: int, samples_per_frame: int):
    """Random aligned (feature window, audio window) pair."""
    t = utt.features.n_frames
    if t < frames:
        raise DataError(
            f"utterance too short for a {frames}-frame window (has {t})")
    start = int(rng.integers(0, t - frames + 1))
    lo, hi = start * samples_per_frame, (start + frames) * samples_per_frame
    return start, utt.wave[lo:hi]


class VocoderTrainer:
    """Owns the generator, discriminators, speaker FFN and both optimizers."""

    def __init__(self, gen_cfg: GeneratorConfig | None = None,
                 disc_cfg: DiscriminatorConfig | None = None,
                 mel_cfg: MelConfig | None = None,
                 weights: LossWeights | None = None,
                 train_cfg: TrainConfig | None = None,
                 ffn: SpeakerFfn | None = None,
                 device: str = "cpu"):
        self.gen_cfg = gen_cfg or GeneratorConfig()
        self.disc_cfg = disc_cfg or DiscriminatorConfig()
        self.mel_cfg = mel_cfg or MelConfig()
        self.weights = weights or LossWeights()
        self.train_cfg = train_cfg or TrainConfig()
        self.device = device
        torch.manual_seed(self.train_cfg.seed)
        self.generator = Generator(self.gen_cfg).to(device)
        self.bank = DiscriminatorBank(self.disc_cfg).to(device)
        self.ffn = (ffn or SpeakerFfn(out_dim=self.gen_cfg.speaker_dim)).to(device)
        self.config_hash = config_hash(
            self.gen_cfg, self.disc_cfg, self.mel_cfg, self.weights, self.train_cfg)
        # the speaker FFN trains with the generator, on the same optimizer
        self.opt_g = torch.optim.Adam(
            list(self.generator.parameters()) + list(self.ffn.parameters()),
            lr=self.train_cfg.lr, betas=self.train_cfg.betas)
        self.opt_d = torch.optim.Adam(
            self.bank.parameters(), lr=self.train_cfg.lr,
            betas=self.train_cfg.betas)
        self.step = 0

    @property
    def current_lr(self) -> float:
        return self.train_cfg.lr * lr_factor(self.step, self.train_cfg)

    def _apply_lr(self) -> None:
        lr = self.current_lr
        for opt in (self.opt_g, self.opt_d):
            for group in opt.param_groups:
                group["lr"] = lr

    def _make_batch(self, dataset: Sequence[TrainUtterance],
                    rng: np.random.Generator):
        frames = self.train_cfg.window_frames
        spf = self.gen_cfg.samples_per_frame
        feats, waves, pooled = [], [], []
        for _ in range(self.train_cfg.batch_size):
            utt = dataset[int(rng.integers(0, len(dataset)))]
            start, wave = sample_window(utt, rng, frames, spf)
            matrix = prepare_input(utt.features, self.gen_cfg)
            feats.append(matrix[:, start:start + frames])
            waves.append(wave)
            pooled.append(utt.pooled)
        to = lambda arr: torch.from_numpy(np.stack(arr)).float().to(self.device)
        return to(feats), to(waves), to(pooled)

    def train_step(self, feats: torch.Tensor, real: torch.Tensor,
                   pooled: torch.Tensor) -> dict:
        self._apply_lr()
        self.generator.train()
        self.bank.train()
        self.ffn.train()
        spk = self.ffn(pooled)
        fake = self.generator(feats, spk)

        self.opt_d.zero_grad(set_to_none=True)
        d_total, d_parts = discriminator_loss(
            self.bank(real), self.bank(fake.detach()))
        d_total.backward()
        self.opt_d.step()

        self.opt_g.zero_grad(set_to_none=True)
        g_total, g_parts = generator_loss(
            real, fake, self.bank, self.weights, self.mel_cfg)
        g_total.backward()
        self.opt_g.step()

        self.step += 1
        out = {"disc": float(d_total.detach()), "gen": float(g_total.detach())}
        out.update({f"gen_{k}": float(v.detach()) for k, v in g_parts.items()})
        out.update({f"disc_{k}": float(v.detach()) for k, v in d_parts.items()})
        return out

    def _named_tensors(self) -> dict:
        tensors = {}
        for prefix, module in (("gen", self.generator), ("disc", self.bank),
                               ("ffn", self.ffn)):
            for name, value in module.state_dict().items():
                tensors[f"{prefix}/{name}"] = value.detach().cpu().numpy()
        for prefix, opt in (("optg", self.opt_g), ("optd", self.opt_d)):
            for idx, state in opt.state_dict()["state"].items():
                for key, value in state.items():
                    tensors[f"{prefix}/{idx}/{key}"] = (
                        value.detach().cpu().numpy()
                        if torch.is_tensor(value) else np.float32(value))
        return tensors

    def make_checkpoint(self) -> VocoderCheckpoint:
        return VocoderCheckpoint(
            step=self.step, config_hash=self.config_hash,
            lr=self.current_lr, tensors=self._named_tensors())

    def save(self, path) -> VocoderCheckpoint:
        ckpt = self.make_checkpoint()
        save_checkpoint(ckpt, path)
        return ckpt

    def _load_optimizer(self, opt, ckpt: VocoderCheckpoint, prefix: str) -> None:
        state_dict = opt.state_dict()
        state = {}
        for name, arr in ckpt.select(prefix).items():
            idx_s, key = name.split("/", 1)
            entry = state.setdefault(int(idx_s), {})
            entry[key] = torch.from_numpy(np.asarray(arr, dtype=np.float32))
        if state:
            opt.load_state_dict(
                {"state": state, "param_groups": state_dict["param_groups"]})

    def restore(self, path) -> None:
        ckpt = load_checkpoint(path)
        if ckpt.config_hash != self.config_hash:
            raise DataError(
                f"checkpoint config hash {ckpt.config_hash[:12]}... does not "
                f"match trainer config {self.config_hash[:12]}...; refusing "
                "to resume")
        for prefix, module in (("gen", self.generator), ("disc", self.bank),
                               ("ffn", self.ffn)):
            sd = {k: torch.from_numpy(v) for k, v in ckpt.select(prefix).items()}
            module.load_state_dict(sd)
        self._load_optimizer(self.opt_g, ckpt, "optg")
        self._load_optimizer(self.opt_d, ckpt, "optd")
        self.step = ckpt.step

    def run(self, dataset: Sequence[TrainUtterance], steps: int,
            out_dir=None, resume_from=None) -> Iterator[VocoderCheckpoint]:
        """Train for ``steps`` updates, yielding checkpoints at the configured
        cadence and at the end."""
        if not dataset:
            raise DataError("empty training dataset")
        if resume_from is not None:
            self.restore(resume_from)
        rng = np.random.default_rng(self.train_cfg.seed + self.step)
        out_dir = Path(out_dir) if out_dir is not None else None
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
        target = self.step + steps
        while self.step < target:
            batch = self._make_batch(dataset, rng)
            self.train_step(*batch)
            at_cadence = self.step % self.train_cfg.checkpoint_every == 0
            if at_cadence or self.step >= target:
                ckpt = self.make_checkpoint()
                if out_dir is not None:
                    save_checkpoint(ckpt, out_dir / f"step{self.step:08d}.ckpt")
                yield ckpt

    def eval_mel_l1(self, utt: TrainUtterance) -> float:
        """Diagnostic: mel distance between the real clip and its resynthesis."""
        self.generator.eval()
        self.ffn.eval()
        with torch.no_grad():
            feats = torch.from_numpy(
                prepare_input(utt.features, self.gen_cfg))[None].float()
            pooled = torch.from_numpy(utt.pooled)[None].float()
            fake = self.generator(feats, self.ffn(pooled))
            real = torch.from_numpy(utt.wave)[None].float()
            n = min(real.shape[-1], fake.shape[-1])
            return float(mel_l1(real[:, :n], fake[:, :n], self.mel_cfg))
