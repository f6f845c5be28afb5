import numpy as np
import pytest
import torch

from articodec.errors import DataError
from articodec.speaker import SpeakerFfn
from articodec.types import ArticulatoryFeatures
from articodec.vocoder import (
    DiscriminatorConfig,
    GeneratorConfig,
    TrainConfig,
    TrainUtterance,
    VocoderCheckpoint,
    VocoderTrainer,
    load_checkpoint,
    lr_factor,
    sample_window,
    save_checkpoint,
)

from test_formats import random_features


def tiny_trainer(seed=0, **train_kwargs):
    cfg = TrainConfig(batch_size=2, checkpoint_every=5, seed=seed,
                      **train_kwargs)
    return VocoderTrainer(
        gen_cfg=GeneratorConfig(base_channels=8, film_hidden=4),
        disc_cfg=DiscriminatorConfig.tiny(),
        train_cfg=cfg,
        ffn=SpeakerFfn(in_dim=16, hidden_dim=16),
    )


def tiny_utterance(t=40, seed=0):
    rng = np.random.default_rng(seed)
    features = random_features(t, seed)
    return TrainUtterance(
        wave=rng.uniform(-0.5, 0.5, t * 320),
        features=features,
        pooled=rng.standard_normal(16),
    )


class TestLrSchedule:
    def test_quarter_after_16k_steps(self):
        cfg = TrainConfig()
        assert cfg.lr * lr_factor(16_000, cfg) == pytest.approx(1e-4 / 4)

    def test_halved_every_8k(self):
        cfg = TrainConfig()
        assert lr_factor(0, cfg) == 1.0
        assert lr_factor(7_999, cfg) == 1.0
        assert lr_factor(8_000, cfg) == 0.5
        assert lr_factor(24_000, cfg) == 0.125

    def test_frozen_after_320k(self):
        cfg = TrainConfig()
        assert lr_factor(400_000, cfg) == lr_factor(320_000, cfg)
        assert lr_factor(1_500_000, cfg) == lr_factor(320_000, cfg)


class TestWindowSampling:
    def test_window_alignment(self):
        utt = tiny_utterance()
        rng = np.random.default_rng(1)
        start, wave = sample_window(utt, rng, 16, 320)
        assert len(wave) == 5120
        assert np.array_equal(wave, utt.wave[start * 320:(start + 16) * 320])

    def test_too_short_utterance_rejected(self):
        utt = tiny_utterance(t=8)
        with pytest.raises(DataError, match="short"):
            sample_window(utt, np.random.default_rng(0), 16, 320)

    def test_window_config_arithmetic(self):
        cfg = TrainConfig()
        assert cfg.window_frames == 16
        assert cfg.window_samples == 5120


class TestTrainerSteps:
    def test_losses_finite_and_steps_count(self):
        trainer = tiny_trainer()
        dataset = [tiny_utterance()]
        logs = [trainer.train_step(*trainer._make_batch(dataset,
                                                        np.random.default_rng(0)))
                for _ in range(2)]
        assert trainer.step == 2
        for log in logs:
            for key, value in log.items():
                assert np.isfinite(value), key

    def test_generator_step_keeps_discriminator_params(self):
        trainer = tiny_trainer()
        dataset = [tiny_utterance()]
        batch = trainer._make_batch(dataset, np.random.default_rng(0))
        disc_before = [p.detach().clone() for p in trainer.bank.parameters()]
        gen_before = [p.detach().clone() for p in trainer.generator.parameters()]
        # generator-side update only
        trainer._apply_lr()
        spk = trainer.ffn(batch[2])
        fake = trainer.generator(batch[0], spk)
        from articodec.vocoder import generator_loss

        trainer.opt_g.zero_grad(set_to_none=True)
        total, _ = generator_loss(batch[1], fake, trainer.bank,
                                  trainer.weights, trainer.mel_cfg)
        total.backward()
        trainer.opt_g.step()
        assert all(torch.equal(a, b) for a, b in
                   zip(disc_before, trainer.bank.parameters()))
        assert any(not torch.equal(a, b) for a, b in
                   zip(gen_before, trainer.generator.parameters()))

    def test_empty_dataset_rejected(self):
        trainer = tiny_trainer()
        with pytest.raises(DataError, match="empty"):
            list(trainer.run([], steps=1))

    def test_run_yields_at_cadence(self, tmp_path):
        trainer = tiny_trainer()
        dataset = [tiny_utterance()]
        ckpts = list(trainer.run(dataset, steps=11, out_dir=tmp_path))
        assert [c.step for c in ckpts] == [5, 10, 11]
        assert sorted(p.name for p in tmp_path.glob("*.ckpt")) == [
            "step00000005.ckpt", "step00000010.ckpt", "step00000011.ckpt"]


class TestCheckpointing:
    def test_container_round_trip(self, tmp_path):
        tensors = {"a/w": np.random.default_rng(0).standard_normal((3, 4))
                   .astype(np.float32),
                   "b/x": np.float32(7.0)}
        ckpt = VocoderCheckpoint(step=42, config_hash="h" * 64, lr=5e-5,
                                 tensors=tensors)
        path = tmp_path / "c.ckpt"
        save_checkpoint(ckpt, path)
        loaded = load_checkpoint(path)
        assert loaded.step == 42
        assert loaded.config_hash == "h" * 64
        assert loaded.lr == 5e-5
        assert np.array_equal(loaded.tensors["a/w"], tensors["a/w"])
        assert loaded.tensors["b/x"] == 7.0

    def test_resume_restores_state_exactly(self, tmp_path):
        dataset = [tiny_utterance()]
        trainer = tiny_trainer(seed=3)
        list(trainer.run(dataset, steps=5, out_dir=tmp_path))
        path = tmp_path / "step00000005.ckpt"

        resumed = tiny_trainer(seed=3)
        resumed.restore(path)
        assert resumed.step == 5
        for a, b in zip(trainer.generator.parameters(),
                        resumed.generator.parameters()):
            assert torch.equal(a, b)
        for a, b in zip(trainer.bank.parameters(), resumed.bank.parameters()):
            assert torch.equal(a, b)

    def test_config_hash_mismatch_rejected(self, tmp_path):
        trainer = tiny_trainer()
        dataset = [tiny_utterance()]
        list(trainer.run(dataset, steps=5, out_dir=tmp_path))
        other = VocoderTrainer(
            gen_cfg=GeneratorConfig(base_channels=16, film_hidden=4),
            disc_cfg=DiscriminatorConfig.tiny(),
            train_cfg=TrainConfig(batch_size=2),
            ffn=SpeakerFfn(in_dim=16, hidden_dim=16))
        with pytest.raises(DataError, match="hash"):
            other.restore(tmp_path / "step00000005.ckpt")
