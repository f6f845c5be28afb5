import numpy as np
import pytest
import torch

from articodec.errors import DataError
from articodec.types import ArticulatoryFeatures, SpeakerEmbedding
from articodec.vocoder import (
    FilmLayer,
    Generator,
    GeneratorConfig,
    film_modulate,
    prepare_input,
    synthesize,
)

from test_formats import random_features


def tiny_generator(seed=0, **kwargs):
    torch.manual_seed(seed)
    cfg = GeneratorConfig(base_channels=kwargs.pop("base_channels", 16),
                          film_hidden=kwargs.pop("film_hidden", 8), **kwargs)
    return Generator(cfg)


class TestGeneratorConfig:
    def test_stride_must_be_half_kernel(self):
        with pytest.raises(DataError, match="half"):
            GeneratorConfig(upsample_kernels=(10, 8, 4, 4),
                            upsample_strides=(5, 4, 2, 1))

    def test_rate_budget_must_reach_16k(self):
        with pytest.raises(DataError, match="16000"):
            GeneratorConfig(pre_upsample_repeat=2)

    def test_samples_per_frame(self):
        assert GeneratorConfig().samples_per_frame == 320


class TestGeneratorForward:
    def test_length_contract(self):
        gen = tiny_generator()
        spk = torch.randn(1, 64)
        for t in (1, 16, 100):
            out = gen(torch.randn(1, 14, t), spk)
            assert out.shape == (1, 320 * t)

    def test_channel_mismatch_rejected(self):
        gen = tiny_generator()
        with pytest.raises(DataError, match="channels"):
            gen(torch.randn(1, 13, 10), torch.randn(1, 64))

    def test_embedding_changes_output(self):
        gen = tiny_generator()
        gen.eval()
        feats = torch.randn(1, 14, 20)
        with torch.no_grad():
            a = gen(feats, torch.randn(1, 64))
            b = gen(feats, torch.randn(1, 64))
        assert torch.norm(a - b) > 0

    def test_eval_mode_deterministic(self):
        gen = tiny_generator()
        gen.eval()
        feats = torch.randn(1, 14, 12)
        spk = torch.randn(1, 64)
        with torch.no_grad():
            a = gen(feats, spk)
            b = gen(feats, spk)
        assert torch.equal(a, b)


class TestFilm:
    def test_identity_when_head_is_zero(self):
        torch.manual_seed(1)
        film = FilmLayer(cond_dim=8, channels=4, hidden=6)
        with torch.no_grad():
            film.net[-1].weight.zero_()
            film.net[-1].bias.zero_()
        film.eval()
        x = torch.randn(2, 4, 9)
        out = film(x, torch.randn(2, 8))
        assert torch.allclose(out, x)

    def test_zero_scale_broadcasts_center(self):
        torch.manual_seed(2)
        film = FilmLayer(cond_dim=8, channels=4, hidden=6)
        with torch.no_grad():
            film.net[-1].weight.zero_()
            # raw scale -1 -> applied scale 0; distinct per-channel centers
            film.net[-1].bias.copy_(torch.cat(
                [-torch.ones(4), torch.tensor([1.0, 2.0, 3.0, 4.0])]))
        film.eval()
        x = torch.randn(1, 4, 7)
        out = film(x, torch.randn(1, 8))
        expected = torch.tensor([1.0, 2.0, 3.0, 4.0])[None, :, None].expand(1, 4, 7)
        assert torch.allclose(out, expected)

    def test_matches_broadcast_affine_oracle(self):
        torch.manual_seed(3)
        film = FilmLayer(cond_dim=16, channels=6, hidden=12)
        film.eval()
        x = torch.randn(1, 6, 11)
        cond = torch.randn(1, 16)
        with torch.no_grad():
            scale, center = film.modulation(cond)
            out = film(x, cond)
        oracle = np.zeros((1, 6, 11), dtype=np.float32)
        for c in range(6):
            for t in range(11):
                oracle[0, c, t] = (float(scale[0, c]) * float(x[0, c, t])
                                   + float(center[0, c]))
        assert np.allclose(out.numpy(), oracle, atol=1e-6)

    def test_dim_mismatch_rejected(self):
        film = FilmLayer(cond_dim=8, channels=4, hidden=6)
        with pytest.raises(DataError, match="channels"):
            film(torch.randn(1, 5, 9), torch.randn(1, 8))

    def test_film_modulate_functional(self):
        torch.manual_seed(4)
        film = FilmLayer(cond_dim=64, channels=3, hidden=8)
        acts = np.random.default_rng(4).standard_normal((3, 10)).astype(np.float32)
        spk = SpeakerEmbedding(np.random.default_rng(5).standard_normal(64))
        out = film_modulate(acts, spk, film)
        with torch.no_grad():
            scale, center = film.modulation(torch.from_numpy(spk.vector)[None])
        expected = scale[0].numpy()[:, None] * acts + center[0].numpy()[:, None]
        assert np.allclose(out, expected, atol=1e-6)


class TestSynthesize:
    def test_length_contract_through_features(self):
        gen = tiny_generator()
        feats = random_features(16)
        spk = SpeakerEmbedding(np.random.default_rng(6).standard_normal(64))
        wave = synthesize(feats, spk, gen)
        assert len(wave) == 16 * 320
        assert wave.sample_rate == 16000

    def test_pitch_divisor_applied(self):
        feats = random_features(10)
        cfg = GeneratorConfig(base_channels=16, film_hidden=8)
        matrix = prepare_input(feats, cfg)
        assert np.allclose(matrix[12], feats.source.f0 / 100.0, atol=1e-6)
        raw_cfg = GeneratorConfig(base_channels=16, film_hidden=8,
                                  pitch_divisor=1.0)
        assert np.allclose(prepare_input(feats, raw_cfg)[12],
                           feats.source.f0, atol=1e-6)

    def test_deterministic_and_restores_train_flag(self):
        gen = tiny_generator()
        gen.train()
        feats = random_features(8)
        spk = SpeakerEmbedding(np.zeros(64))
        a = synthesize(feats, spk, gen)
        b = synthesize(feats, spk, gen)
        assert np.array_equal(a.samples, b.samples)
        assert gen.training  # caller's mode restored
