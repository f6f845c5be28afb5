import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from articodec.errors import DataError
from articodec.speaker import (
    MockFrameFrontend,
    SpeakerFfn,
    encode_speaker,
    make_template,
    weighted_pool,
)
from articodec.types import Waveform

from conftest import speechlike

SR = 16000


class TestWeightedPool:
    def test_uniform_weights_give_mean(self):
        f = np.random.default_rng(0).standard_normal((20, 8))
        out = weighted_pool(f, np.ones(20))
        assert np.allclose(out, f.mean(axis=0), atol=1e-12)

    def test_one_hot_selects_frame(self):
        f = np.random.default_rng(1).standard_normal((15, 6))
        w = np.zeros(15)
        w[7] = 3.0
        assert np.allclose(weighted_pool(f, w), f[7], atol=1e-12)

    def test_matches_dense_sum_oracle(self):
        rng = np.random.default_rng(2)
        f = rng.standard_normal((30, 10))
        w = rng.random(30)
        expected = sum(w[t] * f[t] for t in range(30)) / w.sum()
        assert np.allclose(weighted_pool(f, w), expected, atol=1e-6)

    def test_all_zero_weights_fall_back_to_uniform(self):
        f = np.random.default_rng(3).standard_normal((12, 4))
        with pytest.warns(UserWarning, match="zero"):
            out = weighted_pool(f, np.zeros(12))
        assert np.allclose(out, f.mean(axis=0), atol=1e-12)

    def test_negative_weights_rejected(self):
        with pytest.raises(DataError, match="nonnegative"):
            weighted_pool(np.zeros((3, 2)), np.array([1.0, -1.0, 0.0]))

    def test_joint_permutation_invariance(self):
        rng = np.random.default_rng(4)
        f = rng.standard_normal((25, 5))
        w = rng.random(25)
        perm = rng.permutation(25)
        assert np.allclose(weighted_pool(f, w),
                           weighted_pool(f[perm], w[perm]), atol=1e-12)

    @given(st.floats(1e-3, 1e3), st.integers(0, 30))
    @settings(max_examples=30)
    def test_weight_scale_invariance(self, c, seed):
        rng = np.random.default_rng(seed)
        f = rng.standard_normal((10, 4))
        w = rng.random(10) + 0.01
        assert np.allclose(weighted_pool(f, w), weighted_pool(f, c * w),
                           atol=1e-9)


def gelu_oracle(x: np.ndarray) -> np.ndarray:
    from scipy.special import erf

    return x * 0.5 * (1.0 + erf(x / math.sqrt(2.0)))


class TestEncodeSpeaker:
    def setup_method(self):
        torch.manual_seed(0)
        self.frontend = MockFrameFrontend(dim=32)
        self.ffn = SpeakerFfn(in_dim=32, hidden_dim=32)
        self.wave = speechlike(duration_s=1.0)
        self.periodicity = np.random.default_rng(5).random(50)

    def test_eval_mode_deterministic(self):
        e1 = encode_speaker(self.wave, self.periodicity, self.ffn, self.frontend)
        e2 = encode_speaker(self.wave, self.periodicity, self.ffn, self.frontend)
        assert np.array_equal(e1.vector, e2.vector)

    def test_zero_ffn_gives_zero_embedding(self):
        with torch.no_grad():
            for p in self.ffn.parameters():
                p.zero_()
        e = encode_speaker(self.wave, self.periodicity, self.ffn, self.frontend)
        assert np.array_equal(e.vector, np.zeros(64, dtype=np.float32))

    def test_identity_ffn_matches_gelu_oracle(self):
        ffn = SpeakerFfn(in_dim=96, hidden_dim=96)
        with torch.no_grad():
            ffn.layer1.weight.copy_(torch.eye(96))
            ffn.layer1.bias.zero_()
            ffn.layer2.weight.copy_(torch.eye(96)[:64])
            ffn.layer2.bias.zero_()
        frontend = MockFrameFrontend(dim=96)
        pooled = weighted_pool(frontend.extract(self.wave),
                               self.periodicity[:50])
        expected = gelu_oracle(pooled)[:64]
        e = encode_speaker(self.wave, self.periodicity, ffn, frontend)
        assert np.allclose(e.vector, expected, atol=1e-5)

    def test_embedding_is_64d_finite(self):
        e = encode_speaker(self.wave, self.periodicity, self.ffn, self.frontend)
        assert e.vector.shape == (64,)
        assert np.all(np.isfinite(e.vector))

    def test_frontend_frozen_across_ffn_updates(self):
        before = self.frontend.extract(self.wave)
        opt = torch.optim.SGD(self.ffn.parameters(), lr=0.5)
        for _ in range(3):
            out = self.ffn(torch.randn(4, 32))
            loss = (out ** 2).mean()
            opt.zero_grad()
            loss.backward()
            opt.step()
        after = self.frontend.extract(self.wave)
        assert np.array_equal(before, after)

    def test_frame_count_for_one_second(self):
        feats = self.frontend.extract(self.wave)
        assert abs(feats.shape[0] - 50) <= 1


class TestMakeTemplate:
    def setup_method(self):
        torch.manual_seed(1)
        self.frontend = MockFrameFrontend(dim=32)
        self.ffn = SpeakerFfn(in_dim=32, hidden_dim=32)

    def test_single_clip_equals_direct_encoding(self):
        clip = speechlike(duration_s=1.0, seed=2)
        template = make_template([clip], self.ffn, self.frontend, k=10)
        from articodec.signal import zscore
        from articodec.source import track_pitch

        normalized = Waveform(zscore(clip.samples), SR)
        _, periodicity = track_pitch(normalized)
        direct = encode_speaker(normalized, periodicity, self.ffn, self.frontend)
        assert np.array_equal(template.vector, direct.vector)

    def test_concatenation_not_mean_of_embeddings(self):
        a = speechlike(duration_s=1.0, seed=3, f0=140)
        b = speechlike(duration_s=1.0, seed=4, f0=200)
        template = make_template([a, b], self.ffn, self.frontend)
        ea = make_template([a], self.ffn, self.frontend)
        eb = make_template([b], self.ffn, self.frontend)
        mean_emb = (ea.vector + eb.vector) / 2
        assert not np.allclose(template.vector, mean_emb, atol=1e-6)

    def test_order_matters(self):
        a = speechlike(duration_s=1.0, seed=5, f0=140)
        b = speechlike(duration_s=1.0, seed=6, f0=210)
        t_ab = make_template([a, b], self.ffn, self.frontend)
        t_ba = make_template([b, a], self.ffn, self.frontend)
        assert not np.array_equal(t_ab.vector, t_ba.vector)

    def test_k_limits_clip_count(self):
        clips = [speechlike(duration_s=0.5, seed=s) for s in range(4)]
        t2 = make_template(clips, self.ffn, self.frontend, k=2)
        t_first2 = make_template(clips[:2], self.ffn, self.frontend, k=10)
        assert np.array_equal(t2.vector, t_first2.vector)

    def test_empty_list_rejected(self):
        with pytest.raises(DataError, match="at least one"):
            make_template([], self.ffn, self.frontend)
