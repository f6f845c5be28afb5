import numpy as np
import pytest

from articodec.control import convert_voice
from articodec.errors import DataError, MissingAssetError
from articodec.signal import resample
from articodec.stack import CodecStack
from articodec.types import SpeakerEmbedding

from conftest import build_tiny_stack, speechlike


class TestEncode:
    def test_feature_shape_and_rates(self, tiny_stack, voiced_clip):
        features, spk = tiny_stack.encode(voiced_clip)
        assert features.rate == 50
        assert features.to_matrix().shape == (14, features.n_frames)
        assert spk.vector.shape == (64,)
        # 1.5 s clip -> about 75 frames
        assert abs(features.n_frames - 75) <= 2

    def test_ema_channels_standardized(self, tiny_stack, voiced_clip):
        features, _ = tiny_stack.encode(voiced_clip)
        for channel in features.ema.values:
            assert channel.mean() == pytest.approx(0.0, abs=1e-4)
            assert channel.std() == pytest.approx(1.0, abs=1e-4)

    def test_deterministic(self, tiny_stack, voiced_clip):
        f1, e1 = tiny_stack.encode(voiced_clip)
        f2, e2 = tiny_stack.encode(voiced_clip)
        assert np.array_equal(f1.to_matrix(), f2.to_matrix())
        assert np.array_equal(e1.vector, e2.vector)

    def test_accepts_ingest_rates(self, tiny_stack):
        clip24 = speechlike(duration_s=1.0, sr=24000)
        features, _ = tiny_stack.encode(clip24)
        assert abs(features.n_frames - 50) <= 2


class TestRoundTrip:
    def test_synthesis_length_contract(self, tiny_stack, voiced_clip):
        features, spk = tiny_stack.encode(voiced_clip)
        wave = tiny_stack.synthesize(features, spk)
        assert len(wave) == features.n_frames * 320
        assert wave.sample_rate == 16000

    def test_save_load_round_trip_is_bit_stable(self, tiny_stack, tmp_path,
                                                voiced_clip):
        tiny_stack.save(tmp_path)
        reloaded = CodecStack.load(tmp_path)
        f1, e1 = tiny_stack.encode(voiced_clip)
        f2, e2 = reloaded.encode(voiced_clip)
        assert np.array_equal(f1.to_matrix(), f2.to_matrix())
        assert np.array_equal(e1.vector, e2.vector)
        w1 = tiny_stack.synthesize(f1, e1)
        w2 = reloaded.synthesize(f2, e2)
        assert np.array_equal(w1.samples, w2.samples)

    def test_missing_directory_is_missing_asset(self, tmp_path):
        with pytest.raises(MissingAssetError, match="stack"):
            CodecStack.load(tmp_path / "nowhere")


class TestConvertVoice:
    def test_self_target_equals_resynthesis(self, tiny_stack, voiced_clip):
        features, spk = tiny_stack.encode(voiced_clip)
        plain = tiny_stack.synthesize(features, spk)
        converted = convert_voice(voiced_clip, spk, (0.0, 0.0), tiny_stack,
                                  p_rescale=False)
        assert np.array_equal(converted.samples, plain.samples)

    def test_different_embeddings_change_audio_not_articulation(
            self, tiny_stack, voiced_clip):
        rng = np.random.default_rng(0)
        spk_a = SpeakerEmbedding(rng.standard_normal(64))
        spk_b = SpeakerEmbedding(rng.standard_normal(64))
        out_a = convert_voice(voiced_clip, spk_a, (200.0, 20.0), tiny_stack)
        out_b = convert_voice(voiced_clip, spk_b, (200.0, 20.0), tiny_stack)
        assert not np.array_equal(out_a.samples, out_b.samples)
        # encoding of the source is untouched by the choice of target
        f1, _ = tiny_stack.encode(voiced_clip)
        f2, _ = tiny_stack.encode(voiced_clip)
        assert np.array_equal(f1.ema.values, f2.ema.values)

    def test_short_clip_warns(self, tiny_stack):
        clip = speechlike(duration_s=1.0)
        spk = SpeakerEmbedding(np.zeros(64) + 0.1)
        with pytest.warns(UserWarning, match="2 s"):
            convert_voice(clip, spk, (200.0, 20.0), tiny_stack, p_rescale=False)

    def test_p_rescale_changes_only_pitch_channel(self, tiny_stack):
        clip = speechlike(duration_s=2.2)
        features, spk = tiny_stack.encode(clip)
        out_raw = convert_voice(clip, spk, (300.0, 30.0), tiny_stack,
                                p_rescale=False)
        out_rescaled = convert_voice(clip, spk, (300.0, 30.0), tiny_stack,
                                     p_rescale=True)
        # pitch moved, so the audio must differ
        assert not np.array_equal(out_raw.samples, out_rescaled.samples)


class TestTemplates:
    def test_template_and_pitch_stats(self, tiny_stack):
        clips = [speechlike(duration_s=1.0, seed=s, f0=150 + 10 * s)
                 for s in range(3)]
        template = tiny_stack.make_template(clips)
        assert template.vector.shape == (64,)
        mean, std = tiny_stack.pitch_stats(clips)
        assert 100.0 < mean < 250.0
        assert std >= 0.0
