import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from articodec.errors import FormatError
from articodec.formats import (
    affine_map_from_bytes,
    affine_map_to_bytes,
    embedding_from_bytes,
    embedding_to_bytes,
    features_from_bytes,
    features_to_bytes,
    linear_map_from_bytes,
    linear_map_to_bytes,
    read_features,
    write_features,
)
from articodec.types import ArticulatoryFeatures, SpeakerEmbedding


def random_features(t: int, seed: int = 0) -> ArticulatoryFeatures:
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((14, t)).astype(np.float32)
    matrix[12] = np.where(rng.random(t) > 0.4,
                          rng.uniform(50, 550, t), 0.0).astype(np.float32)
    matrix[13] = np.abs(matrix[13])
    periodicity = rng.random(t).astype(np.float32)
    return ArticulatoryFeatures.from_matrix(matrix, periodicity)


class TestFeatureContainer:
    def test_round_trip_to_the_bit(self, tmp_path):
        f = random_features(137)
        path = tmp_path / "f.artf"
        write_features(f, path)
        g = read_features(path)
        assert np.array_equal(f.to_matrix(), g.to_matrix())
        assert np.array_equal(f.source.periodicity, g.source.periodicity)
        assert g.rate == f.rate

    @given(st.integers(2, 2000), st.integers(0, 2 ** 16))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_property(self, t, seed):
        f = random_features(t, seed)
        g = features_from_bytes(features_to_bytes(f))
        assert np.array_equal(f.to_matrix(), g.to_matrix())
        assert np.array_equal(f.source.periodicity, g.source.periodicity)

    def test_header_layout(self):
        data = features_to_bytes(random_features(5))
        assert data[:4] == b"ARTF"
        assert data[4] == 1
        n_frames, = struct.unpack_from("<I", data, 5)
        assert n_frames == 5
        assert data[9] == 14
        rate, = struct.unpack_from("<I", data, 10)
        assert rate == 50
        assert len(data) == 14 + 4 * 5 * 14 + 4 * 5

    def test_wrong_channel_count_rejected(self):
        data = bytearray(features_to_bytes(random_features(3)))
        data[9] = 13
        with pytest.raises(FormatError, match="expected 14 channels"):
            features_from_bytes(bytes(data))

    def test_truncated_payload_rejected(self):
        data = features_to_bytes(random_features(3))
        with pytest.raises(FormatError, match="payload length mismatch"):
            features_from_bytes(data[:-4])

    def test_bad_magic_rejected(self):
        data = b"XXXX" + features_to_bytes(random_features(3))[4:]
        with pytest.raises(FormatError, match="magic"):
            features_from_bytes(data)

    def test_bad_version_rejected(self):
        data = bytearray(features_to_bytes(random_features(3)))
        data[4] = 9
        with pytest.raises(FormatError, match="version"):
            features_from_bytes(bytes(data))


class TestEmbeddingContainer:
    def test_round_trip(self):
        e = SpeakerEmbedding(np.random.default_rng(1).standard_normal(64))
        g = embedding_from_bytes(embedding_to_bytes(e))
        assert np.array_equal(e.vector, g.vector)

    def test_payload_mismatch(self):
        with pytest.raises(FormatError):
            embedding_from_bytes(b"SPKE\x01" + b"\x00" * 12)


class TestLinearMapContainer:
    def test_round_trip(self):
        rng = np.random.default_rng(2)
        w = rng.standard_normal((40, 12)).astype(np.float32)
        b = rng.standard_normal(12).astype(np.float32)
        w2, b2, layer, enc = linear_map_from_bytes(
            linear_map_to_bytes(w, b, 9, "mock-ssl"))
        assert np.array_equal(w, w2)
        assert np.array_equal(b, b2)
        assert layer == 9
        assert enc == "mock-ssl"


class TestAffineContainer:
    def test_round_trip(self):
        rng = np.random.default_rng(3)
        w = rng.standard_normal((12, 12)).astype(np.float32)
        b = rng.standard_normal(12).astype(np.float32)
        w2, b2, src, tgt = affine_map_from_bytes(
            affine_map_to_bytes(w, b, "spkA", "spkB"))
        assert np.array_equal(w, w2)
        assert np.array_equal(b, b2)
        assert (src, tgt) == ("spkA", "spkB")
