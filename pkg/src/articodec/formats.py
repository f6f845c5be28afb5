"""Little-endian binary containers for features, embeddings and fitted maps."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .types import (
    FEATURE_CHANNELS,
    FRAME_RATE,
    SPEAKER_DIM,
    ArticulatoryFeatures,
    SpeakerEmbedding,
)

ARTF_MAGIC = b"ARTF"
ARTF_VERSION = 1
SPKE_MAGIC = b"SPKE"
SPKE_VERSION = 1
AAIW_MAGIC = b"AAIW"
AAIW_VERSION = 1
AFFN_MAGIC = b"AFFN"
AFFN_VERSION = 1

_N_CHANNELS = len(FEATURE_CHANNELS)  # 14


def features_to_bytes(f: ArticulatoryFeatures) -> bytes:
    matrix = f.to_matrix()  # (14, T) float32
    n_frames = matrix.shape[1]
    header = ARTF_MAGIC + struct.pack(
        "<BIBI", ARTF_VERSION, n_frames, _N_CHANNELS, f.rate
    )
    # frame-major payload: frame 0's 14 channels, frame 1's, ...
    payload = np.ascontiguousarray(matrix.T, dtype="<f4").tobytes()
    trailer = np.ascontiguousarray(f.source.periodicity, dtype="<f4").tobytes()
    return header + payload + trailer


def features_from_bytes(data: bytes) -> ArticulatoryFeatures:
    if len(data) < 14:
        raise FormatError("header", "feature payload shorter than header")
    if data[:4] != ARTF_MAGIC:
        raise FormatError("magic", f"bad magic {data[:4]!r}, expected {ARTF_MAGIC!r}")
    version, n_frames, n_channels, rate = struct.unpack("<BIBI", data[4:14])
    if version != ARTF_VERSION:
        raise FormatError("version", f"unsupported version {version}")
    if n_channels != _N_CHANNELS:
        raise FormatError(
            "n_channels", f"expected {_N_CHANNELS} channels, got {n_channels}"
        )
    expected = 14 + 4 * n_frames * _N_CHANNELS + 4 * n_frames
    if len(data) != expected:
        raise FormatError(
            "payload", f"payload length mismatch: expected {expected} bytes, got {len(data)}"
        )
    body = np.frombuffer(data, dtype="<f4", count=n_frames * _N_CHANNELS, offset=14)
    matrix = body.reshape(n_frames, _N_CHANNELS).T.copy()
    periodicity = np.frombuffer(
        data, dtype="<f4", count=n_frames, offset=14 + 4 * n_frames * _N_CHANNELS
    ).copy()
    return ArticulatoryFeatures.from_matrix(matrix, periodicity, rate=rate)


def write_features(f: ArticulatoryFeatures, path) -> None:
    Path(path).write_bytes(features_to_bytes(f))


def read_features(path) -> ArticulatoryFeatures:
    return features_from_bytes(Path(path).read_bytes())


def embedding_to_bytes(e: SpeakerEmbedding) -> bytes:
    header = SPKE_MAGIC + struct.pack("<B", SPKE_VERSION)
    return header + np.ascontiguousarray(e.vector, dtype="<f4").tobytes()


def embedding_from_bytes(data: bytes) -> SpeakerEmbedding:
    if len(data) < 5 or data[:4] != SPKE_MAGIC:
        raise FormatError("magic", f"bad magic, expected {SPKE_MAGIC!r}")
    if data[4] != SPKE_VERSION:
        raise FormatError("version", f"unsupported version {data[4]}")
    if len(data) != 5 + 4 * SPEAKER_DIM:
        raise FormatError("payload", "payload length mismatch")
    return SpeakerEmbedding(np.frombuffer(data, dtype="<f4", offset=5).copy())


def write_embedding(e: SpeakerEmbedding, path) -> None:
    Path(path).write_bytes(embedding_to_bytes(e))


def read_embedding(path) -> SpeakerEmbedding:
    return embedding_from_bytes(Path(path).read_bytes())


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw


def _unpack_str(data: bytes, offset: int):
    (n,) = struct.unpack_from("<H", data, offset)
    start = offset + 2
    return data[start:start + n].decode("utf-8"), start + n


def linear_map_to_bytes(weights: np.ndarray, bias: np.ndarray,
                        source_layer: int, encoder_id: str) -> bytes:
    weights = np.asarray(weights, dtype="<f4")
    bias = np.asarray(bias, dtype="<f4")
    d = weights.shape[0]
    if weights.shape != (d, 12) or bias.shape != (12,):
        raise FormatError("weights", f"expected (D, 12) weights and (12,) bias, got "
                                     f"{weights.shape} and {bias.shape}")
    out = AAIW_MAGIC + struct.pack("<B", AAIW_VERSION)
    out += _pack_str(encoder_id)
    out += struct.pack("<BI", source_layer, d)
    out += np.ascontiguousarray(weights).tobytes()
    out += np.ascontiguousarray(bias).tobytes()
    return out


def linear_map_from_bytes(data: bytes):
    if len(data) < 5 or data[:4] != AAIW_MAGIC:
        raise FormatError("magic", f"bad magic, expected {AAIW_MAGIC!r}")
    if data[4] != AAIW_VERSION:
        raise FormatError("version", f"unsupported version {data[4]}")
    encoder_id, offset = _unpack_str(data, 5)
    layer, d = struct.unpack_from("<BI", data, offset)
    offset += 5
    expected = offset + 4 * (d * 12 + 12)
    if len(data) != expected:
        raise FormatError("payload", "payload length mismatch")
    weights = np.frombuffer(data, dtype="<f4", count=d * 12, offset=offset)
    weights = weights.reshape(d, 12).copy()
    bias = np.frombuffer(data, dtype="<f4", count=12, offset=offset + 4 * d * 12).copy()
    return weights, bias, layer, encoder_id


def affine_map_to_bytes(weights: np.ndarray, bias: np.ndarray,
                        src_speaker: str, tgt_speaker: str) -> bytes:
    weights = np.asarray(weights, dtype="<f4")
    bias = np.asarray(bias, dtype="<f4")
    if weights.shape != (12, 12) or bias.shape != (12,):
        raise FormatError("weights", f"expected (12, 12) weights and (12,) bias, got "
                                     f"{weights.shape} and {bias.shape}")
    out = AFFN_MAGIC + struct.pack("<B", AFFN_VERSION)
    out += _pack_str(src_speaker) + _pack_str(tgt_speaker)
    out += np.ascontiguousarray(weights).tobytes()
    out += np.ascontiguousarray(bias).tobytes()
    return out


def affine_map_from_bytes(data: bytes):
    if len(data) < 5 or data[:4] != AFFN_MAGIC:
        raise FormatError("magic", f"bad magic, expected {AFFN_MAGIC!r}")
    if data[4] != AFFN_VERSION:
        raise FormatError("version", f"unsupported version {data[4]}")
    src, offset = _unpack_str(data, 5)
    tgt, offset = _unpack_str(data, offset)
    expected = offset + 4 * (144 + 12)
    if len(data) != expected:
        raise FormatError("payload", "payload length mismatch")
    weights = np.frombuffer(data, dtype="<f4", count=144, offset=offset)
    weights = weights.reshape(12, 12).copy()
    bias = np.frombuffer(data, dtype="<f4", count=12, offset=offset + 576).copy()
    return weights, bias, src, tgt
