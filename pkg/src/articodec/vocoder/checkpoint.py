"""Binary checkpoint container: named float32 tensors + a metadata block."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import FormatError

CKPT_MAGIC = b"AVCK"
CKPT_VERSION = 1
_DTYPE_F32 = 0


@dataclass
class VocoderCheckpoint:
    """Flat tensor map covering generator, discriminators, speaker FFN and
    optimizer state, keyed by slash-prefixed names."""

    step: int
    config_hash: str
    lr: float
    tensors: dict

    def select(self, prefix: str) -> dict:
        """Sub-map of tensors under ``prefix/`` with the prefix stripped."""
        plen = len(prefix) + 1
        return {k[plen:]: v for k, v in self.tensors.items()
                if k.startswith(prefix + "/")}


def save_checkpoint(ckpt: VocoderCheckpoint, path) -> None:
    out = bytearray()
    out += CKPT_MAGIC
    out += struct.pack("<B", CKPT_VERSION)
    out += struct.pack("<Qd", ckpt.step, ckpt.lr)
    hash_raw = ckpt.config_hash.encode("utf-8")
    out += struct.pack("<H", len(hash_raw)) + hash_raw
    out += struct.pack("<I", len(ckpt.tensors))
    for name in sorted(ckpt.tensors):
        arr = np.ascontiguousarray(ckpt.tensors[name], dtype="<f4")
        raw = name.encode("utf-8")
        out += struct.pack("<H", len(raw)) + raw
        out += struct.pack("<BB", _DTYPE_F32, arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape) if arr.ndim else b""
        out += arr.tobytes()
    Path(path).write_bytes(bytes(out))


def load_checkpoint(path) -> VocoderCheckpoint:
    data = Path(path).read_bytes()
    if len(data) < 5 or data[:4] != CKPT_MAGIC:
        raise FormatError("magic", f"bad magic, expected {CKPT_MAGIC!r}")
    if data[4] != CKPT_VERSION:
        raise FormatError("version", f"unsupported checkpoint version {data[4]}")
    offset = 5
    step, lr = struct.unpack_from("<Qd", data, offset)
    offset += 16
    (hash_len,) = struct.unpack_from("<H", data, offset)
    offset += 2
    config_hash = data[offset:offset + hash_len].decode("utf-8")
    offset += hash_len
    (n_tensors,) = struct.unpack_from("<I", data, offset)
    offset += 4
    tensors = {}
    for _ in range(n_tensors):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset:offset + name_len].decode("utf-8")
        offset += name_len
        dtype, ndim = struct.unpack_from("<BB", data, offset)
        offset += 2
        if dtype != _DTYPE_F32:
            raise FormatError("dtype", f"unknown dtype code {dtype} for {name!r}")
        shape = struct.unpack_from(f"<{ndim}I", data, offset) if ndim else ()
        offset += 4 * ndim
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
        offset += 4 * count
        tensors[name] = arr.reshape(shape).copy()
    if offset != len(data):
        raise FormatError("payload", "payload length mismatch")
    return VocoderCheckpoint(step=int(step), config_hash=config_hash,
                             lr=float(lr), tensors=tensors)
