"""Cross-speaker articulatory-space alignment by affine maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import _ridge_fit
from .errors import DataError
from .formats import affine_map_from_bytes, affine_map_to_bytes
from .types import ARTICULATORS, EmaTrace

DEFAULT_RIDGE_SCALE = 1e-4  # lambda = scale * n_frames


@dataclass(frozen=True)
class AffineMap:
    """12 -> 12 channel map applied per frame as y = weights @ x + bias."""

    weights: np.ndarray  # (12, 12)
    bias: np.ndarray     # (12,)
    src_speaker: str = ""
    tgt_speaker: str = ""

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.shape != (12, 12) or b.shape != (12,):
            raise DataError(f"bad affine shapes: {w.shape}, {b.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise DataError("affine map contains NaN or Inf")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    def to_bytes(self) -> bytes:
        return affine_map_to_bytes(self.weights, self.bias,
                                   self.src_speaker, self.tgt_speaker)

    @classmethod
    def from_bytes(cls, data: bytes) -> "AffineMap":
        w, b, src, tgt = affine_map_from_bytes(data)
        return cls(w, b, src, tgt)


def _as_frames(trace) -> np.ndarray:
    """EmaTrace or array -> (T, 12) float64 frame matrix."""
    values = trace.values if isinstance(trace, EmaTrace) else np.asarray(trace)
    if values.ndim != 2:
        raise DataError("expected a 2-D EMA array")
    if values.shape[0] == 12 and values.shape[1] != 12:
        values = values.T
    if values.shape[1] != 12:
        raise DataError(f"expected 12 EMA channels, got shape {values.shape}")
    return np.asarray(values, dtype=np.float64)


def fit_affine(src, tgt, lam: float | None = None,
               src_speaker: str = "", tgt_speaker: str = "") -> AffineMap:
    """Ridge least squares from time-aligned source frames to target frames.

    Frame pairing is the caller's responsibility (aligned recordings or an
    external index manifest).
    """
    x = _as_frames(src)
    y = _as_frames(tgt)
    if x.shape[0] != y.shape[0]:
        raise DataError(f"frame counts differ: {x.shape[0]} vs {y.shape[0]}")
    if lam is None:
        lam = DEFAULT_RIDGE_SCALE * x.shape[0]
    if lam == 0.0 and x.shape[0] < 13:
        raise DataError("need at least 13 aligned frames for an exact affine fit")
    weights, bias = _ridge_fit(x, y, lam)
    # stored row-major as y = W x + b
    return AffineMap(weights.T, bias, src_speaker, tgt_speaker)


def apply_affine(affine: AffineMap, trace: EmaTrace) -> EmaTrace:
    """Map every frame of a 12-channel trace into the target speaker space."""
    if not isinstance(trace, EmaTrace):
        raise DataError("apply_affine expects an EmaTrace")
    out = affine.weights @ trace.values.astype(np.float64) + affine.bias[:, None]
    return EmaTrace(out.astype(np.float32), rate=trace.rate)


def coefficient_map(affine: AffineMap) -> np.ndarray:
    """6x6 articulator coupling map: mean |weight| of each 2x2 (x, y) block.

    Row i = output articulator, column j = input articulator, ordered
    UL, LL, LI, TT, TB, TD.
    """
    n = len(ARTICULATORS)
    blocks = np.abs(affine.weights).reshape(n, 2, n, 2)
    return blocks.mean(axis=(1, 3))
