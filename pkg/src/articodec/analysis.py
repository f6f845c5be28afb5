"""Acoustics-to-articulation inversion via frozen speech features + a linear head."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .errors import DataError, MissingAssetError
from .formats import linear_map_from_bytes, linear_map_to_bytes
from .signal import lowpass
from .types import AUDIO_RATE, FRAME_RATE, EmaTrace, Waveform

DEFAULT_RIDGE_SCALE = 1e-3  # lambda = scale * n_frames


class SpeechEncoder(Protocol):
    """Frozen feature extractor producing 50 Hz frame features per layer."""

    encoder_id: str
    dim: int
    n_layers: int
    frame_rate: int

    def extract(self, wave: Waveform, layers: Sequence[int]) -> np.ndarray:
        """Return a (len(layers), T, dim) stack for a 16 kHz waveform."""
        ...


@dataclass(frozen=True)
class SslFeatureStack:
    layers: np.ndarray          # (L, T, D)
    layer_ids: tuple
    rate: int
    encoder_id: str

    def __post_init__(self):
        arr = np.asarray(self.layers)
        if arr.ndim != 3:
            raise DataError(f"feature stack must be (L, T, D), got {arr.shape}")
        if arr.shape[0] != len(self.layer_ids):
            raise DataError("layer count does not match layer_ids")
        if not np.all(np.isfinite(arr)):
            raise DataError("feature stack contains NaN or Inf")
        object.__setattr__(self, "layers", arr)
        object.__setattr__(self, "layer_ids", tuple(self.layer_ids))

    def layer(self, layer_id: int) -> np.ndarray:
        return self.layers[self.layer_ids.index(layer_id)]


@dataclass(frozen=True)
class LinearMap:
    """Fitted features -> EMA head, applied as ``features @ weights + bias``."""

    weights: np.ndarray  # (D, 12)
    bias: np.ndarray     # (12,)
    source_layer: int
    encoder_id: str

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or w.shape[1] != 12 or b.shape != (12,):
            raise DataError(f"bad linear map shapes: {w.shape}, {b.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise DataError("linear map contains NaN or Inf")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    def to_bytes(self) -> bytes:
        return linear_map_to_bytes(self.weights, self.bias,
                                   self.source_layer, self.encoder_id)

    @classmethod
    def from_bytes(cls, data: bytes) -> "LinearMap":
        w, b, layer, encoder_id = linear_map_from_bytes(data)
        return cls(w, b, layer, encoder_id)


@dataclass
class ProbeReport:
    per_channel_pcc: np.ndarray
    mean_pcc: float
    ci95: float
    layer: int
    fold_scores: list = field(default_factory=list)


def extract_ssl_features(wave: Waveform, encoder: SpeechEncoder,
                         layers: Sequence[int]) -> SslFeatureStack:
    """Run the frozen encoder; deterministic for a fixed wave + encoder."""
    if wave.sample_rate != AUDIO_RATE:
        raise DataError(f"encoder expects {AUDIO_RATE} Hz input, got {wave.sample_rate}")
    layers = tuple(layers)
    for layer in layers:
        if not 0 <= layer < encoder.n_layers:
            raise DataError(f"layer {layer} out of range [0, {encoder.n_layers})")
    stack = encoder.extract(wave, layers)
    return SslFeatureStack(stack, layers, encoder.frame_rate, encoder.encoder_id)


def _ridge_fit(x: np.ndarray, y: np.ndarray, lam: float):
    """Centered ridge least squares; returns (weights, bias)."""
    x_mean = x.mean(axis=0)
    y_mean = y.mean(axis=0)
    xc = x - x_mean
    yc = y - y_mean
    gram = xc.T @ xc
    if lam > 0.0:
        gram = gram + lam * np.eye(x.shape[1])
    else:
        rank = np.linalg.matrix_rank(gram)
        if rank < x.shape[1]:
            raise DataError(
                f"design matrix is rank-deficient ({rank} < {x.shape[1]}); "
                "use a ridge term lam > 0"
            )
    weights = np.linalg.solve(gram, xc.T @ yc)
    bias = y_mean - x_mean @ weights
    return weights, bias


def fit_linear_aai(features: np.ndarray, ema_targets: np.ndarray,
                   lam: float | None = None, source_layer: int = -1,
                   encoder_id: str = "unknown") -> LinearMap:
    """Ridge least squares from (T, D) features to (T, 12) EMA targets.

    ``lam=None`` uses the default ``1e-3 * T``; pass 0 for exact OLS (errors
    on rank deficiency).
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(ema_targets, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2:
        raise DataError("features and targets must be 2-D")
    if x.shape[0] != y.shape[0]:
        raise DataError(f"frame counts differ: {x.shape[0]} vs {y.shape[0]}")
    if y.shape[1] != 12:
        raise DataError(f"expected 12 target channels, got {y.shape[1]}")
    if x.shape[0] <= x.shape[1]:
        warnings.warn(
            f"only {x.shape[0]} frames for {x.shape[1]} feature dims; "
            "fit may be unstable"
        )
    if lam is None:
        lam = DEFAULT_RIDGE_SCALE * x.shape[0]
    weights, bias = _ridge_fit(x, y, lam)
    return LinearMap(weights, bias, source_layer, encoder_id)


def predict_affine(linear_map: LinearMap, features: np.ndarray) -> np.ndarray:
    """Raw affine prediction (T, 12), before any smoothing."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != linear_map.weights.shape[0]:
        raise DataError(
            f"feature dim {x.shape} does not match map dim "
            f"{linear_map.weights.shape[0]}"
        )
    return x @ linear_map.weights + linear_map.bias


def predict_ema(linear_map: LinearMap, features: np.ndarray) -> EmaTrace:
    """Affine prediction followed by 10 Hz zero-phase smoothing."""
    pred = predict_affine(linear_map, features)
    smoothed = lowpass(pred.T, rate=FRAME_RATE)
    return EmaTrace(smoothed.astype(np.float32), rate=FRAME_RATE)


def _per_channel_pcc(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Column-wise Pearson correlation; constant columns score 0 with a warning."""
    pcc = np.zeros(target.shape[1])
    for c in range(target.shape[1]):
        p, t = pred[:, c], target[:, c]
        sp, st = p.std(), t.std()
        if sp == 0.0 or st == 0.0:
            warnings.warn(f"constant channel {c} in probe scoring; PCC set to 0")
            continue
        pcc[c] = ((p - p.mean()) * (t - t.mean())).mean() / (sp * st)
    return pcc


def _cv_mean_pcc(x_utts: list, y_utts: list, folds_idx: list, lam: float | None):
    """Mean per-channel PCC over folds; returns (per_channel, fold_means)."""
    fold_means = []
    per_channel = []
    for test_ids in folds_idx:
        test_set = set(test_ids)
        x_train = np.concatenate(
            [x for i, x in enumerate(x_utts) if i not in test_set])
        y_train = np.concatenate(
            [y for i, y in enumerate(y_utts) if i not in test_set])
        fit_lam = DEFAULT_RIDGE_SCALE * x_train.shape[0] if lam is None else lam
        w, b = _ridge_fit(x_train, y_train, fit_lam)
        x_test = np.concatenate([x_utts[i] for i in test_ids])
        y_test = np.concatenate([y_utts[i] for i in test_ids])
        pcc = _per_channel_pcc(x_test @ w + b, y_test)
        per_channel.append(pcc)
        fold_means.append(pcc.mean())
    per_channel = np.mean(per_channel, axis=0)
    return per_channel, fold_means


def _ci95(fold_means) -> float:
    if len(fold_means) < 2:
        return 0.0
    return 1.96 * float(np.std(fold_means, ddof=1)) / np.sqrt(len(fold_means))


def select_layer_cv(stacks: Sequence[SslFeatureStack], ema: Sequence[np.ndarray],
                    folds: int = 5, holdout_utts: int = 100,
                    lam: float | None = None, seed: int = 0):
    """Cross-validated layer selection.

    Each fold holds out ``holdout_utts`` random utterances, fits the linear
    head per layer on the rest and scores held-out mean PCC. Returns
    ``(best_layer, reports)``; ties break to the lowest layer index.
    """
    if len(stacks) != len(ema):
        raise DataError("stacks and targets must pair up per utterance")
    n = len(stacks)
    if n < folds * holdout_utts:
        raise DataError(
            f"need at least folds*holdout = {folds * holdout_utts} utterances, got {n}"
        )
    layer_ids = stacks[0].layer_ids
    y_utts = [np.asarray(y, dtype=np.float64) for y in ema]
    for s, y in zip(stacks, y_utts):
        if s.layer_ids != layer_ids:
            raise DataError("all stacks must share the same layer set")
        if y.ndim != 2 or y.shape[1] != 12:
            raise DataError("EMA targets must be (T, 12) per utterance")
        if s.layers.shape[1] != y.shape[0]:
            raise DataError("feature/target frame counts differ within an utterance")

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    folds_idx = [order[i * holdout_utts:(i + 1) * holdout_utts] for i in range(folds)]

    reports = []
    for li, layer_id in enumerate(layer_ids):
        x_utts = [s.layers[li].astype(np.float64) for s in stacks]
        per_channel, fold_means = _cv_mean_pcc(x_utts, y_utts, folds_idx, lam)
        reports.append(ProbeReport(
            per_channel_pcc=per_channel,
            mean_pcc=float(np.mean(fold_means)),
            ci95=_ci95(fold_means),
            layer=layer_id,
            fold_scores=list(map(float, fold_means)),
        ))
    best = int(np.argmax([r.mean_pcc for r in reports]))
    return layer_ids[best], reports


def linear_probe(x: np.ndarray, y: np.ndarray, folds: int = 5,
                 lam: float | None = None, seed: int = 0) -> ProbeReport:
    """Generic k-fold linear probe of (T, Dx) features onto (T, Dy) targets."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] != y.shape[0]:
        raise DataError(f"frame counts differ: {x.shape[0]} vs {y.shape[0]}")
    if folds < 2 or x.shape[0] < 2 * folds:
        raise DataError("not enough frames for the requested fold count")
    rng = np.random.default_rng(seed)
    order = rng.permutation(x.shape[0])
    blocks = np.array_split(order, folds)
    fold_means = []
    per_channel = []
    for test_rows in blocks:
        mask = np.ones(x.shape[0], dtype=bool)
        mask[test_rows] = False
        fit_lam = DEFAULT_RIDGE_SCALE * mask.sum() if lam is None else lam
        w = _ridge_fit(x[mask], y[mask], fit_lam)
        pcc = _per_channel_pcc(x[test_rows] @ w[0] + w[1], y[test_rows])
        per_channel.append(pcc)
        fold_means.append(pcc.mean())
    return ProbeReport(
        per_channel_pcc=np.mean(per_channel, axis=0),
        mean_pcc=float(np.mean(fold_means)),
        ci95=_ci95(fold_means),
        layer=-1,
        fold_scores=list(map(float, fold_means)),
    )


class MockSpeechEncoder:
    """Deterministic stand-in encoder: fixed random projections of frame stats.

    Lets the whole pipeline run without model downloads while behaving like a
    real frozen feature extractor (content-dependent, bit-stable).
    """

    frame_rate = FRAME_RATE

    def __init__(self, encoder_id: str = "mock-ssl", dim: int = 32, n_layers: int = 12):
        self.encoder_id = encoder_id
        self.dim = dim
        self.n_layers = n_layers
        self._projections = {}

    def _projection(self, layer: int) -> np.ndarray:
        if layer not in self._projections:
            seed = abs(hash((self.encoder_id, layer))) % (2 ** 32)
            rng = np.random.default_rng(seed)
            self._projections[layer] = rng.standard_normal((16, self.dim)) / 4.0
        return self._projections[layer]

    @staticmethod
    def _frame_stats(samples: np.ndarray) -> np.ndarray:
        hop = AUDIO_RATE // FRAME_RATE
        n = len(samples) // hop
        frames = samples[: n * hop].reshape(n, hop)
        spectra = np.abs(np.fft.rfft(frames, axis=1))
        bands = np.stack(
            [band.mean(axis=1) for band in np.array_split(spectra, 12, axis=1)], axis=1)
        zcr = np.mean(np.abs(np.diff(np.signbit(frames), axis=1)), axis=1)
        stats = np.column_stack([
            frames.mean(axis=1),
            frames.std(axis=1),
            np.abs(frames).mean(axis=1),
            zcr,
            np.log1p(bands),
        ])
        return stats  # (n, 16)

    def extract(self, wave: Waveform, layers: Sequence[int]) -> np.ndarray:
        stats = self._frame_stats(wave.samples)
        out = [np.tanh(stats @ self._projection(layer)) for layer in layers]
        return np.stack(out, axis=0)


class PlantedEncoder:
    """Encoder returning a pre-arranged feature stack, for tests."""

    frame_rate = FRAME_RATE

    def __init__(self, stack: np.ndarray, encoder_id: str = "planted"):
        self.stack = np.asarray(stack)
        self.encoder_id = encoder_id
        self.n_layers = self.stack.shape[0]
        self.dim = self.stack.shape[2]

    def extract(self, wave: Waveform, layers: Sequence[int]) -> np.ndarray:
        return self.stack[list(layers)]


class WavlmEncoder:
    """Adapter for a locally installed WavLM-style transformer encoder.

    Loads lazily through ``transformers``; without the model asset on disk it
    raises with download instructions instead of fetching anything.
    """

    frame_rate = FRAME_RATE

    def __init__(self, model_path: str = "microsoft/wavlm-large"):
        self.encoder_id = f"wavlm:{model_path}"
        self.model_path = model_path
        self._model = None
        self.dim = 1024
        self.n_layers = 25  # CNN output + 24 transformer layers

    def _load(self):
        if self._model is not None:
            return self._model
        try:
            import torch  # noqa: F401
            from transformers import WavLMModel
        except ImportError as exc:
            raise MissingAssetError(
                "transformers is required for the WavLM encoder; "
                "pip install transformers"
            ) from exc
        try:
            model = WavLMModel.from_pretrained(self.model_path, local_files_only=True)
        except Exception as exc:
            raise MissingAssetError(
                f"WavLM weights not found at {self.model_path!r}; download them "
                "on a networked machine (huggingface-cli download "
                "microsoft/wavlm-large) and point model_path at the local copy"
            ) from exc
        model.eval()
        for p in model.parameters():
            p.requires_grad_(False)
        self._model = model
        return model

    def extract(self, wave: Waveform, layers: Sequence[int]) -> np.ndarray:
        import torch

        model = self._load()
        x = torch.from_numpy(wave.samples).float()[None, :]
        with torch.no_grad():
            out = model(x, output_hidden_states=True)
        stack = torch.stack([out.hidden_states[i] for i in layers], dim=0)
        return stack[:, 0].numpy().astype(np.float64)
