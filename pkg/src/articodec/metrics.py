"""Evaluation metrics: correlation, coding-recoding similarity, few-shot
speaker identification, WER/CER and embedding export."""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .types import ArticulatoryFeatures, SpeakerEmbedding


def pcc(x, y) -> float:
    """Pearson correlation coefficient; constant inputs score 0 with a warning."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise DataError("pcc expects 1-D series")
    if len(x) != len(y):
        raise DataError(f"series lengths differ: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise DataError("pcc needs at least 2 points")
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        warnings.warn("constant series in pcc; returning 0")
        return 0.0
    r = float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))
    return min(1.0, max(-1.0, r))


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DataError("zero-norm embedding in cosine similarity")
    return float(a @ b / (na * nb))


@dataclass
class CodingRecodingReport:
    articulation: float
    pitch: float
    loudness: float
    speaker: float

    def as_dict(self) -> dict:
        return {"articulation": self.articulation, "pitch": self.pitch,
                "loudness": self.loudness, "speaker": self.speaker}


def coding_recoding(orig: ArticulatoryFeatures, orig_spk: SpeakerEmbedding,
                    recoded: ArticulatoryFeatures,
                    recoded_spk: SpeakerEmbedding) -> CodingRecodingReport:
    """Similarity between a clip's coding and the re-encoding of its synthesis.

    Articulation is the mean of the 12 per-channel PCCs; pitch correlates
    only frames voiced in both codings (comparing unvoiced zeros would
    inflate the score); speaker similarity is cosine.
    """
    t = min(orig.n_frames, recoded.n_frames)
    if t == 0:
        raise DataError("no frames to compare")
    if orig.n_frames != recoded.n_frames:
        warnings.warn(
            f"frame counts differ ({orig.n_frames} vs {recoded.n_frames}); "
            f"truncating to {t}")
    ema_a = orig.ema.values[:, :t]
    ema_b = recoded.ema.values[:, :t]
    channel_pccs = [pcc(ema_a[c], ema_b[c]) for c in range(12)]

    f0_a = orig.source.f0[:t]
    f0_b = recoded.source.f0[:t]
    both_voiced = (f0_a > 0) & (f0_b > 0)
    if both_voiced.sum() >= 2:
        pitch = pcc(f0_a[both_voiced], f0_b[both_voiced])
    else:
        warnings.warn("fewer than 2 frames voiced in both codings; pitch PCC 0")
        pitch = 0.0

    loudness = pcc(orig.source.loudness[:t], recoded.source.loudness[:t])
    speaker = cosine_similarity(orig_spk.vector, recoded_spk.vector)
    return CodingRecodingReport(
        articulation=float(np.mean(channel_pccs)), pitch=pitch,
        loudness=loudness, speaker=speaker)


def few_shot_sid(templates: dict, query: SpeakerEmbedding) -> str:
    """Nearest-template speaker id by cosine similarity.

    Ties break to the lexicographically smallest speaker id.
    """
    if not templates:
        raise DataError("need at least one template")
    best_id, best_score = None, -np.inf
    for speaker_id in sorted(templates):
        template = templates[speaker_id]
        vec = template.vector if isinstance(template, SpeakerEmbedding) else template
        score = cosine_similarity(vec, query.vector)
        if score > best_score:
            best_id, best_score = speaker_id, score
    return best_id


_PUNCT_RE = re.compile(r"[^\w\s']", flags=re.UNICODE)


def normalize_text(text: str) -> str:
    """Lowercase, strip punctuation except apostrophes, collapse whitespace."""
    text = text.lower()
    text = _PUNCT_RE.sub(" ", text)
    text = text.replace("_", " ")
    return " ".join(text.split())


def _edit_distance(ref, hyp) -> int:
    """Levenshtein distance with a two-row DP."""
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, start=1):
        curr = [i] + [0] * len(hyp)
        for j, h in enumerate(hyp, start=1):
            curr[j] = min(prev[j] + 1,          # deletion
                          curr[j - 1] + 1,      # insertion
                          prev[j - 1] + (r != h))  # substitution
        prev = curr
    return prev[-1]


def wer(ref, hyp) -> float:
    """(S + D + I) / N over tokens; inputs are pre-normalized token lists."""
    ref = list(ref)
    hyp = list(hyp)
    if not ref:
        raise DataError("empty reference")
    return _edit_distance(ref, hyp) / len(ref)


def cer(ref: str, hyp: str) -> float:
    """Character error rate over normalized text (spaces included)."""
    ref_chars = list(normalize_text(ref))
    hyp_chars = list(normalize_text(hyp))
    if not ref_chars:
        raise DataError("empty reference")
    return _edit_distance(ref_chars, hyp_chars) / len(ref_chars)


def wer_text(ref: str, hyp: str) -> float:
    return wer(normalize_text(ref).split(), normalize_text(hyp).split())


def export_embeddings(embeddings, labels, path) -> None:
    """Tabular export (id, label, 64 floats) for external projection tools.

    Floats print with 9 significant digits, enough to round trip float32
    exactly.
    """
    embeddings = list(embeddings)
    labels = list(labels)
    if len(embeddings) != len(labels):
        raise DataError(
            f"{len(embeddings)} embeddings but {len(labels)} labels")
    dim = 64
    header = "id,label," + ",".join(f"e{i:02d}" for i in range(dim))
    lines = [header]
    for i, (emb, label) in enumerate(zip(embeddings, labels)):
        vec = emb.vector if isinstance(emb, SpeakerEmbedding) else np.asarray(emb)
        values = ",".join(f"{float(v):.9g}" for v in vec)
        lines.append(f"{i},{label},{values}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_embeddings(path):
    """Inverse of export_embeddings: returns (embeddings, labels)."""
    lines = Path(path).read_text().strip().split("\n")
    embeddings, labels = [], []
    for line in lines[1:]:
        parts = line.split(",")
        labels.append(parts[1])
        embeddings.append(np.array([np.float32(v) for v in parts[2:]]))
    return embeddings, labels
