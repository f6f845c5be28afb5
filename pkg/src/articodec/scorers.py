"""Out-of-process ASR / quality-score adapters with a content-hash cache.

Adapters are optional: when one is not configured the metric is reported as
skipped, never as a failure.
"""
from __future__ import annotations

import hashlib
import json
import os
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .audio_io import waveform_to_wav_bytes
from .types import Waveform

DEFAULT_TIMEOUT_S = 300.0


def cache_root() -> Path:
    home = os.environ.get("ARTICODEC_HOME")
    base = Path(home) if home else Path.home() / ".articodec"
    return base / "cache"


class Scorer(Protocol):
    scorer_id: str

    def score(self, wav_path: str) -> str:
        ...


@dataclass
class SubprocessScorer:
    """Runs ``command <wav_path>`` and returns its stdout (stripped).

    Works for ASR adapters (stdout = transcript) and quality predictors
    (stdout = a number).
    """

    command: list
    scorer_id: str = ""
    timeout_s: float = DEFAULT_TIMEOUT_S

    def __post_init__(self):
        if not self.scorer_id:
            self.scorer_id = "cmd:" + " ".join(self.command)

    def score(self, wav_path: str) -> str:
        out = subprocess.run(
            self.command + [wav_path], capture_output=True, text=True,
            timeout=self.timeout_s, check=True)
        return out.stdout.strip()


class ScorerCache:
    """Single-writer keyed store with atomic writes."""

    def __init__(self, root: Path | None = None):
        self.root = Path(root) if root is not None else cache_root()

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str):
        path = self._path(key)
        if path.exists():
            return json.loads(path.read_text())["result"]
        return None

    def put(self, key: str, result) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = tempfile.NamedTemporaryFile(
            "w", dir=self.root, suffix=".tmp", delete=False)
        try:
            json.dump({"result": result}, tmp)
            tmp.close()
            os.replace(tmp.name, self._path(key))
        except BaseException:
            os.unlink(tmp.name)
            raise


def _content_key(scorer_id: str, wav_bytes: bytes) -> str:
    digest = hashlib.sha256()
    digest.update(scorer_id.encode("utf-8"))
    digest.update(wav_bytes)
    return digest.hexdigest()


def score_external(waves, scorer: Scorer | None,
                   cache: ScorerCache | None = None) -> list:
    """Score each wave with the adapter, caching by content hash.

    Returns one record per wave: {"result": ...} on success, {"error": ...}
    on a per-item failure, or {"skipped": True} for every wave when no
    adapter is configured.
    """
    waves = list(waves)
    if scorer is None:
        return [{"skipped": True} for _ in waves]
    cache = cache or ScorerCache()
    results = []
    for wave in waves:
        wav_bytes = waveform_to_wav_bytes(wave) if isinstance(wave, Waveform) \
            else Path(wave).read_bytes()
        key = _content_key(scorer.scorer_id, wav_bytes)
        cached = cache.get(key)
        if cached is not None:
            results.append({"result": cached, "cached": True})
            continue
        try:
            with tempfile.NamedTemporaryFile(suffix=".wav", delete=False) as fh:
                fh.write(wav_bytes)
                tmp_path = fh.name
            try:
                result = scorer.score(tmp_path)
            finally:
                os.unlink(tmp_path)
        except subprocess.TimeoutExpired:
            results.append({"error": "timeout"})
            continue
        except Exception as exc:
            results.append({"error": str(exc)})
            continue
        cache.put(key, result)
        results.append({"result": result, "cached": False})
    return results
