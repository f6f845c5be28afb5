"""Dataset manifests and corpus ingestion."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .audio_io import load_wav
from .errors import DataError


@dataclass
class ManifestRecord:
    utterance_id: str
    audio_path: str
    speaker_id: str
    feature_path: str | None = None
    transcript: str | None = None


@dataclass
class Manifest:
    records: list = field(default_factory=list)

    def validate(self, check_files: bool = True) -> None:
        seen: dict = {}
        for rec in self.records:
            if rec.utterance_id in seen:
                raise DataError(
                    f"duplicate utterance_id {rec.utterance_id!r}: "
                    f"{seen[rec.utterance_id]} and {rec.audio_path}")
            seen[rec.utterance_id] = rec.audio_path
            if check_files:
                if not Path(rec.audio_path).exists():
                    raise DataError(f"missing audio file {rec.audio_path}")
                if rec.feature_path and not Path(rec.feature_path).exists():
                    raise DataError(f"missing feature file {rec.feature_path}")

    def write_jsonl(self, path) -> None:
        lines = []
        for rec in self.records:
            entry = {k: v for k, v in asdict(rec).items() if v is not None}
            lines.append(json.dumps(entry, sort_keys=True))
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))

    @classmethod
    def read_jsonl(cls, path) -> "Manifest":
        records = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"manifest line {lineno}: {exc}") from exc
            try:
                records.append(ManifestRecord(**entry))
            except TypeError as exc:
                raise DataError(f"manifest line {lineno}: {exc}") from exc
        return cls(records)


def _speaker_from_flat(stem: str) -> str:
    return stem.split("_")[0] if "_" in stem else stem


def ingest(corpus_dir, layout: str = "flat") -> tuple[Manifest, list]:
    """Scan a corpus directory into a validated manifest.

    Per-file decode failures are collected as warnings, not fatal; zero valid
    files is an error.
    """
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise DataError(f"not a directory: {corpus_dir}")
    if layout not in ("flat", "librittsr", "vctk"):
        raise DataError(f"unknown layout {layout!r}")
    wavs = sorted(corpus_dir.rglob("*.wav"))
    records, warnings_list = [], []
    for wav in wavs:
        stem = wav.stem
        if layout == "flat":
            speaker = _speaker_from_flat(stem)
        elif layout == "librittsr":
            # <root>/.../<speaker>/<chapter>/<speaker>_<chapter>_....wav
            speaker = wav.parent.parent.name if wav.parent.parent != corpus_dir \
                else stem.split("_")[0]
        else:  # vctk: <root>/.../<speaker>/<speaker>_<utt>.wav
            speaker = wav.parent.name if wav.parent != corpus_dir \
                else stem.split("_")[0]
        try:
            wave = load_wav(wav)
            if len(wave) == 0:
                raise DataError("empty audio")
        except Exception as exc:
            warnings_list.append(f"{wav}: {exc}")
            continue
        records.append(ManifestRecord(
            utterance_id=stem, audio_path=str(wav), speaker_id=speaker))
    if not records:
        raise DataError(f"no valid audio files under {corpus_dir}")
    manifest = Manifest(records)
    manifest.validate(check_files=False)
    return manifest, warnings_list
