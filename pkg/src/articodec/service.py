"""Local HTTP service exposing encode / synthesize / convert / speakers."""
from __future__ import annotations

import base64
import json
import os
import tempfile
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .audio_io import wav_bytes_to_waveform, waveform_to_wav_bytes
from .control import convert_voice, interpolate, rescale_pitch, shift_channel
from .errors import CodecError, DataError
from .formats import features_from_bytes, features_to_bytes
from .types import ArticulatoryFeatures, SpeakerEmbedding

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8572


class TemplateStore:
    """Speaker templates persisted as JSON with atomic write-temp-rename."""

    def __init__(self, path):
        self.path = Path(path)
        self._entries = {}
        if self.path.exists():
            self._entries = json.loads(self.path.read_text())

    def _persist(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(self._entries, fh)
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def __contains__(self, speaker_id: str) -> bool:
        return speaker_id in self._entries

    def register(self, speaker_id: str, embedding: SpeakerEmbedding,
                 pitch_mean: float, pitch_std: float) -> None:
        if speaker_id in self._entries:
            raise KeyError(speaker_id)
        self._entries[speaker_id] = {
            "embedding": [float(v) for v in embedding.vector],
            "pitch_mean": pitch_mean,
            "pitch_std": pitch_std,
        }
        self._persist()

    def get(self, speaker_id: str):
        entry = self._entries[speaker_id]
        return (SpeakerEmbedding(np.array(entry["embedding"], dtype=np.float32)),
                entry["pitch_mean"], entry["pitch_std"])

    def list(self) -> list:
        return [
            {"speaker_id": sid, "pitch_mean": e["pitch_mean"],
             "pitch_std": e["pitch_std"]}
            for sid, e in sorted(self._entries.items())
        ]


class EditSpec(BaseModel):
    op: str
    params: dict = Field(default_factory=dict)


class EncodeRequest(BaseModel):
    audio: str  # base64 WAV
    train_mode: bool = False


class SynthRequest(BaseModel):
    features: str  # base64 feature container
    speaker_embedding: list[float]
    edits: list[EditSpec] = Field(default_factory=list)


class ConvertRequest(BaseModel):
    audio: str
    target_speaker_id: str | None = None
    target_embedding: list[float] | None = None
    target_pitch_mean: float | None = None
    target_pitch_std: float | None = None
    p_rescale: bool = True


class RegisterRequest(BaseModel):
    speaker_id: str
    clips: list[str]  # base64 WAVs


def _b64_decode(data: str, what: str) -> bytes:
    try:
        return base64.b64decode(data, validate=True)
    except Exception:
        raise HTTPException(status_code=400, detail=f"invalid base64 {what}")


def _apply_edit(features: ArticulatoryFeatures, edit: EditSpec) -> ArticulatoryFeatures:
    params = edit.params
    try:
        if edit.op == "interpolate":
            other = features_from_bytes(
                base64.b64decode(params["features_b"], validate=True))
            return interpolate(features, other, float(params["alpha"]),
                               params["channels"])
        if edit.op == "shift":
            return shift_channel(features, params["channel"], float(params["ms"]))
        if edit.op == "rescale_pitch":
            source = rescale_pitch(features.source, float(params["mean"]),
                                   float(params["std"]))
            return ArticulatoryFeatures(features.ema, source)
        raise HTTPException(status_code=422, detail=f"unknown edit op {edit.op!r}")
    except HTTPException:
        raise
    except (CodecError, KeyError, ValueError, TypeError) as exc:
        raise HTTPException(status_code=422, detail=f"invalid edit: {exc}")


def create_app(stack, template_store: TemplateStore | None = None) -> FastAPI:
    """Build the service around an immutable stack snapshot (or None)."""
    app = FastAPI(title="articodec", version="0.1.0")
    templates = template_store or TemplateStore(
        Path(tempfile.gettempdir()) / "articodec-templates.json")

    def require_stack():
        if stack is None:
            raise HTTPException(status_code=503, detail="stack not loaded")
        return stack

    def decode_audio(b64: str):
        raw = _b64_decode(b64, "audio")
        try:
            wave = wav_bytes_to_waveform(raw)
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if len(wave) == 0:
            raise HTTPException(status_code=400, detail="empty audio")
        limit = getattr(stack, "max_clip_seconds", 60.0) if stack else 60.0
        if wave.duration > limit:
            raise HTTPException(
                status_code=413,
                detail=f"clip of {wave.duration:.1f} s exceeds the "
                       f"{limit:.0f} s limit")
        return wave

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "stack_loaded": stack is not None}

    @app.post("/v1/encode")
    def encode(req: EncodeRequest):
        s = require_stack()
        wave = decode_audio(req.audio)
        try:
            features, spk = s.encode(wave, train_mode=req.train_mode)
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "features": base64.b64encode(features_to_bytes(features)).decode(),
            "periodicity": [float(v) for v in features.source.periodicity],
            "speaker_embedding": [float(v) for v in spk.vector],
        }

    @app.post("/v1/synthesize")
    def synthesize(req: SynthRequest):
        s = require_stack()
        raw = _b64_decode(req.features, "features")
        try:
            features = features_from_bytes(raw)
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            spk = SpeakerEmbedding(np.array(req.speaker_embedding,
                                            dtype=np.float32))
        except DataError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        for edit in req.edits:
            features = _apply_edit(features, edit)
        wave = s.synthesize(features, spk)
        return {
            "audio": base64.b64encode(waveform_to_wav_bytes(wave)).decode(),
            "features": base64.b64encode(features_to_bytes(features)).decode(),
        }

    @app.post("/v1/convert")
    def convert(req: ConvertRequest):
        s = require_stack()
        wave = decode_audio(req.audio)
        if req.target_speaker_id is not None:
            if req.target_speaker_id not in templates:
                raise HTTPException(
                    status_code=404,
                    detail=f"unknown speaker {req.target_speaker_id!r}")
            spk, pitch_mean, pitch_std = templates.get(req.target_speaker_id)
        elif req.target_embedding is not None:
            try:
                spk = SpeakerEmbedding(np.array(req.target_embedding,
                                                dtype=np.float32))
            except DataError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            pitch_mean = req.target_pitch_mean
            pitch_std = req.target_pitch_std
        else:
            raise HTTPException(
                status_code=422,
                detail="need target_speaker_id or target_embedding")
        if req.target_pitch_mean is not None:
            pitch_mean = req.target_pitch_mean
        if req.target_pitch_std is not None:
            pitch_std = req.target_pitch_std
        if req.p_rescale and (pitch_mean is None or pitch_std is None):
            raise HTTPException(
                status_code=422,
                detail="p_rescale requires target pitch statistics")
        try:
            out = convert_voice(wave, spk, (pitch_mean or 0.0, pitch_std or 0.0),
                                s, p_rescale=req.p_rescale)
        except DataError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"audio": base64.b64encode(waveform_to_wav_bytes(out)).decode()}

    @app.get("/v1/speakers")
    def list_speakers():
        return {"speakers": templates.list()}

    @app.post("/v1/speakers")
    def register_speaker(req: RegisterRequest):
        s = require_stack()
        if not req.clips:
            raise HTTPException(status_code=400, detail="need at least one clip")
        if req.speaker_id in templates:
            raise HTTPException(
                status_code=409,
                detail=f"speaker {req.speaker_id!r} already registered")
        clips = [decode_audio(c) for c in req.clips]
        try:
            embedding = s.make_template(clips)
            pitch_mean, pitch_std = s.pitch_stats(clips)
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        templates.register(req.speaker_id, embedding, pitch_mean, pitch_std)
        return {"speaker_id": req.speaker_id, "pitch_mean": pitch_mean,
                "pitch_std": pitch_std}

    return app


def serve(stack, template_store=None, host: str = DEFAULT_HOST,
          port: int = DEFAULT_PORT) -> None:
    import uvicorn

    app = create_app(stack, template_store)
    uvicorn.run(app, host=host, port=port, log_level="info")
