"""HTTP API over extraction, editing, and synthesis.

Sessions hold an editable emotion distribution per utterance and persist as
append-only edit logs, so a restarted server replays each log and lands on
the exact same distribution. Audio is exposed by resource id rather than
inline.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import uuid
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np

from . import hed as hed_mod
from . import pipeline
from .corpus import CorpusIndex, alignment_to_document, load_corpus
from .hed import EDEdit, HedError, HierarchicalED
from .intensity import load_intensity_model
from .tts import (AcousticModel, SynthesisRequest, load_tts_model)

log = logging.getLogger(__name__)

SERVICE_VERSION = "1"


@dataclass
class JobConfig:
    """Paths and knobs one run needs; see README for the key set."""

    corpus_root: str
    alignments_dir: str
    cache_dir: str
    checkpoints_dir: str
    sessions_dir: str
    manifest_csv: Optional[str] = None
    speaker_embeddings_dir: Optional[str] = None
    speaker_genders_csv: Optional[str] = None
    feature_providers: dict = field(default_factory=lambda: {
        "utterance": "functionals", "word": "functionals",
        "phoneme": "functionals"})
    external_embedding_dirs: dict = field(default_factory=dict)
    resample: bool = False
    seed: int = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "JobConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {k: doc[k] for k in cls.__dataclass_fields__ if k in doc}
        return cls(**known)

    def to_document(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def config_hash(self) -> str:
        blob = json.dumps(self.to_document(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def feature_sources(self) -> dict[str, pipeline.FeatureSource]:
        sources = {}
        for level in hed_mod.LEVELS:
            ext = self.external_embedding_dirs.get(level)
            sources[level] = pipeline.FeatureSource(
                provider=self.feature_providers.get(level, "functionals"),
                external_dir=Path(ext) if ext else None)
        return sources


def waveform_to_wav_bytes(audio: np.ndarray, sample_rate: int = 16_000) -> bytes:
    pcm = np.clip(np.asarray(audio, dtype=np.float64), -1.0, 1.0)
    pcm16 = (pcm * 32767.0).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(pcm16.tobytes())
    return buf.getvalue()


def wav_bytes_to_waveform(blob: bytes) -> np.ndarray:
    with wave.open(io.BytesIO(blob), "rb") as wf:
        frames = wf.readframes(wf.getnframes())
    return np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32767.0


@dataclass
class Session:
    session_id: str
    utterance_id: str
    base_hed: HierarchicalED
    edits: list[EDEdit] = field(default_factory=list)
    last_result_id: Optional[str] = None

    def current_hed(self) -> HierarchicalED:
        out = self.base_hed
        for edit in self.edits:
            out = hed_mod.apply_edit(out, edit)
        return out


class SessionStore:
    """Persist sessions as JSONL logs: one base record, then edits/undos.

    Sessions are single-writer: all mutations go through one lock so
    concurrent requests to the same session serialize.
    """

    def __init__(self, sessions_dir: Path):
        import threading

        self.dir = Path(sessions_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}
        self.write_lock = threading.Lock()
        self._replay_all()

    def _log_path(self, session_id: str) -> Path:
        return self.dir / f"{session_id}.jsonl"

    def _replay_all(self) -> None:
        for path in sorted(self.dir.glob("*.jsonl")):
            try:
                session = self._replay(path)
            except (HedError, json.JSONDecodeError, KeyError) as exc:
                log.warning("skipping session log %s: %s", path, exc)
                continue
            self.sessions[session.session_id] = session

    def _replay(self, path: Path) -> Session:
        session = None
        for line in path.read_text(encoding="utf-8").splitlines():
            rec = json.loads(line)
            if rec["type"] == "base":
                session = Session(
                    session_id=rec["session_id"],
                    utterance_id=rec["utterance_id"],
                    base_hed=hed_mod.deserialize_hed(json.dumps(rec["hed"])))
            elif rec["type"] == "edit":
                target = rec["edit"].get("target")
                if isinstance(target, list):
                    target = tuple(target)
                session.edits.append(EDEdit(
                    level=rec["edit"]["level"], emotion=rec["edit"]["emotion"],
                    mode=rec["edit"]["mode"], value=rec["edit"]["value"],
                    target=target))
            elif rec["type"] == "undo" and session.edits:
                session.edits.pop()
        if session is None:
            raise KeyError(f"{path} has no base record")
        return session

    def create(self, utterance_id: str, base_hed: HierarchicalED) -> Session:
        with self.write_lock:
            session = Session(session_id=uuid.uuid4().hex[:12],
                              utterance_id=utterance_id, base_hed=base_hed)
            self.sessions[session.session_id] = session
            with open(self._log_path(session.session_id), "w",
                      encoding="utf-8") as fh:
                fh.write(json.dumps({
                    "type": "base", "session_id": session.session_id,
                    "utterance_id": utterance_id,
                    "hed": json.loads(hed_mod.serialize_hed(base_hed))}) + "\n")
            return session

    def append_edit(self, session: Session, edit: EDEdit) -> None:
        with self.write_lock:
            session.edits.append(edit)
            target = (list(edit.target) if isinstance(edit.target, tuple)
                      else edit.target)
            with open(self._log_path(session.session_id), "a",
                      encoding="utf-8") as fh:
                fh.write(json.dumps({"type": "edit", "edit": {
                    "level": edit.level, "emotion": edit.emotion,
                    "mode": edit.mode, "value": edit.value,
                    "target": target}}) + "\n")

    def append_undo(self, session: Session) -> None:
        with self.write_lock:
            if not session.edits:
                return
            session.edits.pop()
            with open(self._log_path(session.session_id), "a",
                      encoding="utf-8") as fh:
                fh.write(json.dumps({"type": "undo"}) + "\n")


class ServiceState:
    """Everything the endpoints need, loaded once at startup."""

    def __init__(self, config: JobConfig):
        self.config = config
        self.corpus: CorpusIndex = load_corpus(
            config.corpus_root, manifest=config.manifest_csv,
            resample=config.resample)
        self.tracks = pipeline.load_alignments(
            config.alignments_dir, ids=sorted(self.corpus.records))
        self.sources = config.feature_sources()
        self.sessions = SessionStore(Path(config.sessions_dir))
        self.feature_cache: dict = {}
        self.audio_dir = Path(config.cache_dir) / "audio"
        self.audio_dir.mkdir(parents=True, exist_ok=True)
        self.hed_dir = Path(config.cache_dir) / "hed"

        ckpt_dir = Path(config.checkpoints_dir)
        self.intensity_models = {}
        for level in hed_mod.LEVELS:
            path = ckpt_dir / f"intensity_{level}.pt"
            if path.is_file():
                self.intensity_models[level] = load_intensity_model(path)
        self.tts_model: AcousticModel | None = None
        tts_path = ckpt_dir / "tts.pt"
        if tts_path.is_file():
            self.tts_model = load_tts_model(tts_path)

    def hed_for(self, utterance_id: str) -> HierarchicalED:
        cached = self.hed_dir / f"{utterance_id}.json"
        if cached.is_file():
            return hed_mod.load_hed(cached)
        if len(self.intensity_models) != len(hed_mod.LEVELS):
            raise KeyError(utterance_id)
        record = self.corpus[utterance_id]
        features = {level: pipeline.feature_track(record, self.sources[level],
                                                  self.feature_cache)
                    for level in hed_mod.LEVELS}
        providers = {level: self.sources[level].provider
                     for level in hed_mod.LEVELS}
        return hed_mod.extract_hed(self.intensity_models, utterance_id,
                                   self.tracks[utterance_id], features,
                                   providers=providers)

    def synthesize_session(self, session: Session, n_ode_steps: int,
                           seed: int) -> tuple[str, bytes]:
        record = self.corpus[session.utterance_id]
        track = self.tracks[session.utterance_id]
        current = session.current_hed()
        durations = [  # alignment-derived durations keep edits comparable
            max(1, round((p.end - p.start) * 16_000 / 256))
            for p in track.phones]
        request = SynthesisRequest(
            hed=current,
            speaker_embedding=pipeline.speaker_embedding_for(
                record,
                Path(self.config.speaker_embeddings_dir)
                if self.config.speaker_embeddings_dir else None,
                self.tts_model.config.speaker_dim),
            phonemes=[p.symbol for p in track.phones],
            durations=durations, n_ode_steps=n_ode_steps, seed=seed)
        _, audio = self.tts_model.synthesize(request)
        blob = waveform_to_wav_bytes(audio)
        audio_id = hashlib.sha256(blob).hexdigest()[:16]
        (self.audio_dir / f"{audio_id}.wav").write_bytes(blob)
        session.last_result_id = audio_id
        return audio_id, blob


from pydantic import BaseModel, field_validator, model_validator


class EditPayload(BaseModel):
    level: Literal["phoneme", "word", "utterance"]
    emotion: Literal["Angry", "Happy", "Sad", "Surprise"]
    mode: Literal["set", "scale"]
    value: float
    target: Union[int, tuple[int, int], None] = None

    @model_validator(mode="after")
    def _value_in_range(self):
        if self.mode == "set" and not (0.0 <= self.value <= 1.0):
            raise ValueError("set value must lie in [0, 1]")
        if self.mode == "scale" and self.value < 0.0:
            raise ValueError("scale value must be >= 0")
        return self


class SessionPayload(BaseModel):
    utterance_id: str


class SynthesizePayload(BaseModel):
    n_ode_steps: int = 10
    seed: int = 0

    @field_validator("n_ode_steps")
    @classmethod
    def _steps_positive(cls, v):
        if v < 1:
            raise ValueError("n_ode_steps must be >= 1")
        return v


def build_app(state: ServiceState):
    from fastapi import FastAPI, HTTPException, Response

    app = FastAPI(title="emotts service")

    def _session_or_404(session_id: str) -> Session:
        session = state.sessions.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id}")
        return session

    def _hed_payload(h: HierarchicalED) -> dict:
        return json.loads(hed_mod.serialize_hed(h))

    @app.get("/health")
    def health():
        return {"status": "ok", "version": SERVICE_VERSION,
                "utterances": len(state.corpus),
                "intensity_models": sorted(state.intensity_models),
                "tts_loaded": state.tts_model is not None}

    @app.get("/utterances")
    def utterances():
        return [{"id": rec.id, "speaker": rec.speaker_id,
                 "emotion": rec.emotion_label, "text": rec.text}
                for _, rec in sorted(state.corpus.records.items())]

    @app.get("/utterances/{utterance_id}/alignment")
    def alignment(utterance_id: str):
        if utterance_id not in state.tracks:
            raise HTTPException(status_code=404,
                                detail=f"unknown utterance {utterance_id}")
        return alignment_to_document(state.tracks[utterance_id])

    @app.get("/utterances/{utterance_id}/hed")
    def utterance_hed(utterance_id: str):
        if utterance_id not in state.corpus:
            raise HTTPException(status_code=404,
                                detail=f"unknown utterance {utterance_id}")
        try:
            return _hed_payload(state.hed_for(utterance_id))
        except KeyError:
            raise HTTPException(
                status_code=404,
                detail=f"no distribution available for {utterance_id}")

    @app.post("/sessions")
    def create_session(payload: SessionPayload):
        if payload.utterance_id not in state.corpus:
            raise HTTPException(status_code=404,
                                detail=f"unknown utterance {payload.utterance_id}")
        try:
            base = state.hed_for(payload.utterance_id)
        except KeyError:
            raise HTTPException(
                status_code=409,
                detail="no intensity models loaded and no cached distribution")
        session = state.sessions.create(payload.utterance_id, base)
        return {"session_id": session.session_id,
                "utterance_id": session.utterance_id,
                "hed": _hed_payload(base)}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = _session_or_404(session_id)
        return {"session_id": session.session_id,
                "utterance_id": session.utterance_id,
                "n_edits": len(session.edits),
                "hed": _hed_payload(session.current_hed())}

    @app.post("/sessions/{session_id}/edit")
    def edit_session(session_id: str, payload: EditPayload):
        session = _session_or_404(session_id)
        edit = EDEdit(level=payload.level, emotion=payload.emotion,
                      mode=payload.mode, value=payload.value,
                      target=payload.target)
        try:
            new_hed = hed_mod.apply_edit(session.current_hed(), edit)
        except HedError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        state.sessions.append_edit(session, edit)
        return {"hed": _hed_payload(new_hed), "n_edits": len(session.edits)}

    @app.post("/sessions/{session_id}/undo")
    def undo_session(session_id: str):
        session = _session_or_404(session_id)
        state.sessions.append_undo(session)
        return {"hed": _hed_payload(session.current_hed()),
                "n_edits": len(session.edits)}

    @app.post("/sessions/{session_id}/synthesize")
    def synthesize_session(session_id: str, payload: SynthesizePayload):
        session = _session_or_404(session_id)
        if state.tts_model is None:
            raise HTTPException(status_code=409,
                                detail="acoustic model not loaded")
        audio_id, blob = state.synthesize_session(
            session, payload.n_ode_steps, payload.seed)
        return {"audio_id": audio_id, "bytes": len(blob),
                "seed": payload.seed}

    @app.get("/audio/{audio_id}")
    def audio(audio_id: str):
        path = state.audio_dir / f"{audio_id}.wav"
        if not path.is_file():
            raise HTTPException(status_code=404,
                                detail=f"unknown audio {audio_id}")
        return Response(content=path.read_bytes(), media_type="audio/wav")

    return app
