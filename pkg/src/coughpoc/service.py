"""HTTP ingestion and report service.

Accepts multipart clip+sensor uploads, runs the analysis pipeline with the
loaded model, persists anonymized records (append-only log plus
content-addressed blobs), and exposes report retrieval, a submit action,
and a physician export listing.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, File, Form, UploadFile
from fastapi.responses import JSONResponse

from . import __version__
from .audio import load_wav_bytes
from .dsp import FrameSpec, log_mel_spectrogram
from .errors import AudioFormatError
from .features import SensorRecord
from .nn.model_io import load_model
from .pipeline import analyze_clip
from .store import BlobStore, RecordStore

DEFAULT_MAX_CLIP_SECONDS = 60.0

META_FIELDS = {"temp_c", "airflow_peak_lps", "airflow_volume_l", "region"}


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _new_record_id() -> str:
    return uuid.uuid4().hex  # random 128-bit identifier, hex-rendered


def _public_view(record: dict) -> dict:
    view = {k: v for k, v in record.items() if k != "dedupe_key"}
    return view


class ServiceState:
    """Shared state behind the endpoints: model, stores, an upload lock."""

    def __init__(self, store_dir, model_path=None,
                 max_clip_seconds: float = DEFAULT_MAX_CLIP_SECONDS):
        store_dir = Path(store_dir)
        self.blobs = BlobStore(store_dir / "blobs")
        self.records = RecordStore(store_dir / "records.jsonl")
        self.max_clip_seconds = max_clip_seconds
        self.model = None
        self.model_version = None
        if model_path is not None:
            self.model = load_model(model_path)
            digest = hashlib.sha256(Path(model_path).read_bytes()).hexdigest()
            self.model_version = digest[:12]
        # Serializes the dedupe-check-then-append step so concurrent
        # identical uploads cannot both create records.
        self.upload_lock = threading.Lock()


def create_app(store_dir, model_path=None,
               max_clip_seconds: float = DEFAULT_MAX_CLIP_SECONDS,
               frontend_dir=None) -> FastAPI:
    state = ServiceState(store_dir, model_path, max_clip_seconds)
    app = FastAPI(title="coughpoc service", version=__version__)
    app.state.service = state

    @app.post("/v1/clips")
    def upload_clip(audio: UploadFile = File(...), meta: str = Form("{}")):
        try:
            meta_dict = json.loads(meta)
            if not isinstance(meta_dict, dict):
                raise ValueError("meta must be a JSON object")
            unknown = set(meta_dict) - META_FIELDS
            if unknown:
                raise ValueError(f"unknown meta fields: {sorted(unknown)}")
            sensor = SensorRecord.from_dict(meta_dict)
        except (ValueError, TypeError) as exc:
            return JSONResponse(status_code=400, content={"detail": f"bad meta: {exc}"})

        payload = audio.file.read()
        try:
            clip = load_wav_bytes(payload)
        except AudioFormatError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        if clip.duration_s > state.max_clip_seconds:
            return JSONResponse(
                status_code=413,
                content={"detail": f"clip longer than {state.max_clip_seconds:g} s"},
            )
        if state.model is None:
            return JSONResponse(status_code=503, content={"detail": "model not loaded"})

        canonical_meta = json.dumps(
            {k: meta_dict.get(k) for k in sorted(META_FIELDS)}, sort_keys=True
        )
        clip_hash = hashlib.sha256(payload).hexdigest()
        dedupe_key = f"{clip_hash}:{hashlib.sha256(canonical_meta.encode()).hexdigest()}"

        with state.upload_lock:
            existing = state.records.find_duplicate(dedupe_key)
        if existing is not None:
            return _upload_response(existing)

        analysis = analyze_clip(clip, sensor, state.model)
        record = {
            "record_id": _new_record_id(),
            "created_at": _utc_now(),
            "clip_ref": state.blobs.put(payload),
            "sensor": sensor.to_dict(),
            "segments": analysis["segments"],
            "memberships": analysis["memberships"],
            "diagnosis": analysis["diagnosis"],
            "status": "draft",
            "consent_location": meta_dict.get("region"),
            "model_version": state.model_version,
            "dedupe_key": dedupe_key,
        }
        with state.upload_lock:
            racing = state.records.find_duplicate(dedupe_key)
            if racing is not None:
                return _upload_response(racing)
            state.records.append(record)
        return _upload_response(record)

    def _upload_response(record: dict):
        if not record["segments"]:
            return JSONResponse(
                status_code=422,
                content={"detail": "no cough detected", "record_id": record["record_id"]},
            )
        return {"record_id": record["record_id"], "report": _public_view(record)}

    @app.get("/v1/reports/{record_id}")
    def get_report(record_id: str):
        record = state.records.get(record_id)
        if record is None:
            return JSONResponse(status_code=404, content={"detail": "unknown record"})
        return _public_view(record)

    @app.post("/v1/reports/{record_id}/submit")
    def submit_report(record_id: str):
        record = state.records.get(record_id)
        if record is None:
            return JSONResponse(status_code=404, content={"detail": "unknown record"})
        if record["status"] != "submitted":
            record = dict(record, status="submitted", submitted_at=_utc_now())
            state.records.append(record)
        return _public_view(record)

    @app.get("/v1/reports")
    def list_reports(status: str | None = None):
        records = state.records.all_records()
        if status is not None:
            records = [r for r in records if r["status"] == status]
        return {"reports": [_public_view(r) for r in records]}

    @app.get("/v1/reports/{record_id}/spectrogram")
    def report_spectrogram(record_id: str):
        record = state.records.get(record_id)
        if record is None:
            return JSONResponse(status_code=404, content={"detail": "unknown record"})
        clip = load_wav_bytes(state.blobs.get(record["clip_ref"]))
        matrix = log_mel_spectrogram(clip, FrameSpec(frame_len_ms=25.0, hop_len_ms=25.0))
        return {
            "record_id": record_id,
            "n_frames": matrix.shape[0],
            "n_filters": matrix.shape[1],
            "frame_ms": 25.0,
            "matrix": matrix.tolist(),
        }

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok" if state.model is not None else "degraded",
            "model_version": state.model_version,
            "record_count": len(state.records),
        }

    if frontend_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app
