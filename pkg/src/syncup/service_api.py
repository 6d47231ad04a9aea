"""HTTP API over the scoring pipeline.

Uploads enqueue analysis; clients poll the report endpoints. Session state
transitions happen under a lock so `done` is never partially visible.
"""
from __future__ import annotations

import base64
import threading
import uuid
from typing import Optional

from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import audio_beats
from .errors import AnalysisError, NotFound, SyncupError
from .motion_model import parse_pose_stream
from .regressors import model_from_text
from .render import overlay_record, pose_heatmap_svg, temporal_heatmap_svg
from .scoring_service import (
    AnalysisConfig,
    AnalysisReport,
    RoleRecording,
    Session,
    analyze_session,
    compare_practices,
    report_to_dict,
    spotlight,
)


class SessionStore:
    def __init__(self):
        self.lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        self.reports: dict[str, AnalysisReport] = {}

    def create(self, mode: str, practice_index: int) -> Session:
        sess = Session(id=uuid.uuid4().hex[:12], mode=mode, practice_index=practice_index)
        with self.lock:
            self.sessions[sess.id] = sess
        return sess

    def get(self, session_id: str) -> Session:
        with self.lock:
            if session_id not in self.sessions:
                raise NotFound(f"session {session_id!r} not found")
            return self.sessions[session_id]


class CreateSessionBody(BaseModel):
    mode: str
    practice_index: int = 0


class RecordingBody(BaseModel):
    role: str
    poses: str                       # pose-stream text
    fps: Optional[float] = None
    beats: Optional[str] = None      # beat-file text
    bpm: Optional[float] = None
    audio_wav_base64: Optional[str] = None


class AnalyzeBody(BaseModel):
    lam: float = 0.885
    method: str = "svr"  # production default; needs a model unless "addition"
    leader: int = 0
    n_bins: int = 16
    w_pose: float = 0.5
    w_time: float = 0.5
    tau_cap_ms: float = 500.0
    max_shift_ms: Optional[float] = None
    seed: int = 0
    model: Optional[str] = None      # serialized model text for svr/nn methods


def _error_response(stage: str, exc: Exception, status: int) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"stage": stage, "code": type(exc).__name__, "message": str(exc)}},
    )


def create_app(store: SessionStore | None = None) -> FastAPI:
    app = FastAPI(title="syncup", version="0.1.0")
    store = store or SessionStore()
    app.state.store = store

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        if body.mode not in ("group", "individual"):
            return _error_response("create", ValueError(f"unknown mode {body.mode!r}"), 400)
        sess = store.create(body.mode, body.practice_index)
        return {"id": sess.id, "status": sess.status}

    @app.post("/sessions/{session_id}/recordings")
    def add_recording(session_id: str, body: RecordingBody):
        try:
            sess = store.get(session_id)
        except NotFound as exc:
            return _error_response("lookup", exc, 404)
        try:
            recording = parse_pose_stream(body.poses, fps=body.fps)
            grid = None
            env = None
            if body.beats is not None:
                grid = audio_beats.parse_beat_file(body.beats)
            elif body.bpm is not None:
                grid = audio_beats.constant_grid(body.bpm, end_ms=float(recording.times_ms[-1]))
            if body.audio_wav_base64 is not None:
                samples, sr = audio_beats.load_wav(base64.b64decode(body.audio_wav_base64))
                env = audio_beats.onset_envelope(samples, sr)
        except SyncupError as exc:
            return _error_response("ingest", exc, 400)
        with store.lock:
            sess.add_recording(RoleRecording(role=body.role, recording=recording,
                                             beats=grid, audio_env=env))
        return {"id": sess.id, "recordings": len(sess.recordings)}

    @app.post("/sessions/{session_id}/analyze")
    def analyze(session_id: str, body: AnalyzeBody):
        try:
            sess = store.get(session_id)
        except NotFound as exc:
            return _error_response("lookup", exc, 404)
        try:
            cfg = AnalysisConfig(
                lam=body.lam, method=body.method, leader=body.leader, n_bins=body.n_bins,
                w_pose=body.w_pose, w_time=body.w_time, tau_cap_ms=body.tau_cap_ms,
                max_shift_ms=body.max_shift_ms, seed=body.seed,
            )
            model = model_from_text(body.model) if body.model else None
        except (SyncupError, ValueError) as exc:
            return _error_response("config", exc, 400)

        with store.lock:
            if sess.status == "analyzing":
                return _error_response("analyze", ValueError("analysis already running"), 409)
            sess.status = "analyzing"
            sess.error = None

        def run():
            try:
                report = analyze_session(sess, cfg, model=model)
                with store.lock:
                    store.reports[sess.id] = report
                    sess.status = "done"
            except AnalysisError as exc:
                with store.lock:
                    sess.status = "failed"
                    sess.error = {"stage": exc.stage, "code": type(exc.cause).__name__,
                                  "message": str(exc.cause)}
            except Exception as exc:  # pragma: no cover - defensive
                with store.lock:
                    sess.status = "failed"
                    sess.error = {"stage": "unknown", "code": type(exc).__name__, "message": str(exc)}

        threading.Thread(target=run, daemon=True).start()
        return JSONResponse(status_code=202, content={"id": sess.id, "status": "analyzing"})

    def _report_or_status(session_id: str):
        try:
            sess = store.get(session_id)
        except NotFound as exc:
            return None, _error_response("lookup", exc, 404)
        with store.lock:
            status = sess.status
            report = store.reports.get(session_id)
            error = sess.error
        if status == "failed":
            return None, JSONResponse(status_code=422, content={"status": status, "error": error})
        if status != "done" or report is None:
            return None, JSONResponse(status_code=202, content={"status": status})
        return report, None

    @app.get("/sessions/{session_id}/report")
    def get_report(session_id: str):
        report, problem = _report_or_status(session_id)
        if problem is not None:
            return problem
        return report_to_dict(report)

    @app.get("/sessions/{session_id}/spotlight")
    def get_spotlight(session_id: str):
        report, problem = _report_or_status(session_id)
        if problem is not None:
            return problem
        entries = spotlight(report).entries
        return {"entries": [
            {"s": sc.s, "ops_mean": sc.ops_mean, "tau_total_ms": sc.tau_total_ms,
             "combined": sc.combined, "flags": list(sc.flags)}
            for sc in entries
        ]}

    @app.get("/sessions/{session_id}/heatmaps")
    def get_heatmaps(session_id: str):
        report, problem = _report_or_status(session_id)
        if problem is not None:
            return problem
        return {"pose": pose_heatmap_svg(report), "temporal": temporal_heatmap_svg(report)}

    @app.get("/sessions/{session_id}/overlay")
    def get_overlay(session_id: str, frame: int = Query(...)):
        report, problem = _report_or_status(session_id)
        if problem is not None:
            return problem
        positions = {int(fi): t for t, fi in enumerate(report.frame_indices)}
        if frame not in positions:
            return _error_response("overlay", NotFound(f"frame {frame} not in report"), 404)
        return overlay_record(report, positions[frame])

    @app.get("/comparison")
    def get_comparison(ids: str = Query(...)):
        session_ids = [s for s in ids.split(",") if s]
        reports = []
        for sid in session_ids:
            report, problem = _report_or_status(sid)
            if problem is not None:
                return problem
            reports.append(report)
        try:
            matrix = compare_practices(reports)
        except SyncupError as exc:
            return _error_response("comparison", exc, 400)
        except ValueError as exc:
            return _error_response("comparison", exc, 400)
        return {
            "session_ids": list(matrix.session_ids),
            "practice_indices": list(matrix.practice_indices),
            "ops": [[None if v != v else v for v in row] for row in matrix.ops.tolist()],
            "tau": [[None if v != v else v for v in row] for row in matrix.tau.tolist()],
        }

    return app
