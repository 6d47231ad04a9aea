"""Pipeline orchestration: sessions, segment scores, spotlight, persistence.

A session is analyzed post hoc: track -> segments -> BPD/OPS -> temporal
alignment -> per-segment scores. Results are deterministic given the input
streams, configuration and seed.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .audio_beats import BeatGrid, OnsetEnvelope, Segment, align_recordings, build_segments, estimate_beats
from .errors import AnalysisError, NotFound, SegmentCountMismatch, UntrainedModel, VersionMismatch
from .motion_model import Recording, modal_skeleton_count
from .pose_similarity import bpd_series
from .regressors import OpsSeries, RegressorModel, make_addition_model, ops_series
from .temporal_alignment import AlignmentResult, alignment_for_segment, dancer_impact_envelope
from .tracker import TrackedSequence, track

REPORT_FORMAT_VERSION = 1

# Fraction of occluded frames beyond which a whole segment is flagged.
SEGMENT_OCCLUSION_FRACTION = 0.25


@dataclass(frozen=True)
class AnalysisConfig:
    lam: float = 0.885
    method: str = "svr"
    leader: int = 0
    n_bins: int = 16
    w_pose: float = 0.5
    w_time: float = 0.5
    tau_cap_ms: float = 500.0
    confidence_threshold: float = 0.2
    max_shift_ms: float | None = None
    seed: int = 0

    def __post_init__(self):
        if abs(self.w_pose + self.w_time - 1.0) > 1e-9:
            raise ValueError("w_pose + w_time must equal 1")
        if self.lam <= 0 or self.tau_cap_ms <= 0:
            raise ValueError("lam and tau_cap_ms must be positive")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisConfig":
        return cls(**d)


@dataclass
class RoleRecording:
    role: str                       # group | leader | follower
    recording: Recording
    beats: BeatGrid | None = None
    audio_env: OnsetEnvelope | None = None


@dataclass
class Session:
    id: str
    mode: str                        # group | individual
    practice_index: int = 0
    status: str = "pending"          # pending | analyzing | done | failed
    recordings: list[RoleRecording] = field(default_factory=list)
    error: dict | None = None

    def add_recording(self, rr: RoleRecording) -> None:
        self.recordings.append(rr)


@dataclass(frozen=True)
class SegmentScore:
    s: int
    ops_mean: float
    tau_total_ms: float
    combined: float
    flags: tuple[str, ...]
    per_follower_tau: dict[int, float]
    peak_corr: dict[int, float]


@dataclass(frozen=True)
class SpotlightList:
    entries: tuple[SegmentScore, ...]


@dataclass
class AnalysisReport:
    session_id: str
    mode: str
    practice_index: int
    config: AnalysisConfig
    dancer_count: int
    fps: float
    frame_indices: np.ndarray        # (T,)
    times_ms: np.ndarray             # (T,)
    segments: list[Segment]
    segment_scores: list[SegmentScore]
    ops: OpsSeries
    bpd_values: np.ndarray           # (T, 13)
    bpd_valid: np.ndarray            # (T, 13)
    coords: np.ndarray               # (J, T, 18, 2)
    carried: np.ndarray              # (J, T)
    follower_offsets_ms: dict[str, float] = field(default_factory=dict)

    @property
    def n_frames(self) -> int:
        return self.bpd_values.shape[0]


def _resolve_beats(rr: RoleRecording) -> BeatGrid:
    if rr.beats is not None:
        return rr.beats
    if rr.audio_env is not None:
        return estimate_beats(rr.audio_env)
    raise ValueError(f"recording {rr.recording.id!r} has neither a beat grid nor audio")


def _combined_score(ops_mean: float, tau_total_ms: float, cfg: AnalysisConfig) -> float:
    timing = 1.0 - min(1.0, tau_total_ms / cfg.tau_cap_ms)
    return cfg.w_pose * ops_mean + cfg.w_time * timing


class _Stage:
    """Context manager attributing failures to a pipeline stage."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, AnalysisError):
            raise AnalysisError(self.name, exc) from exc
        return False


def _combined_individual(leader_rr: RoleRecording, followers: list[RoleRecording],
                         cfg: AnalysisConfig) -> tuple[TrackedSequence, dict[str, float]]:
    """Merge leader and audio-aligned followers into one J=1+F sequence."""
    fps = leader_rr.recording.fps
    lead_tracked = track(leader_rr.recording)
    offsets: dict[str, float] = {}
    parts = [(lead_tracked, 0)]
    lo, hi = 0, lead_tracked.n_frames - 1
    for rr in followers:
        if rr.recording.fps != fps:
            raise ValueError("leader and follower recordings must share fps")
        if leader_rr.audio_env is not None and rr.audio_env is not None:
            offset = align_recordings(leader_rr.audio_env, rr.audio_env)
        else:
            offset = 0.0
        offsets[rr.recording.id] = offset
        # a music moment at leader time T sits at follower time T + offset
        k = int(round(offset * fps / 1000.0))
        f_tracked = track(rr.recording)
        parts.append((f_tracked, k))
        # follower frame for leader frame t is t + k; keep t in range
        lo = max(lo, -k)
        hi = min(hi, f_tracked.n_frames - 1 - k)
    if hi - lo < 1:
        raise ValueError("recordings do not overlap after music alignment")

    n = hi - lo + 1
    j_total = len(parts)
    xy = np.zeros((j_total, n, 18, 2))
    conf = np.zeros((j_total, n, 18))
    carried = np.zeros((j_total, n), dtype=bool)
    for j, (seq, k) in enumerate(parts):
        src = slice(lo + k, hi + k + 1)
        xy[j] = seq.xy[0, src]
        conf[j] = seq.conf[0, src]
        carried[j] = seq.carried[0, src]
    return TrackedSequence(
        dancer_count=j_total,
        xy=xy,
        conf=conf,
        carried=carried,
        frame_indices=lead_tracked.frame_indices[lo:hi + 1].copy(),
        times_ms=lead_tracked.times_ms[lo:hi + 1].copy(),
        fps=fps,
    ), offsets


def analyze_session(sess: Session, cfg: AnalysisConfig,
                    model: RegressorModel | None = None) -> AnalysisReport:
    """Run the full pipeline for a session.

    The addition method needs no model; other methods require a trained one
    whose lambda matches the config. Failures carry stage attribution.
    """
    with _Stage("validate"):
        roles = [rr.role for rr in sess.recordings]
        if sess.mode == "group":
            if len(sess.recordings) != 1:
                raise ValueError(f"group mode needs exactly one recording, got {len(roles)}")
        elif sess.mode == "individual":
            if roles.count("leader") != 1 or roles.count("follower") < 1:
                raise ValueError("individual mode needs exactly one leader and at least one follower")
        else:
            raise ValueError(f"unknown mode {sess.mode!r}")

    offsets: dict[str, float] = {}
    if sess.mode == "group":
        rr = sess.recordings[0]
        with _Stage("track"):
            if modal_skeleton_count(rr.recording) < 2:
                raise ValueError("group analysis needs at least two dancers in frame")
            tracked = track(rr.recording)
        beat_source = rr
        leader = cfg.leader
        if not 0 <= leader < tracked.dancer_count:
            raise AnalysisError("validate", ValueError(
                f"leader index {leader} out of range for {tracked.dancer_count} dancers"))
    else:
        leader_rr = next(rr for rr in sess.recordings if rr.role == "leader")
        followers = [rr for rr in sess.recordings if rr.role == "follower"]
        with _Stage("align_recordings"):
            tracked, offsets = _combined_individual(leader_rr, followers, cfg)
        beat_source = leader_rr
        leader = 0

    with _Stage("segments"):
        grid = _resolve_beats(beat_source)
        segments = build_segments(grid, times_ms=tracked.times_ms, fps=tracked.fps)

    with _Stage("pose_similarity"):
        if cfg.method == "addition":
            ops_model = make_addition_model(cfg.lam)
        else:
            if model is None:
                raise UntrainedModel(f"method {cfg.method!r} requires a trained model")
            if model.method != cfg.method:
                raise ValueError(f"model is {model.method!r}, config wants {cfg.method!r}")
            if abs(model.lam - cfg.lam) > 1e-9:
                raise ValueError(f"model trained at lambda={model.lam}, config wants {cfg.lam}")
            ops_model = model
        series = bpd_series(tracked, cfg.lam, cfg.confidence_threshold)
        ops = ops_series(ops_model, series, segments)

    with _Stage("temporal_alignment"):
        envelopes = [dancer_impact_envelope(tracked, j, cfg.n_bins).values
                     for j in range(tracked.dancer_count)]
        alignments: list[AlignmentResult] = [
            alignment_for_segment(tracked, leader, segments, s, tracked.fps,
                                  n_bins=cfg.n_bins, max_shift_ms=cfg.max_shift_ms,
                                  envelopes=envelopes)
            for s in range(len(segments))
        ]

    with _Stage("score"):
        scores = []
        for seg, al in zip(segments, alignments):
            sl = slice(seg.frame_first, seg.frame_last + 1)
            flags = []
            occluded_frac = float(ops.occluded[sl].mean())
            if occluded_frac > SEGMENT_OCCLUSION_FRACTION:
                flags.append("occluded")
            if any(al.low_confidence.values()):
                flags.append("low-confidence-alignment")
            if bool(ops.missing[sl].all()) or not al.per_follower:
                flags.append("missing")
            ops_mean = ops.segment_means[seg.index]
            tau_total = al.tau_total
            scores.append(SegmentScore(
                s=seg.index,
                ops_mean=ops_mean,
                tau_total_ms=tau_total,
                combined=_combined_score(ops_mean, tau_total, cfg),
                flags=tuple(flags),
                per_follower_tau=dict(al.per_follower),
                peak_corr=dict(al.correlation_peak),
            ))

    return AnalysisReport(
        session_id=sess.id,
        mode=sess.mode,
        practice_index=sess.practice_index,
        config=cfg,
        dancer_count=tracked.dancer_count,
        fps=tracked.fps,
        frame_indices=tracked.frame_indices.copy(),
        times_ms=tracked.times_ms.copy(),
        segments=segments,
        segment_scores=scores,
        ops=ops,
        bpd_values=series.values,
        bpd_valid=series.valid,
        coords=tracked.xy,
        carried=tracked.carried,
        follower_offsets_ms=offsets,
    )


def spotlight(report: AnalysisReport) -> SpotlightList:
    """Segments sorted worst combined score first; missing ones go last."""
    entries = sorted(
        report.segment_scores,
        key=lambda sc: ("missing" in sc.flags, sc.combined, sc.s),
    )
    return SpotlightList(entries=tuple(entries))


@dataclass(frozen=True)
class ComparisonMatrix:
    practice_indices: tuple[int, ...]
    session_ids: tuple[str, ...]
    ops: np.ndarray   # (practices, segments), NaN where absent
    tau: np.ndarray


def compare_practices(reports: list[AnalysisReport]) -> ComparisonMatrix:
    """Stack per-segment scores of several practices of the same routine."""
    if len(reports) < 2:
        raise ValueError("need at least two reports to compare")
    counts = [len(r.segment_scores) for r in reports]
    if max(counts) - min(counts) > 1:
        raise SegmentCountMismatch(f"segment counts {counts} differ by more than 1")
    n_seg = max(counts)
    ops = np.full((len(reports), n_seg), np.nan)
    tau = np.full((len(reports), n_seg), np.nan)
    for i, r in enumerate(reports):
        for sc in r.segment_scores:
            ops[i, sc.s] = sc.ops_mean
            tau[i, sc.s] = sc.tau_total_ms
    return ComparisonMatrix(
        practice_indices=tuple(r.practice_index for r in reports),
        session_ids=tuple(r.session_id for r in reports),
        ops=ops,
        tau=tau,
    )


# --- persistence ----------------------------------------------------------------

def report_to_dict(report: AnalysisReport) -> dict:
    return {
        "format": "analysis-report",
        "version": REPORT_FORMAT_VERSION,
        "session_id": report.session_id,
        "mode": report.mode,
        "practice_index": report.practice_index,
        "config": report.config.to_dict(),
        "dancer_count": report.dancer_count,
        "fps": report.fps,
        "frame_indices": report.frame_indices.tolist(),
        "times_ms": report.times_ms.tolist(),
        "segments": [dataclasses.asdict(s) for s in report.segments],
        "segment_scores": [
            {**dataclasses.asdict(sc),
             "per_follower_tau": {str(k): v for k, v in sc.per_follower_tau.items()},
             "peak_corr": {str(k): v for k, v in sc.peak_corr.items()},
             "flags": list(sc.flags)}
            for sc in report.segment_scores
        ],
        "ops": {
            "method": report.ops.method,
            "values": report.ops.values.tolist(),
            "occluded": report.ops.occluded.astype(int).tolist(),
            "missing": report.ops.missing.astype(int).tolist(),
            "segment_means": list(report.ops.segment_means),
        },
        "bpd_values": _nan_to_none(report.bpd_values),
        "bpd_valid": report.bpd_valid.astype(int).tolist(),
        "coords": report.coords.tolist(),
        "carried": report.carried.astype(int).tolist(),
        "follower_offsets_ms": report.follower_offsets_ms,
    }


def report_from_dict(doc: dict) -> AnalysisReport:
    if doc.get("format") != "analysis-report":
        raise ValueError("not an analysis report document")
    if doc.get("version") != REPORT_FORMAT_VERSION:
        raise VersionMismatch(doc.get("version"), REPORT_FORMAT_VERSION)
    segments = [Segment(**s) for s in doc["segments"]]
    scores = [
        SegmentScore(
            s=sc["s"],
            ops_mean=sc["ops_mean"],
            tau_total_ms=sc["tau_total_ms"],
            combined=sc["combined"],
            flags=tuple(sc["flags"]),
            per_follower_tau={int(k): v for k, v in sc["per_follower_tau"].items()},
            peak_corr={int(k): v for k, v in sc["peak_corr"].items()},
        )
        for sc in doc["segment_scores"]
    ]
    ops = OpsSeries(
        method=doc["ops"]["method"],
        values=np.array(doc["ops"]["values"], dtype=float),
        occluded=np.array(doc["ops"]["occluded"], dtype=bool),
        missing=np.array(doc["ops"]["missing"], dtype=bool),
        segment_means=tuple(doc["ops"]["segment_means"]),
    )
    bpd = np.array([[np.nan if v is None else v for v in row] for row in doc["bpd_values"]])
    return AnalysisReport(
        session_id=doc["session_id"],
        mode=doc["mode"],
        practice_index=doc["practice_index"],
        config=AnalysisConfig.from_dict(doc["config"]),
        dancer_count=doc["dancer_count"],
        fps=doc["fps"],
        frame_indices=np.array(doc["frame_indices"], dtype=int),
        times_ms=np.array(doc["times_ms"], dtype=float),
        segments=segments,
        segment_scores=scores,
        ops=ops,
        bpd_values=bpd,
        bpd_valid=np.array(doc["bpd_valid"], dtype=bool),
        coords=np.array(doc["coords"], dtype=float),
        carried=np.array(doc["carried"], dtype=bool),
        follower_offsets_ms=dict(doc.get("follower_offsets_ms", {})),
    )


def _nan_to_none(arr: np.ndarray) -> list:
    return [[None if np.isnan(v) else float(v) for v in row] for row in arr]


def save_session(base_dir: str, sess: Session, report: AnalysisReport) -> str:
    """Persist a session as a directory of versioned text artifacts."""
    path = os.path.join(base_dir, sess.id)
    os.makedirs(path, exist_ok=True)
    doc = report_to_dict(report)
    doc["session"] = {
        "id": sess.id,
        "mode": sess.mode,
        "practice_index": sess.practice_index,
        "status": sess.status,
    }
    with open(os.path.join(path, "report.json"), "w") as fh:
        json.dump(doc, fh)
    return path


def load_session(base_dir: str, session_id: str) -> tuple[Session, AnalysisReport]:
    path = os.path.join(base_dir, session_id, "report.json")
    if not os.path.exists(path):
        raise NotFound(f"session {session_id!r} not found under {base_dir}")
    with open(path) as fh:
        doc = json.load(fh)
    report = report_from_dict(doc)
    meta = doc.get("session", {})
    sess = Session(
        id=meta.get("id", session_id),
        mode=meta.get("mode", report.mode),
        practice_index=meta.get("practice_index", report.practice_index),
        status=meta.get("status", "done"),
    )
    return sess, report
