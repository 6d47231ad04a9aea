"""Domain types for pose-keypoint streams and their ingestion/validation.

Input is the line-delimited pose-stream format produced by an external pose
estimator adapter: a header object carrying ``fps`` (and optionally
``recording_id``), followed by one object per frame with ``frame``,
``time_ms`` and ``skeletons`` (each skeleton an array of 18 ``[x, y,
confidence]`` triples).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    BadKeypointCount,
    EmptyRecording,
    MalformedRecord,
    NonMonotonicTime,
)

KEYPOINT_NAMES = (
    "nose", "neck",
    "r_shoulder", "r_elbow", "r_wrist",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_hip", "r_knee", "r_ankle",
    "l_hip", "l_knee", "l_ankle",
    "r_eye", "l_eye", "r_ear", "l_ear",
)
N_KEYPOINTS = 18

# The 13 body-part edges form a tree rooted at the neck over the 14
# non-face keypoints (eyes and ears carry no pose information).
BODY_PART_EDGES = (
    (1, 0),    # neck -> nose
    (1, 2),    # neck -> r_shoulder
    (2, 3),    # r_shoulder -> r_elbow
    (3, 4),    # r_elbow -> r_wrist
    (1, 5),    # neck -> l_shoulder
    (5, 6),    # l_shoulder -> l_elbow
    (6, 7),    # l_elbow -> l_wrist
    (1, 8),    # neck -> r_hip
    (8, 9),    # r_hip -> r_knee
    (9, 10),   # r_knee -> r_ankle
    (1, 11),   # neck -> l_hip
    (11, 12),  # l_hip -> l_knee
    (12, 13),  # l_knee -> l_ankle
)
BODY_PART_NAMES = (
    "head", "r_clavicle", "r_upper_arm", "r_forearm",
    "l_clavicle", "l_upper_arm", "l_forearm",
    "r_torso", "r_thigh", "r_shin",
    "l_torso", "l_thigh", "l_shin",
)
N_BODY_PARTS = 13

DEFAULT_CONFIDENCE_THRESHOLD = 0.2

# Consecutive frame spacing may deviate from 1000/fps by at most this factor
# before a frame is reported as irregular.
SPACING_TOLERANCE = 0.10


@dataclass(frozen=True)
class Keypoint:
    """One 2D pixel location (image coordinates, y grows downward)."""

    x: float
    y: float
    confidence: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"keypoint coordinates must be finite, got ({self.x}, {self.y})")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class Skeleton:
    """Exactly 18 keypoints in the fixed layout of KEYPOINT_NAMES."""

    keypoints: tuple[Keypoint, ...]

    def __post_init__(self):
        if len(self.keypoints) != N_KEYPOINTS:
            raise ValueError(f"skeleton needs {N_KEYPOINTS} keypoints, got {len(self.keypoints)}")

    @classmethod
    def from_arrays(cls, xy: np.ndarray, confidence: np.ndarray) -> "Skeleton":
        xy = np.asarray(xy, dtype=float)
        confidence = np.asarray(confidence, dtype=float)
        return cls(tuple(
            Keypoint(float(xy[i, 0]), float(xy[i, 1]), float(confidence[i]))
            for i in range(len(xy))
        ))

    @cached_property
    def xy(self) -> np.ndarray:
        """(18, 2) float64 pixel coordinates."""
        return np.array([(k.x, k.y) for k in self.keypoints], dtype=float)

    @cached_property
    def conf(self) -> np.ndarray:
        """(18,) float64 confidences."""
        return np.array([k.confidence for k in self.keypoints], dtype=float)


@dataclass(frozen=True)
class PoseFrame:
    frame_index: int
    time_ms: float
    skeletons: tuple[Skeleton, ...]


@dataclass(frozen=True)
class Recording:
    """An ingested pose stream: frames ordered by index, identities unassigned."""

    id: str
    fps: float
    frames: tuple[PoseFrame, ...]
    role: str = "group"  # group | leader | follower
    audio_ref: str | None = None

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if self.role not in ("group", "leader", "follower"):
            raise ValueError(f"unknown role {self.role!r}")

    def __len__(self) -> int:
        return len(self.frames)

    @cached_property
    def times_ms(self) -> np.ndarray:
        return np.array([f.time_ms for f in self.frames], dtype=float)

    @cached_property
    def frame_indices(self) -> np.ndarray:
        return np.array([f.frame_index for f in self.frames], dtype=int)

    def skeleton_counts(self) -> np.ndarray:
        return np.array([len(f.skeletons) for f in self.frames], dtype=int)


@dataclass(frozen=True)
class ValidationReport:
    """Report-only checks ahead of tracking; never raises."""

    modal_skeleton_count: int
    low_confidence: tuple[tuple[int, int], ...]   # (frame_index, skeleton position)
    count_anomalies: tuple[int, ...]              # frame indices
    irregular_spacing: tuple[int, ...]            # frame indices

    @property
    def ok(self) -> bool:
        return not (self.low_confidence or self.count_anomalies or self.irregular_spacing)


def parse_pose_stream(data: bytes | str, fps: float | None = None) -> Recording:
    """Parse the line-delimited pose-stream format into a Recording.

    ``fps`` overrides the header value when both are present. Raises
    MalformedRecord, NonMonotonicTime, BadKeypointCount or EmptyRecording.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = [ln for ln in data.splitlines() if ln.strip()]
    if not lines:
        raise EmptyRecording("pose stream has no records")

    header_fps = None
    recording_id = "recording"
    role = "group"
    start = 0
    first = _load_line(lines[0], 1)
    if "fps" in first and "frame" not in first:
        header_fps = float(first["fps"])
        recording_id = str(first.get("recording_id", recording_id))
        role = str(first.get("role", role))
        start = 1

    effective_fps = fps if fps is not None else header_fps
    if effective_fps is None:
        raise MalformedRecord(1, "fps missing from both header and arguments")

    frames: list[PoseFrame] = []
    seen_indices: set[int] = set()
    prev_time = None
    for line_no, line in enumerate(lines[start:], start=start + 1):
        obj = _load_line(line, line_no)
        try:
            frame_index = int(obj["frame"])
            time_ms = float(obj["time_ms"])
            raw_skeletons = obj["skeletons"]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(line_no, str(exc)) from exc
        if frame_index in seen_indices:
            raise MalformedRecord(line_no, f"duplicate frame index {frame_index}")
        seen_indices.add(frame_index)
        if prev_time is not None and time_ms < prev_time:
            raise NonMonotonicTime(frame_index)
        prev_time = time_ms

        skeletons = []
        for sk in raw_skeletons:
            triples = sk["keypoints"] if isinstance(sk, dict) else sk
            if len(triples) != N_KEYPOINTS:
                raise BadKeypointCount(frame_index, len(triples))
            try:
                skeletons.append(Skeleton(tuple(
                    Keypoint(float(t[0]), float(t[1]), float(t[2])) for t in triples
                )))
            except (ValueError, TypeError, IndexError) as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
        frames.append(PoseFrame(frame_index, time_ms, tuple(skeletons)))

    if not frames:
        raise EmptyRecording("pose stream has a header but no frames")
    frames.sort(key=lambda f: f.frame_index)
    return Recording(id=recording_id, fps=float(effective_fps), frames=tuple(frames), role=role)


def _load_line(line: str, line_no: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(line_no, exc.msg) from exc
    if not isinstance(obj, dict):
        raise MalformedRecord(line_no, "record is not an object")
    return obj


def serialize_pose_stream(r: Recording) -> str:
    """Inverse of parse_pose_stream; numeric values round-trip exactly."""
    out = [json.dumps({"fps": r.fps, "recording_id": r.id, "role": r.role})]
    for f in r.frames:
        out.append(json.dumps({
            "frame": f.frame_index,
            "time_ms": f.time_ms,
            "skeletons": [
                {"keypoints": [[k.x, k.y, k.confidence] for k in s.keypoints]}
                for s in f.skeletons
            ],
        }))
    return "\n".join(out) + "\n"


def modal_skeleton_count(r: Recording) -> int:
    counts = r.skeleton_counts()
    values, freq = np.unique(counts, return_counts=True)
    return int(values[np.argmax(freq)])


def validate_recording(
    r: Recording,
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
) -> ValidationReport:
    """Flag low-confidence skeletons, anomalous skeleton counts and timing gaps."""
    modal = modal_skeleton_count(r)
    low_conf = []
    anomalies = []
    for f in r.frames:
        for pos, s in enumerate(f.skeletons):
            if float(np.mean(s.conf)) < confidence_threshold:
                low_conf.append((f.frame_index, pos))
        if len(f.skeletons) != modal:
            anomalies.append(f.frame_index)

    nominal = 1000.0 / r.fps
    irregular = []
    times = r.times_ms
    for i in range(1, len(times)):
        if abs((times[i] - times[i - 1]) - nominal) > SPACING_TOLERANCE * nominal:
            irregular.append(int(r.frames[i].frame_index))

    return ValidationReport(
        modal_skeleton_count=modal,
        low_confidence=tuple(low_conf),
        count_anomalies=tuple(anomalies),
        irregular_spacing=tuple(irregular),
    )
