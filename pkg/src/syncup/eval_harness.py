"""Synthetic dance-stream generation and evaluation metrics.

The generator produces deterministic multi-dancer skeleton streams with
known identities, per-dancer time shifts, per-joint angular noise and
keypoint dropout. Motion fidelity is not the goal; the streams only need
identity structure for tracking oracles and non-degenerate, non-periodic
impact envelopes for alignment oracles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import pearson_r, rmse
from .errors import DegenerateVariance
from .motion_model import PoseFrame, Recording, Skeleton
from .tracker import TrackedSequence

MOTION_MODELS = ("periodic-limb-swing", "step-sequence", "crossing-paths")

# Animated joint angles, in order: direction (radians, image coordinates,
# x right / y down) of each limb segment from its parent joint.
_JOINTS = ("r_upper_arm", "r_forearm", "l_upper_arm", "l_forearm",
           "r_thigh", "r_shin", "l_thigh", "l_shin")
_BASE_ANGLES = np.array([
    np.pi / 2 + 0.25, np.pi / 2,   # right arm hangs slightly outward
    np.pi / 2 - 0.25, np.pi / 2,
    np.pi / 2 + 0.06, np.pi / 2,
    np.pi / 2 - 0.06, np.pi / 2,
])
_SWING_AMP = np.array([0.7, 0.5, 0.7, 0.5, 0.25, 0.2, 0.25, 0.2])
_SWING_PHASE = np.array([0.0, 0.6, np.pi, np.pi + 0.6, np.pi / 2, np.pi / 2 + 0.4,
                         3 * np.pi / 2, 3 * np.pi / 2 + 0.4])
_STEP_TARGET_RANGE = 0.9       # radians around the base pose
_STEP_TRANSITION = 0.4         # fraction of a beat spent moving

_UPPER_ARM_LEN, _FOREARM_LEN = 34.0, 30.0
_THIGH_LEN, _SHIN_LEN = 46.0, 44.0

DROPOUT_CONFIDENCE = 0.05
DEFAULT_CONFIDENCE = 0.9


@dataclass(frozen=True)
class SyntheticSpec:
    dancer_count: int = 2
    fps: float = 30.0
    duration_ms: float = 30000.0
    bpm: float = 120.0
    motion_model: str = "step-sequence"
    time_shifts_ms: tuple[float, ...] = ()   # per dancer, defaults to zeros
    angular_noise_sd: float = 0.0            # radians, per joint per frame
    dropout_prob: float = 0.0
    spacing_px: float = 250.0
    shuffle: bool = True                     # shuffle skeleton order per frame

    def __post_init__(self):
        if self.dancer_count < 1 or self.fps <= 0 or self.duration_ms <= 0 or self.bpm <= 0:
            raise ValueError("dancer_count, fps, duration_ms and bpm must be positive")
        if self.motion_model not in MOTION_MODELS:
            raise ValueError(f"motion_model must be one of {MOTION_MODELS}")
        if self.time_shifts_ms and len(self.time_shifts_ms) != self.dancer_count:
            raise ValueError("time_shifts_ms must have one entry per dancer")
        if any(abs(s) > 2000.0 for s in self.time_shifts_ms):
            raise ValueError("time shifts must stay within +/- 2 s")

    @property
    def shifts(self) -> tuple[float, ...]:
        return self.time_shifts_ms or (0.0,) * self.dancer_count


@dataclass(frozen=True)
class SyntheticStreams:
    """Generated streams plus the ground truth that produced them."""

    spec: SyntheticSpec
    seed: int
    xy: np.ndarray            # (J, T, 18, 2), identity order
    conf: np.ndarray          # (J, T, 18)
    times_ms: np.ndarray      # (T,)
    permutations: np.ndarray  # (T, J): identity of the skeleton at each position
    dropout: np.ndarray       # (J, T, 18) bool

    @property
    def shifts_ms(self) -> tuple[float, ...]:
        return self.spec.shifts

    def recording(self, recording_id: str = "synthetic", shuffled: bool = True,
                  dancers: tuple[int, ...] | None = None, role: str = "group") -> Recording:
        """Materialize a Recording; per-frame skeleton order follows the
        generated permutations unless shuffled=False."""
        sel = dancers if dancers is not None else tuple(range(self.spec.dancer_count))
        frames = []
        for t in range(len(self.times_ms)):
            order = [j for j in self.permutations[t] if j in sel] if shuffled else list(sel)
            skeletons = tuple(
                Skeleton.from_arrays(self.xy[j, t], self.conf[j, t]) for j in order
            )
            frames.append(PoseFrame(frame_index=t, time_ms=float(self.times_ms[t]),
                                    skeletons=skeletons))
        return Recording(id=recording_id, fps=self.spec.fps, frames=tuple(frames), role=role)

    def tracked(self) -> TrackedSequence:
        """Ground-truth tracking (identity order, nothing carried)."""
        j, t = self.xy.shape[:2]
        return TrackedSequence(
            dancer_count=j,
            xy=self.xy.copy(),
            conf=self.conf.copy(),
            carried=np.zeros((j, t), dtype=bool),
            frame_indices=np.arange(t),
            times_ms=self.times_ms.copy(),
            fps=self.spec.fps,
        )


def _step_sequence_angles(t_s: np.ndarray, beat_s: float, targets: np.ndarray) -> np.ndarray:
    """Piecewise pose targets changing at each beat with a smooth transition."""
    k = np.floor(t_s / beat_s).astype(int)
    k = np.clip(k, 0, len(targets) - 2)
    progress = t_s / beat_s - k
    blend = np.clip(progress / _STEP_TRANSITION, 0.0, 1.0)
    blend = blend * blend * (3.0 - 2.0 * blend)  # smoothstep
    prev = targets[k]
    cur = targets[k + 1]
    return prev + (cur - prev) * blend[:, None]


def _joint_angles(spec: SyntheticSpec, t_s: np.ndarray, choreo_rng: np.random.Generator) -> np.ndarray:
    if spec.motion_model == "step-sequence":
        beat_s = 60.0 / spec.bpm
        n_beats = int(np.ceil((t_s.max() + 4.0) / beat_s)) + 2
        targets = _BASE_ANGLES + choreo_rng.uniform(
            -_STEP_TARGET_RANGE, _STEP_TARGET_RANGE, size=(n_beats, len(_JOINTS)))
        return _step_sequence_angles(t_s, beat_s, targets)
    # periodic-limb-swing and crossing-paths share sinusoidal limbs
    freq = spec.bpm / 60.0
    amp = _SWING_AMP if spec.motion_model == "periodic-limb-swing" else _SWING_AMP * 0.3
    phase = 2.0 * np.pi * freq * t_s
    return _BASE_ANGLES + amp * np.sin(phase[:, None] + _SWING_PHASE)


def _build_skeletons(center: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Skeleton coordinates (T, 18, 2) from neck centers and joint angles."""
    t = len(center)
    xy = np.zeros((t, 18, 2))

    def dir_of(a):
        return np.stack([np.cos(a), np.sin(a)], axis=-1)

    neck = center
    nose = neck + [0.0, -28.0]
    xy[:, 0] = nose
    xy[:, 1] = neck
    xy[:, 14] = nose + [-6.0, -4.0]
    xy[:, 15] = nose + [6.0, -4.0]
    xy[:, 16] = nose + [-12.0, 2.0]
    xy[:, 17] = nose + [12.0, 2.0]

    r_shoulder = neck + [-24.0, 6.0]
    l_shoulder = neck + [24.0, 6.0]
    xy[:, 2] = r_shoulder
    xy[:, 5] = l_shoulder
    xy[:, 3] = r_shoulder + _UPPER_ARM_LEN * dir_of(angles[:, 0])
    xy[:, 4] = xy[:, 3] + _FOREARM_LEN * dir_of(angles[:, 1])
    xy[:, 6] = l_shoulder + _UPPER_ARM_LEN * dir_of(angles[:, 2])
    xy[:, 7] = xy[:, 6] + _FOREARM_LEN * dir_of(angles[:, 3])

    r_hip = neck + [-13.0, 78.0]
    l_hip = neck + [13.0, 78.0]
    xy[:, 8] = r_hip
    xy[:, 11] = l_hip
    xy[:, 9] = r_hip + _THIGH_LEN * dir_of(angles[:, 4])
    xy[:, 10] = xy[:, 9] + _SHIN_LEN * dir_of(angles[:, 5])
    xy[:, 12] = l_hip + _THIGH_LEN * dir_of(angles[:, 6])
    xy[:, 13] = xy[:, 12] + _SHIN_LEN * dir_of(angles[:, 7])
    return xy


def generate(spec: SyntheticSpec, seed: int = 0) -> SyntheticStreams:
    """Deterministic streams: same spec and seed, same bits.

    All dancers perform the same choreography; dancer j performs it
    time_shifts_ms[j] late (positive = behind). Angular noise and dropout
    are drawn per dancer from seed-derived generators.
    """
    n_frames = int(round(spec.duration_ms * spec.fps / 1000.0))
    times_ms = np.arange(n_frames) * (1000.0 / spec.fps)
    j = spec.dancer_count

    ss = np.random.SeedSequence(entropy=seed)
    choreo_seed, noise_seed, dropout_seed, shuffle_seed = ss.spawn(4)
    noise_rng = np.random.default_rng(noise_seed)
    dropout_rng = np.random.default_rng(dropout_seed)
    shuffle_rng = np.random.default_rng(shuffle_seed)

    xy = np.zeros((j, n_frames, 18, 2))
    conf = np.full((j, n_frames, 18), DEFAULT_CONFIDENCE)
    for dancer in range(j):
        # every dancer sees the same choreography stream
        choreo_rng = np.random.default_rng(choreo_seed)
        # keep model time non-negative so shifted dancers stay in range
        t_s = (times_ms - spec.shifts[dancer]) / 1000.0 + 4.0
        angles = _joint_angles(spec, t_s, choreo_rng)
        if spec.angular_noise_sd > 0:
            angles = angles + noise_rng.normal(0.0, spec.angular_noise_sd, size=angles.shape)

        base_x = 300.0 + dancer * spec.spacing_px
        center = np.tile([base_x, 400.0], (n_frames, 1))
        if spec.motion_model == "periodic-limb-swing":
            center = center + np.stack(
                [18.0 * np.sin(2 * np.pi * spec.bpm / 120.0 * t_s), np.zeros(n_frames)], axis=1)
        elif spec.motion_model == "crossing-paths":
            # dancers swap sides over the recording; a per-dancer depth
            # offset keeps the crossing point non-degenerate
            other = 300.0 + (j - 1 - dancer) * spec.spacing_px
            frac = np.linspace(0.0, 1.0, n_frames)
            center = np.stack([base_x + (other - base_x) * frac,
                               np.full(n_frames, 400.0 + 35.0 * dancer)], axis=1)
        xy[dancer] = _build_skeletons(center, angles)

    dropout = np.zeros((j, n_frames, 18), dtype=bool)
    if spec.dropout_prob > 0:
        dropout = dropout_rng.random((j, n_frames, 18)) < spec.dropout_prob
        conf = np.where(dropout, DROPOUT_CONFIDENCE, conf)
        xy = xy + np.where(dropout[..., None],
                           dropout_rng.normal(0.0, 15.0, size=xy.shape), 0.0)

    if spec.shuffle:
        permutations = np.stack([shuffle_rng.permutation(j) for _ in range(n_frames)])
    else:
        permutations = np.tile(np.arange(j), (n_frames, 1))

    return SyntheticStreams(
        spec=spec, seed=seed, xy=xy, conf=conf, times_ms=times_ms,
        permutations=permutations, dropout=dropout,
    )


@dataclass(frozen=True)
class MetricsResult:
    rmse: float
    pearson_r: float | None
    p_value: float | None
    degenerate: bool = False


def evaluate_metrics(predictions, ground_truth) -> MetricsResult:
    """RMSE plus Pearson r with a t-distribution two-sided p-value.

    A constant series makes r undefined; that is reported explicitly rather
    than as NaN.
    """
    p = np.asarray(predictions, dtype=float)
    g = np.asarray(ground_truth, dtype=float)
    if len(p) != len(g):
        raise ValueError("prediction/ground-truth length mismatch")
    if len(p) < 3:
        raise ValueError("need at least 3 paired samples")
    err = rmse(p, g)
    try:
        r, pv = pearson_r(p, g)
    except DegenerateVariance:
        return MetricsResult(rmse=err, pearson_r=None, p_value=None, degenerate=True)
    return MetricsResult(rmse=err, pearson_r=r, p_value=pv)


# --- alignment-recovery experiment (shared by the CLI and acceptance tests) ----

@dataclass(frozen=True)
class RecoveryRow:
    seed: int
    injected_ms: float
    segment: int
    recovered_ms: float
    error_frames: float
    low_confidence: bool = False


def alignment_recovery_experiment(seeds, shifts_ms=(33.0, -33.0, 100.0, -100.0,
                                                    250.0, -250.0, 500.0, -500.0),
                                  fps: float = 30.0, duration_ms: float = 30000.0,
                                  bpm: float = 120.0, dropout_prob: float = 0.0
                                  ) -> tuple[list[RecoveryRow], float]:
    """Inject known shifts, recover them per segment, report the hit rate.

    Returns the per-segment rows and the fraction recovered within one
    frame. Each seed runs one two-dancer session per injected shift, cycling
    through the shift set.
    """
    from .audio_beats import build_segments, constant_grid
    from .temporal_alignment import alignment_for_segment, dancer_impact_envelope

    rows: list[RecoveryRow] = []
    frame_ms = 1000.0 / fps
    for run, seed in enumerate(seeds):
        injected = shifts_ms[run % len(shifts_ms)]
        spec = SyntheticSpec(
            dancer_count=2, fps=fps, duration_ms=duration_ms, bpm=bpm,
            motion_model="step-sequence", time_shifts_ms=(0.0, injected),
            dropout_prob=dropout_prob, shuffle=False,
        )
        streams = generate(spec, seed=seed)
        tracked = streams.tracked()
        grid = constant_grid(bpm, end_ms=float(streams.times_ms[-1]))
        segments = build_segments(grid, times_ms=streams.times_ms, fps=fps)
        envelopes = [dancer_impact_envelope(tracked, j).values for j in range(2)]
        for s in range(len(segments)):
            result = alignment_for_segment(tracked, 0, segments, s, fps, envelopes=envelopes)
            tau = result.per_follower[1]
            rows.append(RecoveryRow(
                seed=seed, injected_ms=injected, segment=s, recovered_ms=tau,
                error_frames=abs(tau - injected) / frame_ms,
                low_confidence=result.low_confidence.get(1, False),
            ))
    hits = sum(1 for r in rows if r.error_frames <= 1.0 + 1e-9)
    return rows, hits / len(rows) if rows else 0.0
