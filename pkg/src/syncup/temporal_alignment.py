"""Per-segment timing offsets between each follower and the leader.

Each dancer's motion is summarized as an impact envelope: keypoint
displacements are binned by direction into a posegram, differentiated over
time (flux, analogous to acceleration) and summed over bins. Envelopes of a
leader-follower pair, windowed over three consecutive segments and weighted
by a Gaussian centered on the middle one, are cross-correlated; the shift
with the highest normalized correlation is the follower's timing offset.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .audio_beats import Segment
from .errors import InsufficientContext, TooShort
from .motion_model import Skeleton
from .tracker import TrackedEntry, TrackedSequence

DEFAULT_N_BINS = 16
# Hard cap on the shift search; larger offsets are choreography errors and
# alias against 8-beat loops.
MAX_SHIFT_S = 1.5
# Secondary correlation peaks within this fraction of the best one mark the
# segment ambiguous (periodic motion); the smaller |shift| wins.
PEAK_AMBIGUITY_FRACTION = 0.05


@dataclass(frozen=True)
class PoseFlow:
    """Keypoint displacements between frame t and t+1."""

    t: int
    displacements: np.ndarray  # (18, 2) pixels/frame


@dataclass(frozen=True)
class Posegram:
    n_bins: int
    matrix: np.ndarray  # (frames, n_bins), non-negative magnitudes


@dataclass(frozen=True)
class ImpactEnvelope:
    values: np.ndarray                    # (frames,) >= 0
    window_weights: np.ndarray | None = None


@dataclass(frozen=True)
class TauEstimate:
    tau_ms: float
    shift_frames: int
    peak_corr: float
    low_confidence: bool


@dataclass(frozen=True)
class AlignmentResult:
    """Offsets of every follower against the leader for one segment."""

    segment: int
    per_follower: dict[int, float]        # follower id -> tau_ms (signed)
    correlation_peak: dict[int, float]
    low_confidence: dict[int, bool]
    failed: tuple[int, ...] = ()

    @property
    def tau_total(self) -> float:
        return float(sum(abs(v) for v in self.per_follower.values()))


def _timeline_xy(tl) -> np.ndarray:
    if isinstance(tl, np.ndarray):
        return np.asarray(tl, dtype=float)
    first = tl[0]
    if isinstance(first, TrackedEntry):
        return np.stack([e.skeleton.xy for e in tl])
    if isinstance(first, Skeleton):
        return np.stack([s.xy for s in tl])
    raise TypeError("timeline must be an (T, 18, 2) array or a sequence of skeletons")


def pose_flow(tl) -> list[PoseFlow]:
    """Displacements of all 18 keypoints between consecutive frames.

    Accepts a (T, 18, 2) array, tracked entries or skeletons. Carried frames
    duplicate coordinates exactly, so their displacement is zero.
    """
    xy = _timeline_xy(tl)
    if xy.shape[0] < 2:
        raise TooShort("need at least 2 frames for pose flow")
    disp = np.diff(xy, axis=0)
    return [PoseFlow(t=t, displacements=disp[t]) for t in range(disp.shape[0])]


def flow_array(tl, conf: np.ndarray | None = None,
               confidence_threshold: float = 0.0) -> np.ndarray:
    """(T-1, 18, 2) displacement array; the vectorized form of pose_flow.

    With confidences given, displacements whose endpoint keypoint is
    unreliable at either frame are zeroed: misdetections produce large
    spurious jumps that would otherwise swamp the impact envelope.
    """
    xy = _timeline_xy(tl)
    if xy.shape[0] < 2:
        raise TooShort("need at least 2 frames for pose flow")
    disp = np.diff(xy, axis=0)
    if conf is not None and confidence_threshold > 0:
        conf = np.asarray(conf, dtype=float)
        reliable = (conf[:-1] >= confidence_threshold) & (conf[1:] >= confidence_threshold)
        disp = np.where(reliable[..., None], disp, 0.0)
    return disp


def posegram(flow, n_bins: int = DEFAULT_N_BINS) -> Posegram:
    """Histogram of motion magnitude over direction bins, per frame.

    Bin centers sit at 2*pi*k/n_bins; a displacement contributes its full
    magnitude to every bin whose center lies within 2*pi/n_bins of its
    direction (so two or three bins). Zero displacements contribute nothing.
    """
    if n_bins < 4 or n_bins % 2:
        raise ValueError("n_bins must be even and >= 4")
    if isinstance(flow, list) and flow and isinstance(flow[0], PoseFlow):
        disp = np.stack([f.displacements for f in flow])
    else:
        disp = np.asarray(flow, dtype=float)
    mag = np.linalg.norm(disp, axis=-1)               # (T, 18)
    angle = np.arctan2(disp[..., 1], disp[..., 0])    # (T, 18) in (-pi, pi]

    centers = 2.0 * np.pi * np.arange(n_bins) / n_bins
    delta = np.abs(angle[..., None] - centers)        # (T, 18, n_bins)
    delta = np.mod(delta, 2.0 * np.pi)
    circ = np.minimum(delta, 2.0 * np.pi - delta)
    width = 2.0 * np.pi / n_bins
    member = circ <= width * (1.0 + 1e-12)
    moving = mag > 0.0
    contrib = np.where(member & moving[..., None], mag[..., None], 0.0)
    return Posegram(n_bins=n_bins, matrix=contrib.sum(axis=1))


def impact_envelope(pg: Posegram) -> ImpactEnvelope:
    """Total absolute posegram flux per frame; the first frame is zero."""
    if pg.matrix.shape[0] < 2:
        raise TooShort("posegram needs at least 2 frames")
    flux = np.abs(np.diff(pg.matrix, axis=0)).sum(axis=1)
    return ImpactEnvelope(values=np.concatenate([[0.0], flux]))


def dancer_impact_envelope(tracked: TrackedSequence, dancer: int,
                           n_bins: int = DEFAULT_N_BINS,
                           confidence_threshold: float = 0.2) -> ImpactEnvelope:
    """flow -> posegram -> impact envelope for one tracked dancer."""
    flow = flow_array(tracked.xy[dancer], tracked.conf[dancer], confidence_threshold)
    return impact_envelope(posegram(flow, n_bins))


def _gaussian_window(frames: np.ndarray, segment: Segment) -> np.ndarray:
    center = 0.5 * (segment.frame_first + segment.frame_last)
    sigma = max(segment.n_frames / 2.0, 1.0)
    return np.exp(-0.5 * ((frames - center) / sigma) ** 2)


def segment_alignment(leader: ImpactEnvelope | np.ndarray,
                      follower: ImpactEnvelope | np.ndarray,
                      segs: Sequence[Segment], s: int, fps: float,
                      max_shift_ms: float | None = None) -> TauEstimate:
    """Estimate the follower's timing offset in segment s.

    Both envelopes are restricted to segments s-1..s+1 (edge segments use
    the two available neighbors), weighted by a Gaussian centered on segment
    s with sigma of half its length, and cross-correlated over integer frame
    shifts. Positive tau means the follower is behind the leader.
    """
    lead = leader.values if isinstance(leader, ImpactEnvelope) else np.asarray(leader, float)
    foll = follower.values if isinstance(follower, ImpactEnvelope) else np.asarray(follower, float)
    if not 0 <= s < len(segs):
        raise IndexError(f"segment {s} out of range")
    context = [segs[i] for i in (s - 1, s, s + 1) if 0 <= i < len(segs)]
    if len(context) < 2:
        raise InsufficientContext(f"segment {s} has {len(context) - 1} neighbors; need at least 1")

    seg = segs[s]
    first = context[0].frame_first
    last = min(context[-1].frame_last, len(lead) - 1, len(foll) - 1)
    if last - first + 1 < 4:
        raise InsufficientContext("too few envelope frames in the context window")

    frames = np.arange(first, last + 1)
    weights = _gaussian_window(frames, seg)
    a = lead[first:last + 1] * weights
    b = foll[first:last + 1] * weights

    half_seg = seg.n_frames // 2
    bound = int(min(half_seg, round(MAX_SHIFT_S * fps)))
    if max_shift_ms is not None:
        bound = int(min(bound, round(max_shift_ms * fps / 1000.0)))
    bound = max(bound, 1)

    a0 = a - a.mean()
    b0 = b - b.mean()
    denom = float(np.linalg.norm(a0) * np.linalg.norm(b0))
    if denom <= 0:
        return TauEstimate(tau_ms=0.0, shift_frames=0, peak_corr=0.0, low_confidence=True)

    shifts = np.arange(-bound, bound + 1)
    corr = np.empty(len(shifts))
    n = len(a0)
    for i, k in enumerate(shifts):
        # corr(k) = sum_t leader(t) * follower(t + k): a follower delayed by
        # D frames peaks at k = +D.
        if k >= 0:
            corr[i] = float(a0[: n - k] @ b0[k:])
        else:
            corr[i] = float(a0[-k:] @ b0[: n + k])
    corr /= denom

    best = int(np.argmax(corr))
    peak = float(corr[best])
    low_confidence = False
    if peak > 0:
        is_max = np.ones(len(corr), dtype=bool)
        is_max[1:] = corr[1:] >= corr[:-1]
        is_max[:-1] &= corr[:-1] >= corr[1:]
        near = np.flatnonzero(is_max & (corr >= (1.0 - PEAK_AMBIGUITY_FRACTION) * peak))
        if len(near) > 1:
            # Periodic motion aliases: prefer the smallest |shift|.
            chosen = min(near, key=lambda i: (abs(int(shifts[i])), int(shifts[i])))
            if np.any(np.abs(shifts[near] - shifts[chosen]) > 1):
                low_confidence = True
            best = int(chosen)
            peak = float(corr[best])

    shift = int(shifts[best])
    return TauEstimate(
        tau_ms=shift * 1000.0 / fps,
        shift_frames=shift,
        peak_corr=peak,
        low_confidence=low_confidence,
    )


def alignment_for_segment(tracked: TrackedSequence, leader_id: int,
                          segs: Sequence[Segment], s: int, fps: float,
                          n_bins: int = DEFAULT_N_BINS,
                          max_shift_ms: float | None = None,
                          envelopes: Sequence[np.ndarray] | None = None) -> AlignmentResult:
    """Tau for every follower against the leader in segment s.

    Precomputed per-dancer envelopes may be passed to avoid recomputation;
    a failing follower is marked failed rather than failing the segment.
    """
    if not 0 <= leader_id < tracked.dancer_count:
        raise ValueError(f"leader {leader_id} out of range for {tracked.dancer_count} dancers")
    if envelopes is None:
        envelopes = [dancer_impact_envelope(tracked, j, n_bins).values
                     for j in range(tracked.dancer_count)]

    per_follower: dict[int, float] = {}
    peaks: dict[int, float] = {}
    low_conf: dict[int, bool] = {}
    failed = []
    for j in range(tracked.dancer_count):
        if j == leader_id:
            continue
        try:
            est = segment_alignment(envelopes[leader_id], envelopes[j], segs, s, fps, max_shift_ms)
        except InsufficientContext:
            raise
        except Exception:
            failed.append(j)
            continue
        per_follower[j] = est.tau_ms
        peaks[j] = est.peak_corr
        low_conf[j] = est.low_confidence

    return AlignmentResult(
        segment=s,
        per_follower=per_follower,
        correlation_peak=peaks,
        low_confidence=low_conf,
        failed=tuple(failed),
    )
