"""Identity-consistent dancer tracking across frames.

Matching assumes the same dancer barely moves between consecutive frames, so
assignment minimizes the summed keypoint distance. Exhaustive permutation
search is used for small groups, the Hungarian algorithm beyond that; both
are exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import permutations
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EmptyRecording
from .motion_model import Recording, Skeleton, modal_skeleton_count

# Exhaustive search stays cheap up to 4! = 24 candidate mappings and gives a
# guaranteed lexicographic tie-break; larger groups go through scipy.
EXHAUSTIVE_LIMIT = 4


@dataclass(frozen=True)
class TrackedEntry:
    frame_index: int
    skeleton: Skeleton
    carried: bool


@dataclass(frozen=True)
class FrameAssignment:
    """Result of matching one frame's detections against known identities."""

    identity_for_next: tuple[int, ...]     # identity_for_next[k] = identity of next skeleton k (-1 if discarded)
    carried: tuple[int, ...]               # identities with no detection this frame
    discarded: tuple[int, ...]             # surplus detection positions
    total_cost: float


@dataclass(frozen=True)
class TrackedSequence:
    """Per-dancer skeleton timelines with one entry for every source frame."""

    dancer_count: int
    xy: np.ndarray            # (J, T, 18, 2)
    conf: np.ndarray          # (J, T, 18)
    carried: np.ndarray       # (J, T) bool
    frame_indices: np.ndarray  # (T,)
    times_ms: np.ndarray      # (T,)
    fps: float

    @property
    def n_frames(self) -> int:
        return self.xy.shape[1]

    def timeline(self, j: int) -> tuple[TrackedEntry, ...]:
        return tuple(
            TrackedEntry(
                int(self.frame_indices[t]),
                Skeleton.from_arrays(self.xy[j, t], self.conf[j, t]),
                bool(self.carried[j, t]),
            )
            for t in range(self.n_frames)
        )

    @cached_property
    def timelines(self) -> tuple[tuple[TrackedEntry, ...], ...]:
        return tuple(self.timeline(j) for j in range(self.dancer_count))


def skeleton_distance(a: Skeleton | np.ndarray, b: Skeleton | np.ndarray) -> float:
    """Sum over the 18 keypoints of the Euclidean distance between them."""
    xa = a.xy if isinstance(a, Skeleton) else np.asarray(a, dtype=float)
    xb = b.xy if isinstance(b, Skeleton) else np.asarray(b, dtype=float)
    return float(np.linalg.norm(xa - xb, axis=-1).sum())


def _cost_matrix(prev_xy: np.ndarray, next_xy: np.ndarray) -> np.ndarray:
    # (J, 1, 18, 2) - (1, K, 18, 2) -> (J, K)
    diff = prev_xy[:, None] - next_xy[None, :]
    return np.linalg.norm(diff, axis=-1).sum(axis=-1)


def _solve_assignment(cost: np.ndarray) -> tuple[tuple[int, ...], float]:
    """Assign each column (detection) an identity row, minimizing total cost.

    cost is (J, K) with K <= J. Returns identity per column. Ties resolve to
    the lexicographically smallest identity tuple (guaranteed on the
    exhaustive path; the Hungarian path is deterministic).
    """
    j, k = cost.shape
    if j <= EXHAUSTIVE_LIMIT:
        best: tuple[int, ...] | None = None
        best_cost = np.inf
        for perm in permutations(range(j), k):
            c = float(cost[list(perm), range(k)].sum())
            if c < best_cost - 1e-12:
                best_cost = c
                best = perm
        assert best is not None
        return best, best_cost
    rows, cols = linear_sum_assignment(cost)
    identity = [0] * k
    for r, c in zip(rows, cols):
        identity[c] = int(r)
    return tuple(identity), float(cost[rows, cols].sum())


def assign_frame(prev: Sequence[Skeleton | np.ndarray], nxt: Sequence[Skeleton | np.ndarray]) -> FrameAssignment:
    """Match detections in the next frame to the identities held in prev.

    prev[i] is the current skeleton of identity i. When fewer detections than
    identities arrive, unmatched identities are reported carried; surplus
    detections (more than identities) are discarded worst-match-first.
    """
    prev_xy = np.stack([p.xy if isinstance(p, Skeleton) else np.asarray(p, float) for p in prev])
    next_xy = np.stack([n.xy if isinstance(n, Skeleton) else np.asarray(n, float) for n in nxt])
    j, k = len(prev), len(nxt)
    cost = _cost_matrix(prev_xy, next_xy)

    kept = list(range(k))
    if k > j:
        # Phantom detections are transient; drop the ones farthest from any
        # known identity.
        min_dist = cost.min(axis=0)
        order = np.argsort(min_dist, kind="stable")
        kept = sorted(int(i) for i in order[:j])

    identity_kept, total = _solve_assignment(cost[:, kept])

    identity_for_next = [-1] * k
    for pos, col in enumerate(kept):
        identity_for_next[col] = identity_kept[pos]
    matched = set(identity_kept)
    carried = tuple(i for i in range(j) if i not in matched)
    discarded = tuple(i for i in range(k) if identity_for_next[i] == -1)
    return FrameAssignment(tuple(identity_for_next), carried, discarded, total)


def track(r: Recording) -> TrackedSequence:
    """Assign consistent identities across all frames of a recording.

    The dancer count J is the modal skeleton count; identities are seeded
    from the earliest frame with exactly J skeletons, then propagated
    forward and backward so that every frame has an entry per dancer.
    """
    if not r.frames:
        raise EmptyRecording("cannot track an empty recording")
    n_frames = len(r.frames)
    j = modal_skeleton_count(r)
    if j < 1:
        raise EmptyRecording("recording has frames but no skeletons")

    seed = next(t for t, f in enumerate(r.frames) if len(f.skeletons) == j)

    xy = np.zeros((j, n_frames, 18, 2))
    conf = np.zeros((j, n_frames, 18))
    carried = np.zeros((j, n_frames), dtype=bool)

    for i, s in enumerate(r.frames[seed].skeletons):
        xy[i, seed] = s.xy
        conf[i, seed] = s.conf

    def step(t: int, ref: int) -> None:
        detections = r.frames[t].skeletons
        if not detections:
            xy[:, t] = xy[:, ref]
            conf[:, t] = conf[:, ref]
            carried[:, t] = True
            return
        assignment = assign_frame([xy[i, ref] for i in range(j)], detections)
        for pos, identity in enumerate(assignment.identity_for_next):
            if identity >= 0:
                xy[identity, t] = detections[pos].xy
                conf[identity, t] = detections[pos].conf
        for identity in assignment.carried:
            xy[identity, t] = xy[identity, ref]
            conf[identity, t] = conf[identity, ref]
            carried[identity, t] = True

    for t in range(seed + 1, n_frames):
        step(t, t - 1)
    for t in range(seed - 1, -1, -1):
        step(t, t + 1)

    return TrackedSequence(
        dancer_count=j,
        xy=xy,
        conf=conf,
        carried=carried,
        frame_indices=r.frame_indices.copy(),
        times_ms=r.times_ms.copy(),
        fps=r.fps,
    )
