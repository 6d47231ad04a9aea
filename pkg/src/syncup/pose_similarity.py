"""Per-frame, per-body-part pose distance (BPD) across dancers.

Each skeleton reduces to 13 unit direction vectors, one per body-part edge;
only orientation survives, which removes scale differences from body height
and camera distance. Per part, the distance is the accumulated deviation of
each dancer's unit vector from the group mean vector, normalized by dancer
count and sharpened by the exponent lambda.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .motion_model import BODY_PART_EDGES, DEFAULT_CONFIDENCE_THRESHOLD, Skeleton
from .tracker import TrackedSequence

DEFAULT_LAMBDA = 0.885
# The published sensitivity sweep: 10 log-uniform values over [0.333, 3].
LAMBDA_GRID = tuple(float(v) for v in np.round(
    np.exp(np.linspace(np.log(0.333), np.log(3.0), 10)), 3))

ZERO_LENGTH_EPS = 1e-6

_EDGE_FROM = np.array([e[0] for e in BODY_PART_EDGES])
_EDGE_TO = np.array([e[1] for e in BODY_PART_EDGES])


@dataclass(frozen=True)
class BodyPartVectors:
    """13 unit direction vectors for one skeleton; invalid entries are masked."""

    vectors: np.ndarray  # (13, 2)
    valid: np.ndarray    # (13,) bool


@dataclass(frozen=True)
class BpdFrame:
    """Per-part distances for one frame of a multi-dancer ensemble."""

    t: int
    bpd: np.ndarray                  # (13,), NaN where missing
    d_raw: np.ndarray                # (13,), NaN where missing
    reference: np.ndarray            # (13, 2) mean unit vectors, NaN where missing
    lam: float
    contributing_dancers: np.ndarray  # (13,) int

    @property
    def missing(self) -> np.ndarray:
        return self.contributing_dancers < 2


@dataclass(frozen=True)
class BpdSeries:
    """BPD over all frames of a tracked ensemble."""

    values: np.ndarray        # (T, 13), NaN where missing
    valid: np.ndarray         # (T, 13) bool
    reference: np.ndarray     # (T, 13, 2)
    lam: float

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]


def unit_edge_vectors(xy: np.ndarray, conf: np.ndarray,
                      confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized body-part unit vectors.

    xy is (..., 18, 2), conf (..., 18). Returns ((..., 13, 2) unit vectors,
    (..., 13) validity). An edge is invalid when either endpoint confidence
    is below threshold or the segment has (near) zero length.
    """
    xy = np.asarray(xy, dtype=float)
    conf = np.asarray(conf, dtype=float)
    disp = xy[..., _EDGE_TO, :] - xy[..., _EDGE_FROM, :]
    norm = np.linalg.norm(disp, axis=-1)
    valid = (
        (conf[..., _EDGE_FROM] >= confidence_threshold)
        & (conf[..., _EDGE_TO] >= confidence_threshold)
        & (norm >= ZERO_LENGTH_EPS)
    )
    safe = np.where(norm > 0, norm, 1.0)
    vectors = disp / safe[..., None]
    vectors = np.where(valid[..., None], vectors, 0.0)
    return vectors, valid


def body_part_vectors(s: Skeleton, confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD) -> BodyPartVectors:
    """13 unit direction vectors for one skeleton."""
    vectors, valid = unit_edge_vectors(s.xy, s.conf, confidence_threshold)
    return BodyPartVectors(vectors=vectors, valid=valid)


def bpd_frame(dancers: list[BodyPartVectors], lam: float = DEFAULT_LAMBDA, t: int = 0) -> BpdFrame:
    """BPD over one frame given each dancer's body-part vectors.

    Per part i with J_i >= 2 valid dancers: the reference is the plain mean
    of the valid unit vectors (not re-normalized), d = sum of distances to
    it, and BPD = (d / J_i) ** lambda. Parts with fewer than two valid
    dancers are flagged missing, not fatal.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    vectors = np.stack([d.vectors for d in dancers])  # (J, 13, 2)
    valid = np.stack([d.valid for d in dancers])      # (J, 13)
    bpd, d_raw, reference, contributing = _bpd_core(vectors[:, None], valid[:, None], lam)
    return BpdFrame(
        t=t,
        bpd=bpd[0],
        d_raw=d_raw[0],
        reference=reference[0],
        lam=lam,
        contributing_dancers=contributing[0],
    )


def _bpd_core(vectors: np.ndarray, valid: np.ndarray, lam: float):
    """Shared BPD math. vectors (J, T, 13, 2), valid (J, T, 13)."""
    contributing = valid.sum(axis=0)                      # (T, 13)
    ok = contributing >= 2
    denom = np.where(contributing > 0, contributing, 1)
    masked = np.where(valid[..., None], vectors, 0.0)
    reference = masked.sum(axis=0) / denom[..., None]     # (T, 13, 2)
    dist = np.linalg.norm(vectors - reference[None], axis=-1)  # (J, T, 13)
    d_raw = np.where(valid, dist, 0.0).sum(axis=0)        # (T, 13)
    with np.errstate(invalid="ignore"):
        bpd = np.where(ok, (d_raw / denom) ** lam, np.nan)
    d_raw = np.where(ok, d_raw, np.nan)
    reference = np.where(ok[..., None], reference, np.nan)
    return bpd, d_raw, reference, contributing


def bpd_series(tracked: TrackedSequence, lam: float = DEFAULT_LAMBDA,
               confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD) -> BpdSeries:
    """BPD for every frame of a tracked ensemble, vectorized across frames."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    vectors, valid = unit_edge_vectors(tracked.xy, tracked.conf, confidence_threshold)
    bpd, _, reference, contributing = _bpd_core(vectors, valid, lam)
    return BpdSeries(values=bpd, valid=contributing >= 2, reference=reference, lam=lam)


def bpd_max(lam: float) -> float:
    """Theoretical per-part maximum: opposed unit vectors give d/J = 2."""
    return float(2.0 ** lam)
