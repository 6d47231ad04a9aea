import numpy as np
import pytest

from syncup.audio_beats import Segment, build_segments, constant_grid
from syncup.errors import InsufficientContext, TooShort
from syncup.eval_harness import SyntheticSpec, generate
from syncup.temporal_alignment import (
    ImpactEnvelope,
    alignment_for_segment,
    dancer_impact_envelope,
    flow_array,
    impact_envelope,
    pose_flow,
    posegram,
    segment_alignment,
)


def segs_of(n_segments, seg_frames):
    return [Segment(index=i, start_ms=0, end_ms=0,
                    frame_first=i * seg_frames, frame_last=(i + 1) * seg_frames - 1)
            for i in range(n_segments)]


def spiky_envelope(rng, n, density=0.08):
    """Aperiodic spike train: unique correlation structure."""
    values = np.zeros(n)
    spikes = rng.random(n) < density
    values[spikes] = rng.uniform(0.5, 2.0, spikes.sum())
    return values


# --- pose flow -----------------------------------------------------------------

def test_flow_static_dancer_zero(rng):
    xy = np.tile(rng.uniform(0, 500, (18, 2)), (10, 1, 1))
    flows = pose_flow(xy)
    assert len(flows) == 9
    for f in flows:
        np.testing.assert_array_equal(f.displacements, 0.0)


def test_flow_uniform_drift(rng):
    base = rng.uniform(0, 500, (18, 2))
    xy = np.stack([base + t * np.array([2.0, 0.0]) for t in range(8)])
    for f in pose_flow(xy):
        np.testing.assert_allclose(f.displacements, np.tile([2.0, 0.0], (18, 1)), atol=1e-9)


def test_flow_reversal_negates(rng):
    """Oracle: flow of the reversed timeline equals the negated, reversed flow."""
    xy = rng.uniform(0, 500, (12, 18, 2))
    fwd = flow_array(xy)
    rev = flow_array(xy[::-1])
    np.testing.assert_allclose(rev, -fwd[::-1], atol=1e-12)


def test_flow_needs_two_frames(rng):
    with pytest.raises(TooShort):
        pose_flow(rng.uniform(0, 10, (1, 18, 2)))


def test_flow_confidence_mask(rng):
    xy = rng.uniform(0, 500, (5, 18, 2))
    conf = np.full((5, 18), 0.9)
    conf[2, 4] = 0.05  # keypoint 4 unreliable at frame 2
    flow = flow_array(xy, conf, confidence_threshold=0.2)
    np.testing.assert_array_equal(flow[1, 4], 0.0)  # frames 1->2
    np.testing.assert_array_equal(flow[2, 4], 0.0)  # frames 2->3
    assert np.any(flow[0, 4] != 0.0)


# --- posegram --------------------------------------------------------------------

def test_posegram_hand_case():
    """One keypoint moving right at speed 5 with 16 bins: the indicator
    includes every bin within 2*pi/16 of angle 0, i.e. bins 15, 0, 1."""
    flow = np.zeros((1, 18, 2))
    flow[0, 0] = [5.0, 0.0]
    pg = posegram(flow, n_bins=16)
    expected = np.zeros(16)
    expected[[15, 0, 1]] = 5.0
    np.testing.assert_allclose(pg.matrix[0], expected, atol=1e-12)


def test_posegram_rotation_equivariance(rng):
    """Rotating displacements by one bin width circularly shifts the columns."""
    n_bins = 16
    flow = rng.normal(0, 3, (6, 18, 2))
    theta = 2 * np.pi / n_bins
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    rotated = flow @ rot.T
    a = posegram(flow, n_bins).matrix
    b = posegram(rotated, n_bins).matrix
    np.testing.assert_allclose(np.roll(a, 1, axis=1), b, atol=1e-9)


def test_posegram_static_frame_zero():
    pg = posegram(np.zeros((3, 18, 2)), n_bins=16)
    np.testing.assert_array_equal(pg.matrix, 0.0)


def test_posegram_mass_at_least_total_magnitude(rng):
    flow = rng.normal(0, 4, (5, 18, 2))
    pg = posegram(flow, 16)
    mags = np.linalg.norm(flow, axis=2).sum(axis=1)
    assert np.all(pg.matrix.sum(axis=1) >= mags - 1e-9)


def test_posegram_rejects_bad_bins(rng):
    with pytest.raises(ValueError):
        posegram(np.zeros((2, 18, 2)), n_bins=7)


# --- impact envelope --------------------------------------------------------------

def test_impact_constant_velocity_near_zero(rng):
    base = rng.uniform(0, 500, (18, 2))
    xy = np.stack([base + t * np.array([3.0, 1.0]) for t in range(20)])
    u = impact_envelope(posegram(flow_array(xy), 16))
    assert np.all(u.values[2:] < 1e-9)  # flux of constant motion vanishes


def test_impact_detects_motion_step(rng):
    base = rng.uniform(100, 400, (18, 2))
    xy = np.tile(base, (30, 1, 1))
    xy[10:] += [40.0, 0.0]  # abrupt move between frames 9 and 10
    u = impact_envelope(posegram(flow_array(xy), 16)).values
    assert int(np.argmax(u)) in (9, 10, 11)
    assert u.max() > 0


def test_impact_all_static_zero():
    xy = np.tile(np.arange(36.0).reshape(18, 2), (10, 1, 1))
    u = impact_envelope(posegram(flow_array(xy), 16))
    np.testing.assert_array_equal(u.values, 0.0)


def test_impact_matches_scalar_oracle(rng):
    flow = rng.normal(0, 2, (7, 18, 2))
    pg = posegram(flow, 16)
    u = impact_envelope(pg).values
    for t in range(1, 7):
        expected = sum(abs(pg.matrix[t, k] - pg.matrix[t - 1, k]) for k in range(16))
        assert u[t] == pytest.approx(expected, rel=1e-12)
    assert u[0] == 0.0


# --- segment alignment -------------------------------------------------------------

def test_alignment_recovers_injected_shift(rng):
    segs = segs_of(3, 120)
    base = spiky_envelope(rng, 360)
    for shift in (3, -5, 7):
        follower = np.roll(base, shift)
        est = segment_alignment(base, follower, segs, 1, fps=30.0)
        assert est.shift_frames == shift
        assert est.tau_ms == pytest.approx(shift * 1000.0 / 30.0)


def test_alignment_identical_zero(rng):
    segs = segs_of(3, 100)
    env = spiky_envelope(rng, 300)
    est = segment_alignment(env, env, segs, 1, fps=30.0)
    assert est.shift_frames == 0
    assert est.peak_corr == pytest.approx(1.0, abs=1e-9)


def test_alignment_quarter_second_delay(rng):
    """A follower 0.25 s behind at 30 fps: tau ~ +250 ms."""
    fps = 30.0
    segs = segs_of(3, 120)
    base = spiky_envelope(rng, 360)
    follower = np.roll(base, int(round(0.25 * fps)))
    est = segment_alignment(base, follower, segs, 1, fps=fps)
    assert abs(est.tau_ms - 250.0) <= 1000.0 / fps


def test_alignment_antisymmetric(rng):
    segs = segs_of(3, 110)
    base = spiky_envelope(rng, 330)
    follower = np.roll(base, 4)
    fwd = segment_alignment(base, follower, segs, 1, fps=30.0)
    rev = segment_alignment(follower, base, segs, 1, fps=30.0)
    assert abs(fwd.shift_frames + rev.shift_frames) <= 1


def test_alignment_amplitude_invariant(rng):
    segs = segs_of(3, 100)
    base = spiky_envelope(rng, 300)
    follower = np.roll(base, 5)
    a = segment_alignment(base, follower, segs, 1, fps=30.0)
    b = segment_alignment(base * 9.7, follower * 0.03, segs, 1, fps=30.0)
    assert a.shift_frames == b.shift_frames


def test_alignment_edge_segments_use_two_neighbors(rng):
    segs = segs_of(3, 100)
    base = spiky_envelope(rng, 300)
    follower = np.roll(base, 2)
    first = segment_alignment(base, follower, segs, 0, fps=30.0)
    last = segment_alignment(base, follower, segs, 2, fps=30.0)
    assert first.shift_frames == 2
    assert last.shift_frames == 2


def test_alignment_single_segment_insufficient(rng):
    segs = segs_of(1, 100)
    env = spiky_envelope(rng, 100)
    with pytest.raises(InsufficientContext):
        segment_alignment(env, env, segs, 0, fps=30.0)


def test_alignment_periodic_ambiguity_flagged(rng):
    """Strictly periodic envelopes alias; the smaller shift wins, flagged."""
    segs = segs_of(3, 120)
    t = np.arange(360)
    base = 1.0 + np.sin(2 * np.pi * t / 8.0)
    follower = np.roll(base, 8)  # exactly one period
    est = segment_alignment(base, follower, segs, 1, fps=30.0)
    assert est.low_confidence
    assert abs(est.shift_frames) <= 8


def test_alignment_degenerate_envelopes(rng):
    segs = segs_of(3, 80)
    flat = np.zeros(240)
    est = segment_alignment(flat, flat, segs, 1, fps=30.0)
    assert est.tau_ms == 0.0 and est.low_confidence


def test_gaussian_window_weight_at_boundaries(rng):
    """Sigma is half the center segment: weight ~0.6065 at its boundaries."""
    from syncup.temporal_alignment import _gaussian_window
    seg = Segment(index=1, start_ms=0, end_ms=0, frame_first=100, frame_last=199)
    w_center = _gaussian_window(np.array([149.5]), seg)[0]
    w_edge = _gaussian_window(np.array([100.0, 199.0]), seg)
    assert w_center == pytest.approx(1.0)
    assert np.all(np.abs(w_edge - np.exp(-0.5)) < 0.02)


# --- per-segment aggregation --------------------------------------------------------

def test_alignment_for_segment_sums_absolute(rng):
    spec = SyntheticSpec(dancer_count=3, fps=30, duration_ms=20000, bpm=120,
                         time_shifts_ms=(0.0, 100.0, -66.7), shuffle=False)
    streams = generate(spec, seed=4)
    tracked = streams.tracked()
    grid = constant_grid(120, end_ms=float(streams.times_ms[-1]))
    segments = build_segments(grid, times_ms=streams.times_ms, fps=30.0)
    res = alignment_for_segment(tracked, 0, segments, 2, fps=30.0)
    assert set(res.per_follower) == {1, 2}
    assert res.tau_total == pytest.approx(sum(abs(v) for v in res.per_follower.values()))
    assert res.per_follower[1] == pytest.approx(100.0, abs=34.0)
    assert res.per_follower[2] == pytest.approx(-66.7, abs=34.0)


def test_alignment_leader_with_self_zero(rng):
    spec = SyntheticSpec(dancer_count=2, fps=30, duration_ms=20000, bpm=120, shuffle=False)
    streams = generate(spec, seed=8)
    tracked = streams.tracked()
    grid = constant_grid(120, end_ms=float(streams.times_ms[-1]))
    segments = build_segments(grid, times_ms=streams.times_ms, fps=30.0)
    res = alignment_for_segment(tracked, 0, segments, 1, fps=30.0)
    assert res.per_follower[1] == 0.0
    assert res.tau_total == 0.0


def test_tau_total_invariant_to_follower_order(rng):
    spec = SyntheticSpec(dancer_count=4, fps=30, duration_ms=16000, bpm=120,
                         time_shifts_ms=(0.0, 100.0, -100.0, 33.0), shuffle=False)
    streams = generate(spec, seed=6)
    tracked = streams.tracked()
    grid = constant_grid(120, end_ms=float(streams.times_ms[-1]))
    segments = build_segments(grid, times_ms=streams.times_ms, fps=30.0)
    res = alignment_for_segment(tracked, 0, segments, 1, fps=30.0)
    total = sum(abs(res.per_follower[j]) for j in sorted(res.per_follower))
    total_rev = sum(abs(res.per_follower[j]) for j in sorted(res.per_follower, reverse=True))
    assert res.tau_total == total == total_rev


def test_envelope_via_dataclass_path(rng):
    spec = SyntheticSpec(dancer_count=2, fps=30, duration_ms=8000, bpm=120, shuffle=False)
    streams = generate(spec, seed=2)
    tracked = streams.tracked()
    env = dancer_impact_envelope(tracked, 0)
    assert isinstance(env, ImpactEnvelope)
    assert len(env.values) == tracked.n_frames - 1
    assert env.values.min() >= 0.0
