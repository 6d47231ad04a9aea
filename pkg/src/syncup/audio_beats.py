"""Tempo estimation, beat tracking, 8-beat segmentation and music alignment.

The tracker is the classic two-stage dynamic-programming design: a spectral
flux onset envelope, a global tempo picked from its autocorrelation under a
log-Gaussian prior, then a DP over beat positions trading onset strength
against deviation from the ideal inter-beat interval.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.io import wavfile
from scipy.signal import correlate, correlation_lags, resample_poly

from .errors import (
    AudioTooShort,
    EnvelopeTooShort,
    LowCorrelation,
    NoTempoFound,
    TooFewBeats,
)
from .motion_model import Recording

TARGET_SR = 22050
WIN = 2048
HOP = 512
HOP_MS = HOP / TARGET_SR * 1000.0
# The rectified log-flux of an impulse peaks in the frame whose Hann ramp is
# rising over it; across impulse phases the impulse sits 1058..1570 samples
# into that frame, so the midpoint maps envelope index to event time within
# half a hop.
EVENT_OFFSET_MS = 1314.0 / TARGET_SR * 1000.0

BPM_MIN, BPM_MAX = 40.0, 240.0
TEMPO_PRIOR_BPM = 120.0
TEMPO_PRIOR_OCTAVES = 1.0
# DP transition tightness, applied on the unit-max-normalized envelope.
TIGHTNESS = 680.0

MIN_ENVELOPE_MS = 5000.0
LOW_CORRELATION_THRESHOLD = 0.3


@dataclass(frozen=True)
class OnsetEnvelope:
    """Non-negative onset-strength series sampled every hop_ms."""

    hop_ms: float
    values: np.ndarray
    t0_ms: float = 0.0  # absolute time of values[0]

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.hop_ms <= 0:
            raise ValueError("hop_ms must be positive")
        if self.values.size and (not np.all(np.isfinite(self.values)) or self.values.min() < 0):
            raise ValueError("envelope values must be finite and non-negative")

    @property
    def duration_ms(self) -> float:
        return len(self.values) * self.hop_ms

    def time_of(self, index: int | np.ndarray):
        return self.t0_ms + np.asarray(index) * self.hop_ms


@dataclass(frozen=True)
class BeatGrid:
    beat_times_ms: tuple[float, ...]
    bpm: float

    def __post_init__(self):
        times = np.asarray(self.beat_times_ms, dtype=float)
        if len(times) >= 2 and np.any(np.diff(times) <= 0):
            raise ValueError("beat times must be strictly increasing")


@dataclass(frozen=True)
class Segment:
    """One 8-beat window; segments tile the usable beat grid without overlap."""

    index: int
    start_ms: float
    end_ms: float
    frame_first: int
    frame_last: int

    @property
    def n_frames(self) -> int:
        return self.frame_last - self.frame_first + 1


def load_wav(source: str | bytes) -> tuple[np.ndarray, int]:
    """Read a PCM wave file (path or raw bytes) as mono float64."""
    if isinstance(source, bytes):
        sr, data = wavfile.read(io.BytesIO(source))
    else:
        sr, data = wavfile.read(source)
    data = np.asarray(data)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if np.issubdtype(data.dtype, np.integer):
        data = data.astype(float) / float(np.iinfo(data.dtype).max)
    else:
        data = data.astype(float)
    return data, int(sr)


def onset_envelope(audio: np.ndarray, sample_rate: int) -> OnsetEnvelope:
    """Half-wave-rectified log-spectral flux of the (resampled) signal."""
    if sample_rate < 8000:
        raise ValueError(f"sample_rate {sample_rate} below supported minimum 8000")
    audio = np.asarray(audio, dtype=float).ravel()
    if len(audio) < sample_rate:
        raise AudioTooShort(f"{len(audio) / sample_rate:.2f} s of audio; need >= 1 s")
    if sample_rate != TARGET_SR:
        from math import gcd
        g = gcd(TARGET_SR, sample_rate)
        audio = resample_poly(audio, TARGET_SR // g, sample_rate // g)

    if len(audio) < WIN + HOP:
        raise AudioTooShort("audio shorter than two analysis frames after resampling")
    frames = np.lib.stride_tricks.sliding_window_view(audio, WIN)[::HOP]
    mag = np.abs(np.fft.rfft(frames * np.hanning(WIN), axis=1))
    logmag = np.log1p(mag)
    flux = np.clip(np.diff(logmag, axis=0), 0.0, None).sum(axis=1)
    values = np.concatenate([[0.0], flux])
    return OnsetEnvelope(hop_ms=HOP_MS, values=values, t0_ms=EVENT_OFFSET_MS)


def _tempo_from_autocorrelation(values: np.ndarray, hop_ms: float) -> float:
    """Pick the global tempo lag by prior-weighted autocorrelation."""
    frame_rate = 1000.0 / hop_ms  # envelope samples per second
    # Slight smoothing spreads hop-quantized onsets across neighboring lags;
    # without it, alternating inter-onset intervals (e.g. 21/22 hops) leak
    # autocorrelation mass to the subharmonic lag and cause octave errors.
    smooth = np.convolve(values, np.hanning(5), mode="same")
    x = smooth - smooth.mean()
    ac = correlate(x, x, mode="full")[len(x) - 1:]
    if ac[0] <= 0:
        raise NoTempoFound("envelope has no energy")

    lag_min = max(1, int(round(frame_rate * 60.0 / BPM_MAX)))
    lag_max = min(len(ac) - 2, int(round(frame_rate * 60.0 / BPM_MIN)))
    if lag_max <= lag_min:
        raise EnvelopeTooShort("envelope too short for the tempo search range")

    lags = np.arange(lag_min, lag_max + 1)
    bpms = 60.0 * frame_rate / lags
    prior = np.exp(-0.5 * (np.log2(bpms / TEMPO_PRIOR_BPM) / TEMPO_PRIOR_OCTAVES) ** 2)
    score = ac[lags] * prior
    best = int(np.argmax(score))
    if ac[lags[best]] / ac[0] < 0.01:
        raise NoTempoFound("autocorrelation peak below noise floor")

    # Parabolic refinement around the winning lag.
    lag = float(lags[best])
    if 0 < best < len(score) - 1:
        a, b, c = score[best - 1], score[best], score[best + 1]
        denom = a - 2 * b + c
        if denom < 0:
            lag += 0.5 * (a - c) / denom
    bpm = 60.0 * frame_rate / lag
    return float(np.clip(bpm, BPM_MIN, BPM_MAX))


def _dp_beat_positions(env_unit: np.ndarray, period: float) -> tuple[np.ndarray, np.ndarray]:
    """Ellis-style DP: (beat indices, localscore) for the envelope."""
    n = len(env_unit)
    half = int(round(period))
    window = np.exp(-0.5 * (np.arange(-half, half + 1) * 32.0 / period) ** 2)
    localscore = np.convolve(env_unit, window, mode="same")

    lo_off = int(round(2 * period))
    hi_off = max(1, int(round(period / 2)))
    offsets = np.arange(-lo_off, -hi_off + 1)
    txcost = -TIGHTNESS * np.log(-offsets / period) ** 2

    backlink = np.full(n, -1, dtype=int)
    cumscore = localscore.copy()
    max_local = localscore.max()
    first_beat = True
    for i in range(n):
        prev = i + offsets
        valid = prev >= 0
        # A missing predecessor counts as an empty chain (score 0) at its
        # transition cost: starting a new chain near the ideal spacing is
        # free, which keeps early beats anchored to onsets.
        scores = txcost.copy()
        scores[valid] += cumscore[prev[valid]]
        k = int(np.argmax(scores))
        cumscore[i] = localscore[i] + scores[k]
        if (first_beat and localscore[i] < 0.01 * max_local) or not valid[k]:
            backlink[i] = -1
        else:
            backlink[i] = prev[k]
            first_beat = False

    # Backtrack from the globally best chain end. Quiet-zone continuations
    # never overtake it: they accumulate no onset strength.
    tail = int(np.argmax(cumscore))

    beats = [tail]
    while backlink[beats[-1]] >= 0:
        beats.append(int(backlink[beats[-1]]))
    return np.array(beats[::-1], dtype=int), localscore


def _trim_weak_beats(beats: np.ndarray, localscore: np.ndarray) -> np.ndarray:
    """Drop low-score beats that the DP extended into quiet lead-in/out."""
    if len(beats) < 3:
        return beats
    boe = np.convolve(localscore[beats], np.hanning(5), mode="same")
    threshold = 0.5 * float(np.sqrt(np.mean(boe ** 2)))
    valid = np.flatnonzero(boe > threshold)
    if valid.size == 0:
        return beats
    return beats[valid.min():valid.max() + 1]


def estimate_beats(env: OnsetEnvelope) -> BeatGrid:
    """Estimate tempo and beat times from an onset envelope.

    Beat times are invariant to the envelope's amplitude scale: the envelope
    is normalized to unit maximum before scoring.
    """
    if env.duration_ms < MIN_ENVELOPE_MS:
        raise EnvelopeTooShort(f"envelope {env.duration_ms:.0f} ms; need >= {MIN_ENVELOPE_MS:.0f} ms")
    peak = float(env.values.max()) if env.values.size else 0.0
    if peak <= 0:
        raise NoTempoFound("silent envelope")
    unit = env.values / peak

    bpm0 = _tempo_from_autocorrelation(unit, env.hop_ms)
    frame_rate = 1000.0 / env.hop_ms
    period = frame_rate * 60.0 / bpm0
    beat_idx, localscore = _dp_beat_positions(unit, period)
    if len(beat_idx) >= 5:
        # Second pass with the period observed in the first chain; a small
        # tempo bias otherwise drags early beats off their onsets.
        period = float(np.mean(np.diff(beat_idx)))
        beat_idx, localscore = _dp_beat_positions(unit, period)
    beat_idx = _trim_weak_beats(beat_idx, localscore)
    if len(beat_idx) < 2:
        raise NoTempoFound("fewer than two beats tracked")

    times = env.time_of(beat_idx)
    ibis = np.diff(times)
    bpm = float(60000.0 / ibis.mean())
    return BeatGrid(beat_times_ms=tuple(float(t) for t in times), bpm=bpm)


def build_segments(grid: BeatGrid, r: Recording | None = None, *, times_ms: Sequence[float] | None = None,
                   fps: float | None = None) -> list[Segment]:
    """Group the beat grid into consecutive 8-beat segments over a recording.

    Segments start at the first beat at/after the recording start; a trailing
    group of fewer than 8 beats is dropped. frame_first/frame_last index into
    the recording's frame sequence.
    """
    if r is not None:
        times = r.times_ms
        frame_period = 1000.0 / r.fps
    else:
        if times_ms is None or fps is None:
            raise ValueError("need either a Recording or times_ms + fps")
        times = np.asarray(times_ms, dtype=float)
        frame_period = 1000.0 / fps

    beats = np.asarray(grid.beat_times_ms, dtype=float)
    rec_start, rec_end = float(times[0]), float(times[-1])
    usable = beats[(beats >= rec_start - 1e-9) & (beats <= rec_end + frame_period)]
    if len(usable) < 9:
        raise TooFewBeats(f"{len(usable)} usable beats over the recording; need >= 9")

    n_segments = (len(usable) - 1) // 8
    segments = []
    for s in range(n_segments):
        start, end = float(usable[8 * s]), float(usable[8 * s + 8])
        inside = np.flatnonzero((times >= start) & (times < end))
        if inside.size == 0:
            continue
        segments.append(Segment(
            index=len(segments),
            start_ms=start,
            end_ms=end,
            frame_first=int(inside[0]),
            frame_last=int(inside[-1]),
        ))
    if not segments:
        raise TooFewBeats("no segment overlaps the recording frames")
    return segments


def align_recordings(env_a: OnsetEnvelope, env_b: OnsetEnvelope) -> float:
    """Lag (ms) maximizing normalized cross-correlation of two envelopes.

    Positive offset means b starts later than a. Raises LowCorrelation when
    the peak normalized correlation suggests different music.
    """
    if abs(env_a.hop_ms - env_b.hop_ms) > 1e-9:
        raise ValueError("envelopes must share hop_ms")
    for env in (env_a, env_b):
        if env.duration_ms < MIN_ENVELOPE_MS:
            raise EnvelopeTooShort(f"envelope {env.duration_ms:.0f} ms; need >= {MIN_ENVELOPE_MS:.0f} ms")

    a = env_a.values - env_a.values.mean()
    b = env_b.values - env_b.values.mean()
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    if denom <= 0:
        raise LowCorrelation(0.0, LOW_CORRELATION_THRESHOLD)

    cc = correlate(b, a, mode="full")
    lags = correlation_lags(len(b), len(a), mode="full")
    best = int(np.argmax(cc))
    peak = float(cc[best] / denom)
    if peak < LOW_CORRELATION_THRESHOLD:
        raise LowCorrelation(peak, LOW_CORRELATION_THRESHOLD)
    return float(lags[best]) * env_a.hop_ms


def parse_beat_file(text: str) -> BeatGrid:
    """Beat-file format: one beat time in ms per line, optional header bpm=<v>."""
    bpm = None
    times = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.lower().startswith("bpm="):
            bpm = float(line.split("=", 1)[1])
            continue
        times.append(float(line))
    if len(times) < 2:
        raise TooFewBeats("beat file needs at least two beat times")
    arr = np.asarray(times, dtype=float)
    if np.any(np.diff(arr) <= 0):
        raise ValueError("beat times must be strictly increasing")
    if bpm is None:
        bpm = float(60000.0 / np.diff(arr).mean())
    return BeatGrid(beat_times_ms=tuple(times), bpm=bpm)


def constant_grid(bpm: float, end_ms: float, start_ms: float = 0.0) -> BeatGrid:
    """Constant-tempo grid anchored at start_ms, covering [start_ms, end_ms]."""
    if bpm <= 0:
        raise ValueError("bpm must be positive")
    period = 60000.0 / bpm
    n = int(np.floor((end_ms - start_ms) / period)) + 2
    times = start_ms + period * np.arange(max(n, 2))
    return BeatGrid(beat_times_ms=tuple(float(t) for t in times), bpm=float(bpm))
