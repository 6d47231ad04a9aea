import numpy as np
import pytest

from syncup.motion_model import PoseFrame, Recording, Skeleton


def random_skeleton(rng, center=(400.0, 300.0), spread=120.0, confidence=0.9):
    xy = rng.uniform(-spread, spread, size=(18, 2)) + np.asarray(center)
    return Skeleton.from_arrays(xy, np.full(18, confidence))


def make_recording(skeletons_per_frame, fps=30.0, rec_id="fixture"):
    """skeletons_per_frame: list (frames) of lists of Skeleton."""
    frames = tuple(
        PoseFrame(frame_index=t, time_ms=t * 1000.0 / fps, skeletons=tuple(sks))
        for t, sks in enumerate(skeletons_per_frame)
    )
    return Recording(id=rec_id, fps=fps, frames=frames)


def stream_text(n_frames=2, n_skeletons=3, fps=30.0, rng=None):
    """Valid pose-stream text for parser tests."""
    import json

    rng = rng or np.random.default_rng(0)
    lines = [json.dumps({"fps": fps, "recording_id": "fixture"})]
    for t in range(n_frames):
        skeletons = []
        for _ in range(n_skeletons):
            kps = [[float(x), float(y), 0.9]
                   for x, y in rng.uniform(0, 500, size=(18, 2))]
            skeletons.append({"keypoints": kps})
        lines.append(json.dumps({"frame": t, "time_ms": t * 1000.0 / fps,
                                 "skeletons": skeletons}))
    return "\n".join(lines)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
