import json

import numpy as np
import pytest

from syncup.render import (
    OCCLUDED_GRAY,
    ColorStop,
    bpd_to_color_input,
    export_heatmaps,
    jet_color,
    ramp_color,
)


def jet_oracle(u):
    """Independent evaluation of the declared piecewise formula."""
    u = min(max(u, 0.0), 1.0)
    out = []
    for x0 in (3.0, 2.0, 1.0):
        v = 1.5 - abs(4.0 * u - x0)
        out.append(int(round(min(max(v, 0.0), 1.0) * 255)))
    return tuple(out)


# Golden values frozen from the formula oracle above:
#   u=0.0  -> (0, 0, 128); u=0.25 -> (0, 128, 255); u=0.5 -> (128, 255, 128)
#   u=0.75 -> (255, 128, 0); u=1.0 -> (128, 0, 0)
JET_GOLDENS = {
    0.0: (0, 0, 128),
    0.25: (0, 128, 255),
    0.5: (128, 255, 128),
    0.75: (255, 128, 0),
    1.0: (128, 0, 0),
}


@pytest.mark.parametrize("u,expected", sorted(JET_GOLDENS.items()))
def test_jet_goldens(u, expected):
    assert jet_oracle(u) == expected  # goldens really come from the formula
    assert jet_color(u).as_tuple() == expected


def test_jet_matches_oracle_densely():
    for u in np.linspace(0, 1, 101):
        assert jet_color(float(u)).as_tuple() == jet_oracle(float(u))


def test_jet_clamps_out_of_range():
    assert jet_color(-3.0).as_tuple() == jet_color(0.0).as_tuple()
    assert jet_color(42.0).as_tuple() == jet_color(1.0).as_tuple()


def test_jet_hue_order_blue_to_red():
    """Channel peaks appear in blue, green, red order as u rises."""
    us = np.linspace(0, 1, 401)
    colors = np.array([jet_color(float(u)).as_tuple() for u in us])
    blue_peak = us[int(np.argmax(colors[:, 2]))]
    green_peak = us[int(np.argmax(colors[:, 1]))]
    red_peak = us[int(np.argmax(colors[:, 0]))]
    assert blue_peak < green_peak < red_peak


def test_bpd_to_color_input():
    assert bpd_to_color_input(0.0, 0.885) == 0.0
    assert bpd_to_color_input(2 ** 0.885, 0.885) == 1.0
    assert bpd_to_color_input(1.0, 1.0) == pytest.approx(0.5)
    assert bpd_to_color_input(99.0, 1.0) == 1.0
    with pytest.raises(ValueError):
        bpd_to_color_input(-0.1, 1.0)


def test_ramp_endpoints():
    assert ramp_color(0.0, (139, 0, 0)).as_tuple() == (255, 255, 255)
    assert ramp_color(1.0, (139, 0, 0)).as_tuple() == (139, 0, 0)
    assert ramp_color(1.0, (0, 0, 139)).as_tuple() == (0, 0, 139)


def test_color_stop_validates_channels():
    with pytest.raises(ValueError):
        ColorStop(-1, 0, 0)
    with pytest.raises(ValueError):
        ColorStop(0, 300, 0)


@pytest.fixture
def report(rng):
    from syncup.audio_beats import constant_grid
    from syncup.eval_harness import SyntheticSpec, generate
    from syncup.scoring_service import AnalysisConfig, RoleRecording, Session, analyze_session

    spec = SyntheticSpec(dancer_count=2, fps=30, duration_ms=16000, bpm=120,
                         angular_noise_sd=0.1, shuffle=False)
    streams = generate(spec, seed=1)
    rec = streams.recording()
    sess = Session(id="render-fixture", mode="group")
    sess.add_recording(RoleRecording(
        role="group", recording=rec,
        beats=constant_grid(120, end_ms=float(streams.times_ms[-1]))))
    return analyze_session(sess, AnalysisConfig(method="addition"))


def test_svg_heatmaps(report):
    svgs = export_heatmaps(report, "svg")
    assert svgs["pose"].startswith("<svg")
    assert svgs["pose"].count("<rect") == len(report.segments)
    assert 'data-segment="0"' in svgs["pose"]
    assert svgs["temporal"].count("<rect") == len(report.segments)


def test_svg_white_for_perfect_segments(report):
    # ops_mean = 1 -> white cell; tau_total = 0 -> white cell
    from syncup.render import heatmap_svg
    svg = heatmap_svg([0.0], (139, 0, 0), "pose", [1.0])
    assert "#ffffff" in svg
    svg_t = heatmap_svg([0.0], (0, 0, 139), "temporal", [0.0])
    assert "#ffffff" in svg_t


def test_overlay_stream_schema(report):
    stream = export_heatmaps(report, "object-stream")
    lines = stream.strip().splitlines()
    assert len(lines) == report.n_frames
    rec = json.loads(lines[5])
    assert rec["frame"] == int(report.frame_indices[5])
    assert len(rec["dancers"]) == report.dancer_count
    edges = rec["dancers"][0]["edges"]
    assert len(edges) == 13
    for e in edges:
        assert len(e["color"]) == 3 and len(e["from"]) == 2 and len(e["to"]) == 2


def test_overlay_occluded_parts_gray(report):
    from syncup.render import overlay_record
    report.bpd_valid[7, :] = False  # force a fully occluded frame
    rec = overlay_record(report, 7)
    for dancer in rec["dancers"]:
        for e in dancer["edges"]:
            assert tuple(e["color"]) == OCCLUDED_GRAY
            assert e["occluded"]


def test_unknown_format_rejected(report):
    with pytest.raises(ValueError):
        export_heatmaps(report, "gif")
