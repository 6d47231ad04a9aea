"""Color mapping and exportable heatmap/overlay artifacts.

The engine never rasterizes video: overlays are emitted as colored edge
coordinates for the client to composite, and the 1D heatmaps as SVG.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator

from .motion_model import BODY_PART_EDGES, BODY_PART_NAMES
from .pose_similarity import bpd_max

if TYPE_CHECKING:
    from .scoring_service import AnalysisReport

# Single-hue ramp endpoints for the 1D heatmaps (white -> dark red for pose,
# white -> dark blue for temporal).
POSE_RAMP_END = (139, 0, 0)
TEMPORAL_RAMP_END = (0, 0, 139)
OCCLUDED_GRAY = (128, 128, 128)

SVG_CELL_W = 28
SVG_CELL_H = 22
SVG_PAD = 2


@dataclass(frozen=True)
class ColorStop:
    r: int
    g: int
    b: int

    def __post_init__(self):
        for v in (self.r, self.g, self.b):
            if not 0 <= v <= 255:
                raise ValueError(f"channel {v} outside [0, 255]")

    @property
    def hex(self) -> str:
        return f"#{self.r:02x}{self.g:02x}{self.b:02x}"

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.r, self.g, self.b)


def _jet_channel(u: float, x0: float) -> int:
    return int(round(min(max(1.5 - abs(4.0 * u - x0), 0.0), 1.0) * 255))


def jet_color(u: float) -> ColorStop:
    """Piecewise-linear blue-to-red spectrum over [0, 1].

    channel(x0) = clamp(1.5 - |4u - x0|, 0, 1) * 255 with x0 = 3 (red),
    2 (green), 1 (blue). Out-of-range inputs clamp, never error.
    """
    u = min(max(float(u), 0.0), 1.0)
    return ColorStop(_jet_channel(u, 3.0), _jet_channel(u, 2.0), _jet_channel(u, 1.0))


def bpd_to_color_input(bpd: float, lam: float) -> float:
    """Normalize a BPD value by its theoretical maximum into [0, 1]."""
    if bpd < 0:
        raise ValueError("bpd must be non-negative")
    return min(max(bpd / bpd_max(lam), 0.0), 1.0)


def ramp_color(u: float, end_rgb: tuple[int, int, int]) -> ColorStop:
    """Linear white -> end_rgb ramp; u clamped to [0, 1]."""
    u = min(max(float(u), 0.0), 1.0)
    return ColorStop(*(int(round(255 + (c - 255) * u)) for c in end_rgb))


def heatmap_svg(intensities: list[float], end_rgb: tuple[int, int, int],
                kind: str, scores: list[float]) -> str:
    """One rect per segment; data attributes carry the segment and raw score."""
    cells = []
    for s, (u, score) in enumerate(zip(intensities, scores)):
        color = ramp_color(u, end_rgb)
        x = SVG_PAD + s * SVG_CELL_W
        cells.append(
            f'<rect x="{x}" y="{SVG_PAD}" width="{SVG_CELL_W - 2}" height="{SVG_CELL_H}" '
            f'fill="{color.hex}" stroke="#444" data-segment="{s}" data-score="{score!r}"/>'
        )
    width = SVG_PAD * 2 + len(intensities) * SVG_CELL_W
    height = SVG_CELL_H + SVG_PAD * 2
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'data-kind="{kind}">' + "".join(cells) + "</svg>"
    )


def pose_heatmap_svg(report: "AnalysisReport") -> str:
    ops = [sc.ops_mean for sc in report.segment_scores]
    return heatmap_svg([1.0 - v for v in ops], POSE_RAMP_END, "pose", ops)


def temporal_heatmap_svg(report: "AnalysisReport") -> str:
    taus = [sc.tau_total_ms for sc in report.segment_scores]
    cap = report.config.tau_cap_ms
    return heatmap_svg([min(1.0, t / cap) for t in taus], TEMPORAL_RAMP_END, "temporal", taus)


def overlay_record(report: "AnalysisReport", frame: int) -> dict:
    """Per-dancer colored edges with endpoint pixel coordinates for one frame."""
    t = frame
    bpd_row = report.bpd_values[t]
    valid_row = report.bpd_valid[t]
    dancers = []
    for j in range(report.dancer_count):
        xy = report.coords[j, t]
        edges = []
        for i, (a, b) in enumerate(BODY_PART_EDGES):
            if valid_row[i]:
                color = jet_color(bpd_to_color_input(float(bpd_row[i]), report.config.lam))
                occluded = False
            else:
                color = ColorStop(*OCCLUDED_GRAY)
                occluded = True
            edges.append({
                "part": BODY_PART_NAMES[i],
                "color": list(color.as_tuple()),
                "from": [float(xy[a, 0]), float(xy[a, 1])],
                "to": [float(xy[b, 0]), float(xy[b, 1])],
                "occluded": occluded,
            })
        dancers.append({"dancer": j, "edges": edges})
    return {"frame": int(report.frame_indices[t]), "dancers": dancers}


def overlay_stream(report: "AnalysisReport") -> Iterator[dict]:
    for t in range(report.n_frames):
        yield overlay_record(report, t)


def export_heatmaps(report: "AnalysisReport", format: str = "svg"):
    """Export the report's 1D heatmaps plus the per-frame overlay stream.

    format "svg" returns {"pose": svg, "temporal": svg}; "object-stream"
    returns the overlay records as one JSON object per line.
    """
    if format == "svg":
        return {"pose": pose_heatmap_svg(report), "temporal": temporal_heatmap_svg(report)}
    if format == "object-stream":
        return "\n".join(json.dumps(rec) for rec in overlay_stream(report)) + "\n"
    raise ValueError(f"unknown export format {format!r}")
