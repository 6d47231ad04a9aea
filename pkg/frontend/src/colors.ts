// Client-side color mapping. This is the only score-derived computation the
// client performs, and it must match the engine's golden values exactly:
//   jet(0) = (0,0,128), jet(0.5) = (128,255,128), jet(1) = (128,0,0).

export type Rgb = [number, number, number];

export const POSE_RAMP_END: Rgb = [139, 0, 0];
export const TEMPORAL_RAMP_END: Rgb = [0, 0, 139];
export const OCCLUDED_GRAY: Rgb = [128, 128, 128];

function clamp01(v: number): number {
  return Math.min(Math.max(v, 0), 1);
}

// round-half-even, matching the engine's integer conversion
function roundHalfEven(v: number): number {
  const floor = Math.floor(v);
  const diff = v - floor;
  if (diff > 0.5) return floor + 1;
  if (diff < 0.5) return floor;
  return floor % 2 === 0 ? floor : floor + 1;
}

function jetChannel(u: number, x0: number): number {
  return roundHalfEven(clamp01(1.5 - Math.abs(4 * u - x0)) * 255);
}

export function jetColor(u: number): Rgb {
  const v = clamp01(u);
  return [jetChannel(v, 3), jetChannel(v, 2), jetChannel(v, 1)];
}

export function bpdToColorInput(bpd: number, lambda: number): number {
  return clamp01(bpd / Math.pow(2, lambda));
}

export function rampColor(u: number, end: Rgb): Rgb {
  const v = clamp01(u);
  return [
    Math.round(255 + (end[0] - 255) * v),
    Math.round(255 + (end[1] - 255) * v),
    Math.round(255 + (end[2] - 255) * v),
  ];
}

export function css(rgb: Rgb): string {
  return `rgb(${rgb[0]}, ${rgb[1]}, ${rgb[2]})`;
}

// 1D heatmap cell colors: pose cells darken with 1 - ops_mean, temporal
// cells with tau_total / tau_cap.
export function poseCellColor(opsMean: number): Rgb {
  return rampColor(1 - opsMean, POSE_RAMP_END);
}

export function temporalCellColor(tauTotalMs: number, tauCapMs: number): Rgb {
  return rampColor(Math.min(1, tauTotalMs / tauCapMs), TEMPORAL_RAMP_END);
}
