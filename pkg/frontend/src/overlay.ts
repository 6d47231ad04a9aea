import type { OverlayRecord } from "./types.js";
import { css, OCCLUDED_GRAY } from "./colors.js";

// Overlay records arrive with engine-computed colors; the client only
// scales coordinates into the canvas and strokes the 13 edges per dancer.

export interface Stroke {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  color: string;
  occluded: boolean;
}

export function buildStrokes(record: OverlayRecord, scaleX = 1, scaleY = 1): Stroke[] {
  const strokes: Stroke[] = [];
  for (const dancer of record.dancers) {
    for (const edge of dancer.edges) {
      strokes.push({
        x1: edge.from[0] * scaleX,
        y1: edge.from[1] * scaleY,
        x2: edge.to[0] * scaleX,
        y2: edge.to[1] * scaleY,
        color: css(edge.occluded ? OCCLUDED_GRAY : edge.color),
        occluded: edge.occluded,
      });
    }
  }
  return strokes;
}

export function drawOverlay(
  ctx: CanvasRenderingContext2D,
  record: OverlayRecord,
  scaleX: number,
  scaleY: number,
): void {
  ctx.lineWidth = 4;
  ctx.lineCap = "round";
  for (const stroke of buildStrokes(record, scaleX, scaleY)) {
    ctx.strokeStyle = stroke.color;
    ctx.globalAlpha = stroke.occluded ? 0.5 : 0.85;
    ctx.beginPath();
    ctx.moveTo(stroke.x1, stroke.y1);
    ctx.lineTo(stroke.x2, stroke.y2);
    ctx.stroke();
  }
  ctx.globalAlpha = 1;
}
