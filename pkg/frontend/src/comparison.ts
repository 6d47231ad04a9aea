import type { ComparisonResponse } from "./types.js";
import { css, poseCellColor, temporalCellColor } from "./colors.js";

export interface ComparisonRow {
  label: string;
  poseColors: string[];      // one per segment; white when absent
  temporalColors: string[];
}

// One heatmap row per practice so improvement across rounds is visible at a
// glance. Rows align by segment index; a single practice is a single row.
export function comparisonRows(
  response: ComparisonResponse,
  tauCapMs = 500,
): ComparisonRow[] {
  return response.session_ids.map((id, row) => ({
    label: `practice ${response.practice_indices[row]} (${id})`,
    poseColors: response.ops[row].map((v) =>
      v === null ? "rgb(255, 255, 255)" : css(poseCellColor(v))),
    temporalColors: response.tau[row].map((v) =>
      v === null ? "rgb(255, 255, 255)" : css(temporalCellColor(v, tauCapMs))),
  }));
}
