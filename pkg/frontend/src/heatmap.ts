import type { AnalysisReport } from "./types.js";
import { css, poseCellColor, temporalCellColor } from "./colors.js";

export interface HeatmapCell {
  s: number;
  color: string;
  title: string;
}

export function poseCells(report: AnalysisReport): HeatmapCell[] {
  return report.segment_scores.map((sc) => ({
    s: sc.s,
    color: css(poseCellColor(sc.ops_mean)),
    title: `segment ${sc.s}: OPS ${sc.ops_mean.toFixed(3)}`,
  }));
}

export function temporalCells(report: AnalysisReport): HeatmapCell[] {
  const cap = report.config.tau_cap_ms;
  return report.segment_scores.map((sc) => ({
    s: sc.s,
    color: css(temporalCellColor(sc.tau_total_ms, cap)),
    title: `segment ${sc.s}: total timing offset ${sc.tau_total_ms.toFixed(0)} ms`,
  }));
}

export interface HeatmapRowOptions {
  label: string;
  onClick?: (s: number) => void;
}

// One heatmap row; the cell for the playing segment gets the green
// highlight via setHighlight.
export class HeatmapRow {
  readonly element: HTMLDivElement;
  private cells: HTMLSpanElement[] = [];
  private highlighted = -1;

  constructor(cells: HeatmapCell[], options: HeatmapRowOptions) {
    this.element = document.createElement("div");
    this.element.className = "heatmap-row";
    const label = document.createElement("span");
    label.className = "heatmap-label";
    label.textContent = options.label;
    this.element.appendChild(label);
    for (const cell of cells) {
      const el = document.createElement("span");
      el.className = "heatmap-cell";
      el.style.background = cell.color;
      el.title = cell.title;
      el.dataset.segment = String(cell.s);
      if (options.onClick) {
        el.addEventListener("click", () => options.onClick!(cell.s));
      }
      this.element.appendChild(el);
      this.cells.push(el);
    }
  }

  setHighlight(segment: number): void {
    if (segment === this.highlighted) return;
    if (this.highlighted >= 0 && this.highlighted < this.cells.length) {
      this.cells[this.highlighted].classList.remove("highlight");
    }
    this.highlighted = segment;
    if (segment >= 0 && segment < this.cells.length) {
      this.cells[segment].classList.add("highlight");
    }
  }

  get highlightedSegment(): number {
    return this.highlighted;
  }
}
