import type { SpotlightEntry } from "./types.js";

// The service already sorts spotlight entries (worst combined score first,
// missing segments last). The client must preserve that order exactly, so
// ordering is taken verbatim from the response and never re-sorted.

export interface SpotlightView {
  entries: SpotlightEntry[];
  order: number[];       // segment indices, response order
  rawText: string;       // byte-exact response body for order verification
}

export function parseSpotlight(rawText: string): SpotlightView {
  const body = JSON.parse(rawText) as { entries: SpotlightEntry[] };
  return {
    entries: body.entries,
    order: body.entries.map((e) => e.s),
    rawText,
  };
}

export function spotlightRows(view: SpotlightView): string[] {
  return view.entries.map((e) => {
    const flags = e.flags.length ? ` [${e.flags.join(", ")}]` : "";
    return `segment ${e.s}: combined ${e.combined.toFixed(3)}` +
      ` (pose ${e.ops_mean.toFixed(3)}, timing ${e.tau_total_ms.toFixed(0)} ms)${flags}`;
  });
}
