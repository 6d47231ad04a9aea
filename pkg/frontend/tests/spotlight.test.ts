import { describe, expect, it } from "vitest";

import { parseSpotlight, spotlightRows } from "../src/spotlight.js";

// Deliberately NOT sorted by combined: the service owns the ordering
// (missing segments last, etc.) and the client must not reorder.
const RESPONSE_TEXT = JSON.stringify({
  entries: [
    { s: 2, ops_mean: 0.41, tau_total_ms: 240, combined: 0.455, flags: [] },
    { s: 0, ops_mean: 0.52, tau_total_ms: 120, combined: 0.64, flags: [] },
    { s: 3, ops_mean: 0.9, tau_total_ms: 20, combined: 0.93, flags: [] },
    { s: 1, ops_mean: 0.12, tau_total_ms: 0, combined: 0.56, flags: ["missing"] },
  ],
});

describe("spotlight ordering", () => {
  it("preserves the service response byte-for-byte", () => {
    const view = parseSpotlight(RESPONSE_TEXT);
    expect(view.rawText).toBe(RESPONSE_TEXT);
    // re-serializing the displayed entries reproduces the served ordering
    expect(JSON.stringify({ entries: view.entries })).toBe(RESPONSE_TEXT);
  });

  it("renders rows in response order, worst first", () => {
    const view = parseSpotlight(RESPONSE_TEXT);
    expect(view.order).toEqual([2, 0, 3, 1]);
    const rows = spotlightRows(view);
    expect(rows[0]).toContain("segment 2");
    expect(rows[3]).toContain("segment 1");
    expect(rows[3]).toContain("missing");
  });

  it("never sorts client-side even when combined values are shuffled", () => {
    const shuffled = JSON.stringify({
      entries: [
        { s: 9, ops_mean: 1, tau_total_ms: 0, combined: 1.0, flags: [] },
        { s: 4, ops_mean: 0, tau_total_ms: 500, combined: 0.0, flags: [] },
      ],
    });
    expect(parseSpotlight(shuffled).order).toEqual([9, 4]);
  });
});
