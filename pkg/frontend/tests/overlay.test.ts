import { describe, expect, it } from "vitest";

import { buildStrokes } from "../src/overlay.js";
import { css, jetColor } from "../src/colors.js";
import type { OverlayRecord } from "../src/types.js";

const RECORD: OverlayRecord = {
  frame: 42,
  dancers: [
    {
      dancer: 0,
      edges: [
        { part: "head", color: [0, 0, 128], from: [100, 80], to: [100, 52], occluded: false },
        { part: "r_forearm", color: [128, 0, 0], from: [60, 120], to: [40, 150], occluded: false },
        { part: "l_shin", color: [128, 128, 128], from: [110, 300], to: [112, 340], occluded: true },
      ],
    },
  ],
};

describe("overlay strokes", () => {
  it("passes engine colors through untouched", () => {
    const strokes = buildStrokes(RECORD);
    // in-sync part: the engine's cold end of the spectrum
    expect(strokes[0].color).toBe(css(jetColor(0)));
    // out-of-sync part: the hot end
    expect(strokes[1].color).toBe(css(jetColor(1)));
  });

  it("renders occluded parts gray", () => {
    const strokes = buildStrokes(RECORD);
    expect(strokes[2].occluded).toBe(true);
    expect(strokes[2].color).toBe("rgb(128, 128, 128)");
  });

  it("scales coordinates into canvas space", () => {
    const strokes = buildStrokes(RECORD, 0.5, 2);
    expect(strokes[0].x1).toBe(50);
    expect(strokes[0].y1).toBe(160);
    expect(strokes[0].y2).toBe(104);
  });

  it("emits 13 strokes per dancer when all edges present", () => {
    const full: OverlayRecord = {
      frame: 0,
      dancers: [{
        dancer: 0,
        edges: Array.from({ length: 13 }, (_, i) => ({
          part: `edge${i}`,
          color: [0, 0, 128] as [number, number, number],
          from: [0, 0] as [number, number],
          to: [1, 1] as [number, number],
          occluded: false,
        })),
      }],
    };
    expect(buildStrokes(full)).toHaveLength(13);
  });
});
