import type { SegmentInfo } from "./types.js";

// The highlight index is always the floor-lookup of playback time in the
// segment boundaries: the segment whose [start_ms, end_ms) contains t.
export function segmentIndexAt(timeMs: number, segments: SegmentInfo[]): number {
  if (segments.length === 0 || timeMs < segments[0].start_ms) return -1;
  for (let i = segments.length - 1; i >= 0; i--) {
    if (timeMs >= segments[i].start_ms) {
      return timeMs < segments[i].end_ms ? i : i === segments.length - 1 ? -1 : i;
    }
  }
  return -1;
}

// Clicking a heatmap block replays its segment from the start.
export function seekTargetMs(segment: SegmentInfo): number {
  return segment.start_ms;
}

// A music moment at leader time t sits at follower time t + offset.
export function followerTimeMs(leaderTimeMs: number, offsetMs: number): number {
  return leaderTimeMs + offsetMs;
}
