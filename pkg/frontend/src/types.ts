// Wire formats of the scoring service. The client never recomputes scores:
// every displayed number traces back to one of these fields.

export interface SegmentInfo {
  index: number;
  start_ms: number;
  end_ms: number;
  frame_first: number;
  frame_last: number;
}

export interface SegmentScore {
  s: number;
  ops_mean: number;
  tau_total_ms: number;
  combined: number;
  flags: string[];
  per_follower_tau: Record<string, number>;
  peak_corr: Record<string, number>;
}

export interface AnalysisReport {
  format: string;
  version: number;
  session_id: string;
  mode: "group" | "individual";
  practice_index: number;
  config: {
    lam: number;
    method: string;
    leader: number;
    n_bins: number;
    w_pose: number;
    w_time: number;
    tau_cap_ms: number;
    [key: string]: unknown;
  };
  dancer_count: number;
  fps: number;
  frame_indices: number[];
  times_ms: number[];
  segments: SegmentInfo[];
  segment_scores: SegmentScore[];
  ops: {
    method: string;
    values: number[];
    occluded: number[];
    missing: number[];
    segment_means: number[];
  };
  follower_offsets_ms: Record<string, number>;
}

export interface SpotlightEntry {
  s: number;
  ops_mean: number;
  tau_total_ms: number;
  combined: number;
  flags: string[];
}

export interface OverlayEdge {
  part: string;
  color: [number, number, number];
  from: [number, number];
  to: [number, number];
  occluded: boolean;
}

export interface OverlayRecord {
  frame: number;
  dancers: { dancer: number; edges: OverlayEdge[] }[];
}

export interface ComparisonResponse {
  session_ids: string[];
  practice_indices: number[];
  ops: (number | null)[][];
  tau: (number | null)[][];
}

export type PlaybackRate = 0.25 | 0.5 | 0.7 | 1.0;
export const PLAYBACK_RATES: readonly PlaybackRate[] = [0.25, 0.5, 0.7, 1.0];

export interface ViewState {
  sessionId: string;
  mode: "group" | "individual";
  currentSegment: number;
  playbackRate: PlaybackRate;
  leader: number;
  lambda: number;
  comparisonIds: string[];
}
