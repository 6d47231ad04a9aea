import type { PlaybackRate, SegmentInfo } from "./types.js";
import { PLAYBACK_RATES } from "./types.js";
import { followerTimeMs, seekTargetMs } from "./timeline.js";

// Minimal surface of HTMLVideoElement the player needs; tests substitute
// plain objects.
export interface VideoLike {
  currentTime: number;
  playbackRate: number;
  play(): unknown;
  pause(): unknown;
}

export class SyncedPlayer {
  private rate: PlaybackRate = 1.0;

  // followerOffsetMs shifts the right-hand video in individual mode; 0 in
  // group mode (both sides show the same file).
  constructor(
    private readonly left: VideoLike,
    private readonly right: VideoLike,
    public followerOffsetMs = 0,
  ) {}

  get playbackRate(): PlaybackRate {
    return this.rate;
  }

  setRate(rate: PlaybackRate): void {
    if (!PLAYBACK_RATES.includes(rate)) {
      throw new Error(`unsupported playback rate ${rate}`);
    }
    this.rate = rate;
    this.left.playbackRate = rate;
    this.right.playbackRate = rate;
  }

  seekMs(leaderMs: number): void {
    this.left.currentTime = leaderMs / 1000;
    this.right.currentTime = followerTimeMs(leaderMs, this.followerOffsetMs) / 1000;
  }

  // Click-to-replay: seek both videos to the segment start and play at the
  // selected rate. Re-clicking during playback re-seeks immediately.
  clickSegment(segment: SegmentInfo): void {
    this.seekMs(seekTargetMs(segment));
    this.setRate(this.rate);
    this.left.play();
    this.right.play();
  }

  pause(): void {
    this.left.pause();
    this.right.pause();
  }

  currentTimeMs(): number {
    return this.left.currentTime * 1000;
  }
}
