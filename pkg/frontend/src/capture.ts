/** Paces landmark detection and frame emission. */

import type { Hand } from "./protocol.js";

export interface LandmarkSource {
  detect(nowMs: number): Hand[];
}

export interface FrameSink {
  sendFrame(hands: Hand[], tCaptureMs: number): unknown;
}

export const MAX_FPS = 30;

/**
 * Driven by tick(now) so the schedule source (rAF, setInterval, tests)
 * stays external. t_capture_ms is relative to the first emitted frame
 * and strictly increases even if the driving clock stalls within a ms.
 */
export class CaptureLoop {
  private readonly intervalMs: number;
  private origin: number | null = null;
  private lastEmit = -Infinity;
  private lastT = -1;

  constructor(
    private readonly source: LandmarkSource,
    private readonly sink: FrameSink,
    fps: number = MAX_FPS,
  ) {
    if (!(fps > 0)) throw new Error("fps must be positive");
    this.intervalMs = 1000 / Math.min(fps, MAX_FPS);
  }

  /** Emit a frame if the frame budget allows; true when one was sent. */
  tick(nowMs: number): boolean {
    // Half-ms slack: a scheduler firing at exactly the frame interval must
    // not lose frames to float error or sub-ms jitter.
    if (nowMs - this.lastEmit < this.intervalMs - 0.5) return false;
    if (this.origin === null) this.origin = nowMs;
    let t = Math.round(nowMs - this.origin);
    if (t <= this.lastT) t = this.lastT + 1;
    this.lastEmit = nowMs;
    this.lastT = t;
    this.sink.sendFrame(this.source.detect(nowMs), t);
    return true;
  }
}
