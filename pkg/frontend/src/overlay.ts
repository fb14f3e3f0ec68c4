/** Live-feed overlay state and skeleton drawing geometry. */

import type { Hand, IntervalState, RecognitionMessage } from "./protocol.js";

export interface OverlayState {
  gesture: string;
  label: string | null;
  confidence: number;
  indicator: IntervalState;
}

export const INITIAL_OVERLAY: OverlayState = {
  gesture: "none",
  label: null,
  confidence: 0,
  indicator: "idle",
};

export function applyRecognition(
  _state: OverlayState,
  msg: RecognitionMessage,
): OverlayState {
  return {
    gesture: msg.gesture,
    label: msg.label,
    confidence: msg.confidence,
    indicator: msg.interval_state,
  };
}

/** The mapped label lights up while its interval is open. */
export function isHighlighted(state: OverlayState): boolean {
  return state.indicator === "open" || state.indicator === "just_opened";
}

/** Bone pairs of the 21-landmark hand, wrist = 0. */
export const HAND_EDGES: ReadonlyArray<readonly [number, number]> = [
  [0, 1], [1, 2], [2, 3], [3, 4],
  [0, 5], [5, 6], [6, 7], [7, 8],
  [5, 9], [9, 10], [10, 11], [11, 12],
  [9, 13], [13, 14], [14, 15], [15, 16],
  [13, 17], [17, 18], [18, 19], [19, 20],
  [0, 17],
];

export interface Segment {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

/** Pixel-space line segments for drawing one hand on a width×height canvas. */
export function skeletonSegments(hand: Hand, width: number, height: number): Segment[] {
  return HAND_EDGES.map(([a, b]) => ({
    x0: hand.landmarks[a][0] * width,
    y0: hand.landmarks[a][1] * height,
    x1: hand.landmarks[b][0] * width,
    y1: hand.landmarks[b][1] * height,
  }));
}
