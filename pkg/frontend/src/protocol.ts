/** Wire types for the annotation server's HTTP + websocket protocol. */

export const GESTURES = ["fist", "ok", "stop", "two_up", "peace"] as const;
export type Gesture = (typeof GESTURES)[number];

export type Handedness = "Left" | "Right" | "Unknown";

export interface Hand {
  handedness?: Handedness;
  /** 21 image-relative [x, y, z] triples, wrist first. */
  landmarks: number[][];
}

export interface FrameMessage {
  type: "frame";
  session: string;
  seq: number;
  t_capture_ms: number;
  hands: Hand[];
}

export type IntervalState = "idle" | "open" | "just_opened" | "just_closed";

export interface RecognitionMessage {
  type: "recognition";
  seq: number;
  gesture: string;
  label: string | null;
  confidence: number;
  interval_state: IntervalState;
  server_latency_ms: number;
}

export interface IntervalRecord {
  label: string;
  gesture: string;
  start_ms: number;
  end_ms: number;
  duration_ms: number;
  mean_confidence: number;
  frame_count: number;
}

export interface IntervalMessage extends IntervalRecord {
  type: "interval";
}

export interface ErrorMessage {
  type: "error";
  error: string;
  detail: string;
  seq: number | null;
}

export type ServerMessage = RecognitionMessage | IntervalMessage | ErrorMessage;

export function parseServerMessage(raw: string): ServerMessage | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const type = (doc as { type?: unknown }).type;
  if (type === "recognition" || type === "interval" || type === "error") {
    return doc as ServerMessage;
  }
  return null;
}

export interface SummaryLabelStats {
  duration_ms: number;
  count: number;
  share: number;
}

export interface SummaryJson {
  total_annotated_ms: number;
  labels: Record<string, SummaryLabelStats>;
  timeline: IntervalRecord[];
}
