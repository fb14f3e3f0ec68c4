/** Step-3 views: timeline, per-label frequency, pie geometry, CSV download. */

import type { IntervalRecord, SummaryJson } from "./protocol.js";

export interface PieSlice {
  label: string;
  share: number;
  startAngle: number;
  endAngle: number;
}

export interface FrequencyBar {
  label: string;
  count: number;
  duration_ms: number;
}

export function hasAnnotations(summary: SummaryJson): boolean {
  return summary.timeline.length > 0;
}

/**
 * Pie geometry straight from the server's share figures; the client
 * never recomputes shares from durations.
 */
export function pieSlices(summary: SummaryJson): PieSlice[] {
  const slices: PieSlice[] = [];
  let angle = 0;
  for (const label of Object.keys(summary.labels).sort()) {
    const share = summary.labels[label].share;
    const sweep = share * 2 * Math.PI;
    slices.push({ label, share, startAngle: angle, endAngle: angle + sweep });
    angle += sweep;
  }
  return slices;
}

export function frequencyBars(summary: SummaryJson): FrequencyBar[] {
  return Object.keys(summary.labels)
    .sort()
    .map((label) => ({
      label,
      count: summary.labels[label].count,
      duration_ms: summary.labels[label].duration_ms,
    }));
}

export function timelineRows(summary: SummaryJson): IntervalRecord[] {
  return [...summary.timeline].sort((a, b) => a.start_ms - b.start_ms);
}

/** The downloaded file must be the server's bytes, untouched. */
export function csvDownloadBytes(exported: Uint8Array): Uint8Array {
  return exported;
}
