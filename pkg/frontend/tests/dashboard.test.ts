import { describe, expect, it } from "vitest";

import {
  csvDownloadBytes,
  frequencyBars,
  hasAnnotations,
  pieSlices,
  timelineRows,
} from "../src/dashboard.js";
import type { IntervalRecord, SummaryJson } from "../src/protocol.js";

function interval(label: string, start_ms: number, end_ms: number): IntervalRecord {
  return {
    label,
    gesture: "fist",
    start_ms,
    end_ms,
    duration_ms: end_ms - start_ms,
    mean_confidence: 0.9,
    frame_count: 5,
  };
}

// Durations here deliberately disagree with the share figures: the pie
// must use the server's shares verbatim, never recompute them.
const TWO_INTERVAL_FIXTURE: SummaryJson = {
  total_annotated_ms: 400,
  labels: {
    grab: { duration_ms: 999, count: 1, share: 0.25 },
    point: { duration_ms: 1, count: 3, share: 0.75 },
  },
  timeline: [interval("point", 500, 800), interval("grab", 0, 100)],
};

const EMPTY_FIXTURE: SummaryJson = { total_annotated_ms: 0, labels: {}, timeline: [] };

describe("dashboard", () => {
  it("pie slices carry the server shares 0.25/0.75 with 1:3 angles", () => {
    const slices = pieSlices(TWO_INTERVAL_FIXTURE);
    expect(slices.map((s) => s.label)).toEqual(["grab", "point"]);
    expect(slices.map((s) => s.share)).toEqual([0.25, 0.75]);
    const sweep0 = slices[0].endAngle - slices[0].startAngle;
    const sweep1 = slices[1].endAngle - slices[1].startAngle;
    expect(sweep0).toBeCloseTo(Math.PI / 2, 12);
    expect(sweep1).toBeCloseTo((3 * Math.PI) / 2, 12);
    expect(sweep1 / sweep0).toBeCloseTo(3, 12);
    expect(slices[0].startAngle).toBe(0);
    expect(slices[1].startAngle).toBeCloseTo(slices[0].endAngle, 12);
    expect(slices[1].endAngle).toBeCloseTo(2 * Math.PI, 12);
  });

  it("frequency bars come straight from the per-label counts", () => {
    expect(frequencyBars(TWO_INTERVAL_FIXTURE)).toEqual([
      { label: "grab", count: 1, duration_ms: 999 },
      { label: "point", count: 3, duration_ms: 1 },
    ]);
  });

  it("timeline rows are ordered by start time", () => {
    const rows = timelineRows(TWO_INTERVAL_FIXTURE);
    expect(rows.map((r) => r.label)).toEqual(["grab", "point"]);
    expect(rows.map((r) => r.start_ms)).toEqual([0, 500]);
  });

  it("empty sessions get the explicit empty state", () => {
    expect(hasAnnotations(EMPTY_FIXTURE)).toBe(false);
    expect(pieSlices(EMPTY_FIXTURE)).toEqual([]);
    expect(hasAnnotations(TWO_INTERVAL_FIXTURE)).toBe(true);
  });

  it("CSV download is the exact exported bytes", () => {
    const bytes = new TextEncoder().encode('h\n"a,b""c",1\n');
    expect(csvDownloadBytes(bytes)).toBe(bytes);
  });
});
