import { describe, expect, it } from "vitest";

import { canSubmit, MAX_ROWS, toWire, validateMapping, type MappingRow } from "../src/mapping.js";

const row = (gesture: string, label: string): MappingRow =>
  ({ gesture, label }) as MappingRow;

describe("mapping form validation", () => {
  it("accepts a full five-row mapping with distinct labels", () => {
    const rows = [
      row("fist", "grab"),
      row("ok", "confirm"),
      row("stop", "halt"),
      row("two_up", "scroll"),
      row("peace", "point"),
    ];
    expect(validateMapping(rows)).toEqual([]);
    expect(canSubmit(rows)).toBe(true);
    expect(toWire(rows)).toEqual({
      fist: "grab",
      ok: "confirm",
      stop: "halt",
      two_up: "scroll",
      peace: "point",
    });
  });

  it("rejects more than five rows", () => {
    const rows = [
      row("fist", "a"),
      row("ok", "b"),
      row("stop", "c"),
      row("two_up", "d"),
      row("peace", "e"),
      row("fist", "f"),
    ];
    expect(rows.length).toBeGreaterThan(MAX_ROWS);
    expect(validateMapping(rows).some((e) => e.includes("at most 5"))).toBe(true);
    expect(canSubmit(rows)).toBe(false);
  });

  it("rejects duplicate labels", () => {
    const rows = [row("fist", "go"), row("peace", "go")];
    expect(validateMapping(rows).some((e) => e.includes("duplicate label"))).toBe(true);
  });

  it("rejects a gesture mapped twice", () => {
    const rows = [row("fist", "a"), row("fist", "b")];
    expect(validateMapping(rows).some((e) => e.includes("already mapped"))).toBe(true);
  });

  it("rejects empty and control-character labels", () => {
    expect(validateMapping([row("fist", "")]).some((e) => e.includes("empty"))).toBe(true);
    expect(
      validateMapping([row("fist", "bad\u0007label")]).some((e) => e.includes("control")),
    ).toBe(true);
  });

  it("rejects unknown gestures, including the no-gesture sentinel", () => {
    expect(validateMapping([row("none", "x")]).some((e) => e.includes("unknown gesture"))).toBe(
      true,
    );
    expect(validateMapping([row("wave", "x")]).some((e) => e.includes("unknown gesture"))).toBe(
      true,
    );
  });

  it("needs at least one complete row before submission", () => {
    expect(canSubmit([])).toBe(false);
    expect(canSubmit([row("", "grab")])).toBe(false);
    expect(canSubmit([row("fist", "grab")])).toBe(true);
  });
});
