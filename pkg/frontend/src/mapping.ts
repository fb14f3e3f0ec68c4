/** Label-mapping form model: gesture→label rows the user fills in step 1. */

import { GESTURES, type Gesture } from "./protocol.js";

export const MAX_ROWS = 5;

export interface MappingRow {
  gesture: Gesture | "";
  label: string;
}

// Unicode Cc: the same control-character set the server rejects.
const CONTROL = /[\u0000-\u001f\u007f-\u009f]/;

export function validateMapping(rows: MappingRow[]): string[] {
  const errors: string[] = [];
  if (rows.length === 0) errors.push("add at least one row");
  if (rows.length > MAX_ROWS) errors.push(`at most ${MAX_ROWS} rows`);
  const seenGestures = new Set<string>();
  const seenLabels = new Set<string>();
  rows.forEach((row, i) => {
    const n = i + 1;
    if (!row.gesture) errors.push(`row ${n}: pick a gesture`);
    else if (!(GESTURES as readonly string[]).includes(row.gesture)) {
      errors.push(`row ${n}: unknown gesture "${row.gesture}"`);
    } else if (seenGestures.has(row.gesture)) {
      errors.push(`row ${n}: gesture already mapped`);
    }
    seenGestures.add(row.gesture);
    if (row.label.length === 0) errors.push(`row ${n}: label is empty`);
    else if (CONTROL.test(row.label)) errors.push(`row ${n}: label has control characters`);
    else if (seenLabels.has(row.label)) errors.push(`row ${n}: duplicate label "${row.label}"`);
    seenLabels.add(row.label);
  });
  return errors;
}

export function canSubmit(rows: MappingRow[]): boolean {
  return validateMapping(rows).length === 0;
}

export function toWire(rows: MappingRow[]): Record<string, string> {
  const wire: Record<string, string> = {};
  for (const row of rows) wire[row.gesture] = row.label;
  return wire;
}
