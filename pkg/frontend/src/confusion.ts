// Client-side recomputation of the per-condition confusion summary from the
// records revealed at close; must agree cell-for-cell with the server.

import type { ConfusionCells, RecordView } from "./protocol.js";

export function tallyRecords(records: RecordView[]): Record<string, ConfusionCells> {
  const out: Record<string, ConfusionCells> = {};
  for (const record of records) {
    const cells = (out[record.condition] ??= {
      tp: 0,
      fp: 0,
      fn: 0,
      tn: 0,
      total: 0,
      errors: 0,
    });
    if (record.actual === "contact") {
      record.estimated === "contact" ? cells.tp++ : cells.fn++;
    } else {
      record.estimated === "contact" ? cells.fp++ : cells.tn++;
    }
    cells.total++;
    cells.errors = cells.fp + cells.fn;
  }
  return out;
}

export function sameCells(
  a: Record<string, ConfusionCells>,
  b: Record<string, ConfusionCells>,
): boolean {
  const keys = new Set([...Object.keys(a), ...Object.keys(b)]);
  for (const key of keys) {
    const x = a[key];
    const y = b[key];
    if (!x || !y) return false;
    if (
      x.tp !== y.tp ||
      x.fp !== y.fp ||
      x.fn !== y.fn ||
      x.tn !== y.tn ||
      x.total !== y.total ||
      x.errors !== y.errors
    ) {
      return false;
    }
  }
  return true;
}
