/** Pure view-model helpers: pivoting, formatting, and drill bookkeeping. */

import type {
  DatasetInfo,
  GroupKey,
  GroupRow,
  Scalar,
  StatsJson,
  ViewPayload,
} from "./types.js";

/** Canonical token for a group key (distinguishes 1 from "1"). */
export function keyToken(key: GroupKey): string {
  return JSON.stringify(key);
}

/** Human label for a group key; the root group reads "all rows". */
export function keyLabel(key: GroupKey): string {
  return key.length === 0 ? "all rows" : key.map(String).join(" / ");
}

/** Values render verbatim: String() round-trips every JSON number. */
export function formatValue(value: Scalar | null | undefined): string {
  return value === null || value === undefined ? "" : String(value);
}

/** The statistic field matching an aggregate kind. */
export function statField(stats: StatsJson, kind: string): number | null {
  switch (kind) {
    case "COUNT": return stats.count;
    case "SUM": return stats.sum;
    case "MEAN": return stats.mean;
    case "STD": return stats.std;
    default: throw new Error(`unknown statistic kind ${kind}`);
  }
}

export interface HeatmapCell {
  key: GroupKey;
  /** Index of the group in the view payload (aligns auxiliary values). */
  index: number;
  value: number | null;
}

export interface HeatmapRow {
  prefix: GroupKey;
  cells: (HeatmapCell | null)[];
}

export interface HeatmapGrid {
  rowLabel: string;
  colLabel: string;
  cols: Scalar[];
  rows: HeatmapRow[];
}

function colValue(key: GroupKey): Scalar {
  return key.length > 0 ? (key[key.length - 1] as Scalar) : "";
}

/**
 * Pivot the view's groups into a grid: the last group-by attribute spans
 * the columns and every distinct prefix is a row.  The root view (empty
 * group-by) pivots to a single cell.  Column and row order follow first
 * appearance in the payload.
 */
export function pivot(view: ViewPayload,
                      value: (row: GroupRow, index: number) => number | null,
                      ): HeatmapGrid {
  const order = view.order;
  const rowLabel = order.slice(0, -1).join(" × ");
  const colLabel = order.length > 0 ? (order[order.length - 1] as string) : "";
  const cols: Scalar[] = [];
  const colIndex = new Map<string, number>();
  for (const group of view.groups) {
    const token = JSON.stringify(colValue(group.key));
    if (!colIndex.has(token)) {
      colIndex.set(token, cols.length);
      cols.push(colValue(group.key));
    }
  }
  const rows: HeatmapRow[] = [];
  const rowIndex = new Map<string, number>();
  for (const [index, group] of view.groups.entries()) {
    const prefix = group.key.slice(0, -1);
    const token = keyToken(prefix);
    let at = rowIndex.get(token);
    if (at === undefined) {
      at = rows.length;
      rowIndex.set(token, at);
      rows.push({ prefix, cells: cols.map(() => null) });
    }
    const col = colIndex.get(JSON.stringify(colValue(group.key))) as number;
    (rows[at] as HeatmapRow).cells[col] =
      { key: group.key, index, value: value(group, index) };
  }
  return { rowLabel, colLabel, cols, rows };
}

/** Finite [min, max] over the grid's values; [0, 0] when empty. */
export function extent(grid: HeatmapGrid): [number, number] {
  let min = Infinity;
  let max = -Infinity;
  for (const row of grid.rows) {
    for (const cell of row.cells) {
      if (cell !== null && cell.value !== null && Number.isFinite(cell.value)) {
        min = Math.min(min, cell.value);
        max = Math.max(max, cell.value);
      }
    }
  }
  return min <= max ? [min, max] : [0, 0];
}

/** Linear white-to-red ramp over [min, max]; null renders unshaded. */
export function colorFor(value: number | null, min: number, max: number): string {
  if (value === null || !Number.isFinite(value)) return "";
  const t = max > min ? (value - min) / (max - min) : 0.5;
  const clamped = Math.min(1, Math.max(0, t));
  const g = Math.round(255 - 155 * clamped);
  const b = Math.round(255 - 175 * clamped);
  return `rgb(255, ${g}, ${b})`;
}

/** The attribute a drill-down into `hierarchy` would add, or null at leaf. */
export function nextAttribute(dataset: DatasetInfo, view: ViewPayload,
                              hierarchy: string): string | null {
  const info = dataset.hierarchies.find((h) => h.name === hierarchy);
  if (!info) return null;
  const depth = info.attributes.filter((a) => view.order.includes(a)).length;
  return depth < info.attributes.length
    ? (info.attributes[depth] as string)
    : null;
}

/** True when every grouped hierarchy is fully expanded (raw rows render). */
export function isLeafView(dataset: DatasetInfo, view: ViewPayload): boolean {
  if (view.order.length === 0) return false;
  return dataset.hierarchies.every((h) => {
    const depth = h.attributes.filter((a) => view.order.includes(a)).length;
    return depth === 0 || depth === h.attributes.length;
  });
}
