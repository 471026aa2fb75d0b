/** DOM extraction and canonical serialization for the snapshot checks. */

import type { GroupKey, GroupRow } from "../src/types.js";

/** Parse the rendered aggregate table back into group rows. */
export function renderedAggregates(root: ParentNode): GroupRow[] {
  const rows: GroupRow[] = [];
  for (const tr of root.querySelectorAll<HTMLElement>("#agg-table tbody tr")) {
    const token = tr.dataset["key"];
    if (token === undefined) throw new Error("aggregate row without a key");
    const count = numberAt(tr, "count");
    const sum = numberAt(tr, "sum");
    if (count === null || sum === null) {
      throw new Error("aggregate row missing count or sum");
    }
    rows.push({
      key: JSON.parse(token) as GroupKey,
      count,
      sum,
      mean: numberAt(tr, "mean"),
      std: numberAt(tr, "std"),
    });
  }
  return rows;
}

function numberAt(tr: Element, stat: string): number | null {
  const cell = tr.querySelector(`td[data-stat="${stat}"]`);
  if (cell === null) throw new Error(`no ${stat} cell in aggregate row`);
  const text = cell.textContent ?? "";
  return text === "" ? null : Number(text);
}

/**
 * Canonical bytes for a list of group aggregates.  Rendered text and the
 * recorded payload meet here: String() emits the shortest representation
 * that round-trips, so serializing both sides yields identical bytes
 * exactly when every rendered value equals the recorded one.
 */
export function serializeAggregates(groups: GroupRow[]): string {
  return JSON.stringify(
    groups.map((g) => [g.key, g.count, g.sum, g.mean, g.std]));
}
