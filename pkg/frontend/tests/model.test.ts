/** Pure view-model helpers: pivoting, formatting, drill bookkeeping. */

import { describe, expect, it } from "vitest";

import {
  colorFor,
  extent,
  formatValue,
  isLeafView,
  keyLabel,
  keyToken,
  nextAttribute,
  pivot,
  statField,
} from "../src/model.js";
import type { DatasetInfo, GroupRow, ViewPayload } from "../src/types.js";

function makeView(order: string[], groups: GroupRow[]): ViewPayload {
  return {
    session: "s1",
    order,
    filter: {},
    drilled: null,
    path: [],
    aggregates: ["COUNT", "SUM", "MEAN", "STD"],
    measure: "severity",
    groups,
    auxiliaries: [],
  };
}

function row(key: (string | number)[], count: number): GroupRow {
  return { key, count, sum: count * 2, mean: 2, std: null };
}

const dataset: DatasetInfo = {
  id: "d1",
  hierarchies: [
    { name: "geo", attributes: ["district", "village"] },
    { name: "time", attributes: ["year"] },
  ],
  measures: ["severity"],
  rows: 10,
  auxiliaries: [],
};

describe("keyToken / keyLabel", () => {
  it("distinguishes numeric from string key parts", () => {
    expect(keyToken([1986])).not.toBe(keyToken(["1986"]));
    expect(keyToken(["Ofla", 1986])).toBe('["Ofla",1986]');
  });

  it("labels the root group and joins longer keys", () => {
    expect(keyLabel([])).toBe("all rows");
    expect(keyLabel(["Ofla", 1986])).toBe("Ofla / 1986");
  });
});

describe("formatValue", () => {
  it("renders null as empty and values verbatim", () => {
    expect(formatValue(null)).toBe("");
    expect(formatValue(62)).toBe("62");
    expect(formatValue(2.5)).toBe("2.5");
    expect(formatValue("Ofla")).toBe("Ofla");
  });

  it("round-trips doubles through text exactly", () => {
    for (const v of [0.1 + 0.2, 7.833333333333333, 1e-7, 12345678901234.5]) {
      expect(Number(formatValue(v))).toBe(v);
    }
  });
});

describe("statField", () => {
  const stats = { count: 3, sum: 9, mean: 3, std: 1.5 };

  it("maps aggregate kinds to their fields", () => {
    expect(statField(stats, "COUNT")).toBe(3);
    expect(statField(stats, "SUM")).toBe(9);
    expect(statField(stats, "MEAN")).toBe(3);
    expect(statField(stats, "STD")).toBe(1.5);
  });

  it("rejects unknown kinds", () => {
    expect(() => statField(stats, "MEDIAN")).toThrow(/unknown statistic/);
  });
});

describe("pivot", () => {
  it("spans the last attribute across columns", () => {
    const view = makeView(["district", "year"], [
      row(["A", 1984], 1),
      row(["A", 1985], 2),
      row(["B", 1984], 3),
      row(["B", 1985], 4),
    ]);
    const grid = pivot(view, (g) => g.count);
    expect(grid.rowLabel).toBe("district");
    expect(grid.colLabel).toBe("year");
    expect(grid.cols).toEqual([1984, 1985]);
    expect(grid.rows.map((r) => r.prefix)).toEqual([["A"], ["B"]]);
    expect(grid.rows[0]?.cells.map((c) => c?.value)).toEqual([1, 2]);
    expect(grid.rows[1]?.cells.map((c) => c?.value)).toEqual([3, 4]);
  });

  it("leaves missing combinations as null cells", () => {
    const view = makeView(["district", "year"], [
      row(["A", 1984], 1),
      row(["B", 1985], 4),
    ]);
    const grid = pivot(view, (g) => g.count);
    expect(grid.cols).toEqual([1984, 1985]);
    expect(grid.rows[0]?.cells[1]).toBeNull();
    expect(grid.rows[1]?.cells[0]).toBeNull();
  });

  it("pivots the root view to a single cell", () => {
    const view = makeView([], [row([], 645)]);
    const grid = pivot(view, (g) => g.count);
    expect(grid.cols).toEqual([""]);
    expect(grid.rows).toHaveLength(1);
    expect(grid.rows[0]?.cells[0]?.value).toBe(645);
    expect(grid.rows[0]?.cells[0]?.key).toEqual([]);
  });

  it("hands the accessor the payload index (auxiliary alignment)", () => {
    const view = makeView(["year"], [row([1984], 1), row([1985], 2)]);
    const seen: number[] = [];
    pivot(view, (_g, i) => {
      seen.push(i);
      return null;
    });
    expect(seen).toEqual([0, 1]);
  });
});

describe("extent / colorFor", () => {
  it("finds min and max over non-null cells", () => {
    const view = makeView(["year"], [
      row([1984], 5),
      row([1985], 1),
      row([1986], 9),
    ]);
    expect(extent(pivot(view, (g) => g.count))).toEqual([1, 9]);
  });

  it("falls back to [0, 0] when every value is null", () => {
    const view = makeView(["year"], [row([1984], 1)]);
    expect(extent(pivot(view, () => null))).toEqual([0, 0]);
  });

  it("shades monotonically from white toward red", () => {
    const low = colorFor(0, 0, 10);
    const mid = colorFor(5, 0, 10);
    const high = colorFor(10, 0, 10);
    expect(low).toBe("rgb(255, 255, 255)");
    expect(high).toBe("rgb(255, 100, 80)");
    const green = (c: string) => Number(c.match(/rgb\(255, (\d+),/)?.[1]);
    expect(green(low)).toBeGreaterThan(green(mid));
    expect(green(mid)).toBeGreaterThan(green(high));
  });

  it("clamps out-of-range values and skips nulls", () => {
    expect(colorFor(-5, 0, 10)).toBe(colorFor(0, 0, 10));
    expect(colorFor(50, 0, 10)).toBe(colorFor(10, 0, 10));
    expect(colorFor(null, 0, 10)).toBe("");
  });

  it("is deterministic", () => {
    expect(colorFor(3, 0, 10)).toBe(colorFor(3, 0, 10));
  });
});

describe("nextAttribute / isLeafView", () => {
  it("walks hierarchy attributes by view depth", () => {
    const root = makeView([], []);
    expect(nextAttribute(dataset, root, "geo")).toBe("district");
    const districts = makeView(["district"], []);
    expect(nextAttribute(dataset, districts, "geo")).toBe("village");
    const villages = makeView(["district", "village"], []);
    expect(nextAttribute(dataset, villages, "geo")).toBeNull();
    expect(nextAttribute(dataset, root, "nope")).toBeNull();
  });

  it("treats a view as leaf only when grouped hierarchies are exhausted", () => {
    expect(isLeafView(dataset, makeView([], []))).toBe(false);
    expect(isLeafView(dataset, makeView(["district", "year"], []))).toBe(false);
    expect(isLeafView(dataset,
                      makeView(["year", "district", "village"], []))).toBe(true);
    // an entirely un-grouped hierarchy does not block leaf-ness
    expect(isLeafView(dataset, makeView(["district", "village"], []))).toBe(true);
  });
});
