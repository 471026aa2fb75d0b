/** Full session-loop behaviour against the recorded fixture service. */

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import { App } from "../src/app.js";
import { formatValue, keyToken } from "../src/model.js";
import type {
  RecommendationPayload,
  RecordsPayload,
  ViewPayload,
} from "../src/types.js";
import { installFixtureFetch, recorded, requestKey } from "./fixture_service.js";
import { renderedAggregates, serializeAggregates } from "./helpers.js";

let app: App;
let calls: string[];
let restore: () => void;

beforeEach(async () => {
  const installed = installFixtureFetch();
  calls = installed.calls;
  restore = installed.restore;
  document.body.innerHTML = '<div id="app"></div>';
  app = new App(document.getElementById("app") as HTMLElement, new Client());
  await app.start();
});

afterEach(() => {
  restore();
});

function query<T extends Element>(selector: string): T {
  const node = document.querySelector<T>(selector);
  if (node === null) throw new Error(`no element matches ${selector}`);
  return node;
}

async function clickAnd(selector: string): Promise<void> {
  query<HTMLElement>(selector).click();
  await app.whenIdle();
}

function setStat(kind: string): void {
  const select = query<HTMLSelectElement>("#stat-select");
  select.value = kind;
  select.dispatchEvent(new Event("change"));
}

function cellSelector(key: (string | number)[]): string {
  return `#heatmap-table td.cell[data-key='${keyToken(key)}']`;
}

/** root -> districts -> districts x years (the complaint's starting view). */
async function drillToDistrictYear(): Promise<void> {
  await clickAnd("#heatmap-table td.cell");
  await clickAnd('button[data-drill="geo"]');
  await clickAnd(cellSelector(["Ofla"]));
  await clickAnd('button[data-drill="time"]');
}

/** ...then complain (Ofla, 1986) STD too high and take the recommendation. */
async function fileStdComplaint(): Promise<void> {
  setStat("STD");
  await clickAnd(cellSelector(["Ofla", 1986]));
  await clickAnd("#btn-too-high");
}

describe("start-up", () => {
  it("opens a session and renders the root view", () => {
    expect(query("#dataset-info").textContent).toContain("645 rows");
    const cell = query<HTMLElement>("#heatmap-table td.cell");
    expect(cell.dataset["key"]).toBe("[]");
    expect(cell.textContent).toBe("645");
    expect(query("#path").textContent).toBe("root");
  });
});

describe("complaint loop", () => {
  it("renders the API's top-K with correct highlights on a too-high STD complaint",
     async () => {
    await drillToDistrictYear();
    await fileStdComplaint();

    const payload = JSON.parse(
      recorded("GET", "/sessions/s1/recommendations").response,
    ) as RecommendationPayload;

    // each ranking panel highlights exactly the API's top-K keys, in order
    for (const ranking of payload.rankings) {
      const items = document.querySelectorAll<HTMLElement>(
        `.ranking[data-hierarchy="${ranking.hierarchy}"] li.candidate.highlight`);
      expect([...items].map((li) => li.dataset["key"]))
        .toEqual(ranking.highlight_keys.map((key) => keyToken(key)));
    }
    // and nothing is highlighted beyond them
    const expected = payload.rankings
      .reduce((n, r) => n + r.highlight_keys.length, 0);
    expect(document.querySelectorAll("li.candidate.highlight")).toHaveLength(expected);

    // the best repair is listed first and flagged
    const first = query<HTMLElement>(".ranking li.candidate");
    expect(first.classList.contains("best")).toBe(true);
    expect(first.dataset["key"]).toBe(keyToken(payload.best.group));
    expect(payload.best.group.at(-1)).toBe("Zata");

    // the complained cell and the filed complaint are shown
    expect(query(cellSelector(["Ofla", 1986])).classList.contains("complained"))
      .toBe(true);
    const info = query("#complaint-info").textContent ?? "";
    expect(info).toContain("STD");
    expect(info).toContain("too_high");
    expect(info).toContain(`current ${formatValue(payload.current_value)}`);
  });

  it("advances the session on a drill-down click and renders aggregates " +
     "matching the recorded snapshot byte-for-byte", async () => {
    await drillToDistrictYear();
    await fileStdComplaint();
    await clickAnd('.ranking[data-hierarchy="geo"] button.drill-rec');

    const snapshot = JSON.parse(
      recorded("POST", "/sessions/s1/drilldown",
               { hierarchy: "geo", group: ["Ofla", 1986] }).response,
    ) as ViewPayload;

    // the session advanced: new breadcrumb step, complaint cleared
    expect(query("#path").textContent)
      .toBe("root / geo: all rows / time: Ofla / geo: Ofla / 1986");
    expect(document.querySelector("#complaint-info")).toBeNull();
    expect(document.querySelector("#recommendations h2")).toBeNull();

    // the rendered aggregate table equals the snapshot byte-for-byte
    expect(snapshot.groups).toHaveLength(5);
    expect(serializeAggregates(renderedAggregates(document)))
      .toBe(serializeAggregates(snapshot.groups));
  });

  it("speaks to the service only through the recorded JSON requests",
     async () => {
    await drillToDistrictYear();
    await fileStdComplaint();
    await clickAnd('.ranking[data-hierarchy="geo"] button.drill-rec');
    await clickAnd(
      `#agg-table tr[data-key='${keyToken([1986, "Ofla", "Zata"])}'] ` +
      "button.records-button");

    const body = (value: unknown) => JSON.stringify(value);
    expect(calls).toEqual([
      requestKey("GET", "/dataset", "", null),
      requestKey("POST", "/sessions", "", null),
      requestKey("POST", "/sessions/s1/drilldown", "",
                 body({ hierarchy: "geo", group: [] })),
      requestKey("POST", "/sessions/s1/drilldown", "",
                 body({ hierarchy: "time", group: ["Ofla"] })),
      requestKey("POST", "/sessions/s1/complaint", "",
                 body({ group: ["Ofla", 1986], stat: "STD",
                        direction: "too_high", target_value: null })),
      requestKey("GET", "/sessions/s1/recommendations", "?k=5", null),
      requestKey("POST", "/sessions/s1/drilldown", "",
                 body({ hierarchy: "geo", group: ["Ofla", 1986] })),
      requestKey("GET", "/sessions/s1/records",
                 "?group=1986&group=Ofla&group=Zata", null),
    ]);
  });
});

describe("drill controls", () => {
  it("needs a selected cell and stops at the leaf level", async () => {
    // nothing selected yet: enabled hierarchies still need a cell
    let geo = query<HTMLButtonElement>('button[data-drill="geo"]');
    expect(geo.disabled).toBe(true);
    expect(geo.title).toBe("select a cell first");

    await clickAnd("#heatmap-table td.cell");
    geo = query<HTMLButtonElement>('button[data-drill="geo"]');
    expect(geo.disabled).toBe(false);
    expect(geo.textContent).toBe("drill geo → district");

    await drillToDistrictYear();
    // the one-level time hierarchy is already exhausted here
    const time = query<HTMLButtonElement>('button[data-drill="time"]');
    expect(time.disabled).toBe(true);
    expect(time.textContent).toBe("time: at leaf");
    expect(time.title).toBe("hierarchy fully expanded");

    await fileStdComplaint();
    await clickAnd('.ranking[data-hierarchy="geo"] button.drill-rec');
    // past the leaf both controls stay disabled even with a selection
    await clickAnd(cellSelector([1986, "Ofla", "Zata"]));
    for (const name of ["geo", "time"]) {
      const button = query<HTMLButtonElement>(`button[data-drill="${name}"]`);
      expect(button.disabled).toBe(true);
      expect(button.textContent).toBe(`${name}: at leaf`);
    }
  });
});

describe("auxiliary layer", () => {
  it("renders a second heatmap when toggled on a view that joins it",
     async () => {
    await drillToDistrictYear();
    // rainfall joins on village, absent from the district x year view
    expect(document.querySelector("input[data-aux]")).toBeNull();

    await fileStdComplaint();
    await clickAnd('.ranking[data-hierarchy="geo"] button.drill-rec');
    expect(document.querySelector(".aux-heatmap")).toBeNull();

    let box = query<HTMLInputElement>('input[data-aux="rainfall"]');
    box.checked = true;
    box.dispatchEvent(new Event("change"));

    const snapshot = JSON.parse(
      recorded("POST", "/sessions/s1/drilldown",
               { hierarchy: "geo", group: ["Ofla", 1986] }).response,
    ) as ViewPayload;
    const layer = snapshot.auxiliaries.find((a) => a.name === "rainfall");
    if (layer === undefined) throw new Error("fixture lost the rainfall layer");

    const aux = query('.aux-heatmap[data-aux="rainfall"]');
    expect(aux.querySelector("h3")?.textContent).toBe("rain(rainfall) by village");
    const cells = [...aux.querySelectorAll("td.cell")].map((td) => td.textContent);
    expect(cells).toEqual(layer.values.map((v) => formatValue(v)));

    // toggling off removes the layer again
    box = query<HTMLInputElement>('input[data-aux="rainfall"]');
    box.checked = false;
    box.dispatchEvent(new Event("change"));
    expect(document.querySelector(".aux-heatmap")).toBeNull();
  });
});

describe("raw records", () => {
  it("shows row buttons only on leaf views and renders the rows verbatim",
     async () => {
    await drillToDistrictYear();
    expect(document.querySelector("button.records-button")).toBeNull();

    await fileStdComplaint();
    await clickAnd('.ranking[data-hierarchy="geo"] button.drill-rec');
    await clickAnd(
      `#agg-table tr[data-key='${keyToken([1986, "Ofla", "Zata"])}'] ` +
      "button.records-button");

    const payload = JSON.parse(
      recorded("GET", "/sessions/s1/records").response) as RecordsPayload;
    expect(query("#records h2").textContent)
      .toBe("rows for 1986 / Ofla / Zata");
    const headers = [...document.querySelectorAll("#records-table thead th")]
      .map((th) => th.textContent);
    expect(headers).toEqual(["district", "village", "year", "severity"]);
    const rows = [...document.querySelectorAll("#records-table tbody tr")];
    expect(rows).toHaveLength(payload.rows.length);
    const rendered = rows.map((tr) =>
      [...tr.querySelectorAll("td")].map((td) => td.textContent));
    expect(rendered).toEqual(payload.rows.map((row) =>
      headers.map((name) => formatValue(row[name as string] ?? null))));
  });
});

describe("error banner", () => {
  it("surfaces API failures and clears on the next successful action",
     async () => {
    await drillToDistrictYear();
    await clickAnd(cellSelector(["Ofla", 1986]));

    const fixtureFetch = globalThis.fetch;
    globalThis.fetch = (async () => ({
      ok: false,
      status: 400,
      text: async () =>
        JSON.stringify({ detail: "unknown statistic kind 'MEDIAN'" }),
    })) as unknown as typeof fetch;
    await clickAnd("#btn-too-low");
    globalThis.fetch = fixtureFetch;

    const banner = query("#banner");
    expect(banner.classList.contains("visible")).toBe(true);
    expect(banner.textContent)
      .toBe("API error 400: unknown statistic kind 'MEDIAN'");
    expect(document.querySelector("#complaint-info")).toBeNull();

    // the next successful interaction clears the banner
    await clickAnd(cellSelector(["Ofla", 1984]));
    expect(query("#banner").classList.contains("visible")).toBe(false);
  });
});
