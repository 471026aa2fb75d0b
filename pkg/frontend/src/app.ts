/** The single-page app: server state in, DOM out, clicks back to the API. */

import { ApiError, Client } from "./api.js";
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
} from "./model.js";
import type { HeatmapGrid } from "./model.js";
import type {
  ComplaintRecord,
  DatasetInfo,
  GroupKey,
  RecommendationPayload,
  RecordsPayload,
  ViewPayload,
} from "./types.js";

interface AppState {
  dataset: DatasetInfo | null;
  session: string | null;
  view: ViewPayload | null;
  stat: string;
  selected: GroupKey | null;
  complaint: ComplaintRecord | null;
  recommendation: RecommendationPayload | null;
  records: RecordsPayload | null;
  auxVisible: Set<string>;
  k: number;
  error: string | null;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string> = {}, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

export class App {
  private readonly state: AppState = {
    dataset: null,
    session: null,
    view: null,
    stat: "COUNT",
    selected: null,
    complaint: null,
    recommendation: null,
    records: null,
    auxVisible: new Set(),
    k: 5,
    error: null,
  };
  private pending: Promise<void> = Promise.resolve();

  constructor(private readonly root: HTMLElement,
              private readonly client: Client) {}

  /** Fetch dataset facts, open a session, and render the root view. */
  start(): Promise<void> {
    return this.act(async () => {
      this.state.dataset = await this.client.dataset();
      const opened = await this.client.createSession();
      this.state.session = opened.session;
      this.adoptView(opened.view);
      if (!opened.view.aggregates.includes(this.state.stat)) {
        this.state.stat = opened.view.aggregates[0] ?? "COUNT";
      }
    });
  }

  /** Resolves once every queued click handler has finished. */
  whenIdle(): Promise<void> {
    return this.pending;
  }

  // ---- actions ----------------------------------------------------------

  private selectCell(key: GroupKey): void {
    this.state.selected = key;
    this.state.error = null;
    this.render();
  }

  private fileComplaint(direction: string, target: number | null): void {
    const group = this.state.selected;
    const session = this.state.session;
    if (group === null || session === null) return;
    void this.act(async () => {
      this.state.complaint = await this.client.complaint(session, {
        group,
        stat: this.state.stat,
        direction,
        target_value: target,
      });
      this.state.recommendation =
        await this.client.recommendations(session, this.state.k);
    });
  }

  private drill(hierarchy: string, group: GroupKey): void {
    const session = this.state.session;
    if (session === null) return;
    void this.act(async () => {
      this.adoptView(await this.client.drilldown(session, hierarchy, group));
    });
  }

  private loadRecords(key: GroupKey): void {
    const session = this.state.session;
    if (session === null) return;
    void this.act(async () => {
      this.state.records = await this.client.records(session, key);
    });
  }

  private toggleAux(name: string, on: boolean): void {
    if (on) this.state.auxVisible.add(name);
    else this.state.auxVisible.delete(name);
    this.render();
  }

  private adoptView(view: ViewPayload): void {
    this.state.view = view;
    this.state.selected = null;
    this.state.complaint = null;
    this.state.recommendation = null;
    this.state.records = null;
  }

  private act(step: () => Promise<void>): Promise<void> {
    this.pending = this.pending.then(async () => {
      try {
        await step();
        this.state.error = null;
      } catch (err) {
        this.state.error = err instanceof ApiError
          ? `API error ${err.status}: ${err.message}`
          : String(err);
      }
      this.render();
    });
    return this.pending;
  }

  // ---- rendering ---------------------------------------------------------

  private render(): void {
    const parts: HTMLElement[] = [this.header(), this.banner()];
    if (this.state.view !== null && this.state.dataset !== null) {
      parts.push(this.controls(), this.breadcrumbs(), this.heatmaps(),
                 this.complaintBox(), this.recommendations(),
                 this.aggregates(), this.recordsPanel());
    }
    this.root.replaceChildren(...parts);
  }

  private header(): HTMLElement {
    const head = el("header");
    head.append(el("h1", {}, "drillex"));
    const dataset = this.state.dataset;
    if (dataset !== null) {
      const shapes = dataset.hierarchies.map(
        (h) => `${h.name}(${h.attributes.join(" → ")})`);
      head.append(el("span", { id: "dataset-info" },
        `${dataset.rows} rows · ${shapes.join(", ")}` +
        ` · measures: ${dataset.measures.join(", ")}`));
    }
    return head;
  }

  private banner(): HTMLElement {
    const banner = el("div", { id: "banner", role: "alert" });
    banner.className = this.state.error === null ? "banner" : "banner visible";
    if (this.state.error !== null) banner.textContent = this.state.error;
    return banner;
  }

  private controls(): HTMLElement {
    const view = this.state.view as ViewPayload;
    const dataset = this.state.dataset as DatasetInfo;
    const controls = el("section", { id: "controls" });

    const statLabel = el("label", {}, "statistic ");
    const statSelect = el("select", { id: "stat-select" });
    for (const kind of view.aggregates) {
      const option = el("option", { value: kind }, kind);
      option.selected = kind === this.state.stat;
      statSelect.append(option);
    }
    statSelect.addEventListener("change", () => {
      this.state.stat = statSelect.value;
      this.render();
    });
    statLabel.append(statSelect);
    controls.append(statLabel);

    const kLabel = el("label", {}, " top-k ");
    const kInput = el("input",
      { id: "k-input", type: "number", min: "1", value: String(this.state.k) });
    kInput.addEventListener("change", () => {
      const k = Number(kInput.value);
      if (Number.isInteger(k) && k >= 1) this.state.k = k;
    });
    kLabel.append(kInput);
    controls.append(kLabel);

    const drills = el("span", { id: "drill-controls" });
    for (const h of dataset.hierarchies) {
      const next = nextAttribute(dataset, view, h.name);
      const button = el("button", { "data-drill": h.name },
        next === null ? `${h.name}: at leaf` : `drill ${h.name} → ${next}`);
      button.disabled = next === null || this.state.selected === null;
      if (next === null) button.title = "hierarchy fully expanded";
      else if (this.state.selected === null) button.title = "select a cell first";
      button.addEventListener("click", () => {
        if (this.state.selected !== null) this.drill(h.name, this.state.selected);
      });
      drills.append(button);
    }
    controls.append(drills);

    const toggles = el("span", { id: "aux-toggles" });
    for (const aux of view.auxiliaries) {
      const label = el("label", {}, ` ${aux.name} layer`);
      const box = el("input", { type: "checkbox", "data-aux": aux.name });
      box.checked = this.state.auxVisible.has(aux.name);
      box.addEventListener("change", () => this.toggleAux(aux.name, box.checked));
      label.prepend(box);
      toggles.append(label);
    }
    controls.append(toggles);
    return controls;
  }

  private breadcrumbs(): HTMLElement {
    const view = this.state.view as ViewPayload;
    const nav = el("nav", { id: "breadcrumbs" });
    const steps = ["root",
                   ...view.path.map((p) => `${p.hierarchy}: ${keyLabel(p.group)}`)];
    nav.append(el("span", { id: "path" }, steps.join(" / ")));
    const filters = Object.entries(view.filter)
      .map(([attr, value]) => `${attr}=${formatValue(value)}`);
    if (filters.length > 0) {
      nav.append(el("span", { id: "filter" }, ` [${filters.join(", ")}]`));
    }
    return nav;
  }

  private heatmaps(): HTMLElement {
    const view = this.state.view as ViewPayload;
    const section = el("section", { id: "heatmap" });
    const measure = view.measure ?? "rows";
    const caption = view.order.length > 0
      ? `${this.state.stat}(${measure}) by ${view.order.join(" × ")}`
      : `${this.state.stat}(${measure}), all rows`;
    section.append(el("h2", {}, caption));
    const grid = pivot(view, (row) => statField(row, this.state.stat));
    section.append(this.gridTable(grid, "heatmap-table", true));
    for (const aux of view.auxiliaries) {
      if (!this.state.auxVisible.has(aux.name)) continue;
      const auxGrid = pivot(view, (_row, index) => aux.values[index] ?? null);
      const sub = el("section", { class: "aux-heatmap", "data-aux": aux.name });
      sub.append(el("h3", {}, `${aux.measure}(${aux.name}) by ${aux.attribute}`));
      sub.append(this.gridTable(auxGrid, `aux-table-${aux.name}`, false));
      section.append(sub);
    }
    return section;
  }

  private gridTable(grid: HeatmapGrid, id: string,
                    clickable: boolean): HTMLElement {
    const [min, max] = extent(grid);
    const table = el("table", { id, class: "grid" });
    const head = el("tr");
    head.append(el("th", {}, grid.rowLabel));
    for (const col of grid.cols) head.append(el("th", {}, formatValue(col)));
    const thead = el("thead");
    thead.append(head);
    table.append(thead);

    const selectedToken =
      this.state.selected === null ? null : keyToken(this.state.selected);
    const complainedToken =
      this.state.complaint === null ? null : keyToken(this.state.complaint.group);
    const body = el("tbody");
    for (const row of grid.rows) {
      const tr = el("tr");
      tr.append(el("th", {}, keyLabel(row.prefix)));
      for (const cell of row.cells) {
        if (cell === null) {
          tr.append(el("td", { class: "cell empty" }));
          continue;
        }
        const token = keyToken(cell.key);
        const td = el("td", { class: "cell", "data-key": token },
                      formatValue(cell.value));
        td.style.backgroundColor = colorFor(cell.value, min, max);
        if (token === selectedToken) td.classList.add("selected");
        if (token === complainedToken) td.classList.add("complained");
        if (clickable) {
          td.addEventListener("click", () => this.selectCell(cell.key));
        }
        tr.append(td);
      }
      body.append(tr);
    }
    table.append(body);
    return table;
  }

  private complaintBox(): HTMLElement {
    const section = el("section", { id: "complaint-box" });
    const selected = this.state.selected;
    if (selected !== null) {
      section.append(el("span", {},
        `selected ${keyLabel(selected)}: ${this.state.stat} is `));
      const high = el("button", { id: "btn-too-high" }, "too high");
      high.addEventListener("click", () => this.fileComplaint("too_high", null));
      const low = el("button", { id: "btn-too-low" }, "too low");
      low.addEventListener("click", () => this.fileComplaint("too_low", null));
      const target = el("input",
        { id: "target-input", type: "number", placeholder: "target value" });
      const toTarget = el("button", { id: "btn-target" }, "off target");
      toTarget.addEventListener("click", () => {
        const value = Number(target.value);
        if (target.value !== "" && Number.isFinite(value)) {
          this.fileComplaint("target", value);
        }
      });
      section.append(high, low, target, toTarget);
    }
    const complaint = this.state.complaint;
    if (complaint !== null) {
      const text =
        `complaint: ${complaint.stat} of ${keyLabel(complaint.group)}` +
        ` is ${complaint.direction}` +
        (complaint.target_value === null
          ? "" : ` (target ${formatValue(complaint.target_value)})`) +
        ` — current ${formatValue(complaint.current_value)}`;
      section.append(el("div", { id: "complaint-info" }, text));
    }
    return section;
  }

  private recommendations(): HTMLElement {
    const section = el("section", { id: "recommendations" });
    const rec = this.state.recommendation;
    if (rec === null) return section;
    section.append(el("h2", {}, "suspect groups"));
    section.append(el("div", { id: "best" },
      `best repair: ${rec.best.hierarchy} ${keyLabel(rec.best.group)}` +
      ` (score ${formatValue(rec.best.score)})`));
    const bestToken = keyToken(rec.best.group);
    for (const ranking of rec.rankings) {
      const box = el("div",
        { class: "ranking", "data-hierarchy": ranking.hierarchy });
      box.append(el("h3", {}, `${ranking.hierarchy} → ${ranking.attribute}`));
      const drill = el("button",
        { class: "drill-rec", "data-hierarchy": ranking.hierarchy },
        `drill down into ${ranking.attribute}`);
      drill.addEventListener("click",
        () => this.drill(ranking.hierarchy, rec.complaint.group));
      box.append(drill);
      const list = el("ol", { class: "candidates" });
      for (const candidate of ranking.candidates) {
        const token = keyToken(candidate.group);
        const item = el("li", { class: "candidate highlight", "data-key": token });
        if (token === bestToken && candidate.hierarchy === rec.best.hierarchy) {
          item.classList.add("best");
        }
        const stat = rec.complaint.stat;
        item.append(
          el("span", { class: "cand-group" }, keyLabel(candidate.group)),
          el("span", { class: "cand-repair" },
            ` ${stat}: ${formatValue(statField(candidate.actual, stat))}` +
            ` → ${formatValue(statField(candidate.repaired, stat))}`),
          el("span", { class: "cand-value" },
            ` view value ${formatValue(candidate.repaired_value)}`),
          el("span", { class: "cand-score" },
            ` score ${formatValue(candidate.score)}`),
        );
        list.append(item);
      }
      box.append(list);
      section.append(box);
    }
    return section;
  }

  private aggregates(): HTMLElement {
    const view = this.state.view as ViewPayload;
    const dataset = this.state.dataset as DatasetInfo;
    const section = el("section", { id: "aggregates" });
    section.append(el("h2", {}, "aggregates"));
    const leaf = isLeafView(dataset, view);
    const table = el("table", { id: "agg-table" });
    const head = el("tr");
    for (const name of ["group", "count", "sum", "mean", "std"]) {
      head.append(el("th", {}, name));
    }
    if (leaf) head.append(el("th", {}, "rows"));
    const thead = el("thead");
    thead.append(head);
    table.append(thead);
    const body = el("tbody");
    for (const group of view.groups) {
      const tr = el("tr", { class: "agg-row", "data-key": keyToken(group.key) });
      tr.append(el("td", { class: "group-label" }, keyLabel(group.key)));
      tr.append(el("td", { "data-stat": "count" }, formatValue(group.count)));
      tr.append(el("td", { "data-stat": "sum" }, formatValue(group.sum)));
      tr.append(el("td", { "data-stat": "mean" }, formatValue(group.mean)));
      tr.append(el("td", { "data-stat": "std" }, formatValue(group.std)));
      if (leaf) {
        const cell = el("td");
        const button = el("button", { class: "records-button" }, "rows");
        button.addEventListener("click", () => this.loadRecords(group.key));
        cell.append(button);
        tr.append(cell);
      }
      body.append(tr);
    }
    table.append(body);
    section.append(table);
    return section;
  }

  private recordsPanel(): HTMLElement {
    const section = el("section", { id: "records" });
    const records = this.state.records;
    if (records === null) return section;
    section.append(el("h2", {}, `rows for ${keyLabel(records.group)}`));
    const columns: string[] = [];
    for (const row of records.rows) {
      for (const name of Object.keys(row)) {
        if (!columns.includes(name)) columns.push(name);
      }
    }
    const table = el("table", { id: "records-table" });
    const head = el("tr");
    for (const name of columns) head.append(el("th", {}, name));
    const thead = el("thead");
    thead.append(head);
    table.append(thead);
    const body = el("tbody");
    for (const row of records.rows) {
      const tr = el("tr");
      for (const name of columns) {
        tr.append(el("td", {}, formatValue(row[name] ?? null)));
      }
      body.append(tr);
    }
    table.append(body);
    section.append(table);
    return section;
  }
}
