/** DOM rendering. All state lives in the stores; this layer only draws. */

import type { JobRow, JobTableStore } from "./jobs.js";
import type { LogPanelStore } from "./logs.js";
import type { GraphStore, PlacedNode } from "./graph.js";
import type { TagPanel } from "./tags.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  node.append(...children);
  return node;
}

function badge(state: string): HTMLElement {
  return el("span", { class: `badge badge-${state}` }, state);
}

export function renderJobTable(
  store: JobTableStore,
  container: HTMLElement,
  handlers: {
    onSelect: (row: JobRow) => void;
    onPage: (delta: number) => void;
    onSort: (key: string) => void;
  },
): void {
  container.replaceChildren();
  const header = el("tr");
  for (const [label, key] of [
    ["job", "jobId"],
    ["state", "state"],
    ["submitted", "submittedAt"],
    ["runtime (s)", "runtime"],
    ["cost", "cost"],
  ]) {
    const th = el("th", {}, label);
    th.addEventListener("click", () => handlers.onSort(key));
    header.append(th);
  }
  const body = el("tbody");
  for (const row of store.currentPage()) {
    const tr = el(
      "tr",
      { "data-job": row.jobId },
      el("td", { class: "mono" }, row.jobId),
      el("td", {}, badge(row.state)),
      el("td", {}, new Date(row.submittedAt * 1000).toLocaleString()),
      el("td", {}, row.runtime === null ? "-" : row.runtime.toFixed(1)),
      el("td", {}, row.cost === null ? "-" : row.cost.toFixed(5)),
    );
    tr.addEventListener("click", () => handlers.onSelect(row));
    body.append(tr);
  }
  const pager = el(
    "div",
    { class: "pager" },
    el("button", {}, "prev"),
    el("span", {}, ` page ${store.page + 1} / ${store.pageCount()} `),
    el("button", {}, "next"),
  );
  const [prev, , next] = pager.children;
  prev.addEventListener("click", () => handlers.onPage(-1));
  next.addEventListener("click", () => handlers.onPage(1));
  container.append(el("table", {}, el("thead", {}, header), body), pager);
}

export function renderLogPanel(
  store: LogPanelStore,
  jobId: string,
  container: HTMLElement,
  onKill: () => void,
): void {
  container.replaceChildren();
  const kill = el("button", { class: "kill" }, "kill");
  kill.addEventListener("click", onKill);
  if (store.done) kill.setAttribute("disabled", "disabled");
  container.append(
    el("div", { class: "log-head" }, el("code", {}, jobId), badge(store.state), kill),
    el("pre", { class: "log-body" }, store.text()),
  );
}

const COL_W = 180;
const ROW_H = 56;

export function renderGraph(
  store: GraphStore,
  container: HTMLElement,
  onSelect: (placed: PlacedNode) => void,
): void {
  container.replaceChildren();
  const placed = store.layout();
  const byKey = new Map(placed.map((p) => [p.key, p]));
  const width = (Math.max(0, ...placed.map((p) => p.column)) + 1) * COL_W + 40;
  const height = (Math.max(0, ...placed.map((p) => p.row)) + 1) * ROW_H + 40;
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  for (const edge of store.graph.edges) {
    const a = byKey.get(`${edge.from[0]}:${edge.from[1]}`);
    const b = byKey.get(`${edge.to[0]}:${edge.to[1]}`);
    if (!a || !b) continue;
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(a.column * COL_W + 20));
    line.setAttribute("y1", String(a.row * ROW_H + 30));
    line.setAttribute("x2", String(b.column * COL_W + 20));
    line.setAttribute("y2", String(b.row * ROW_H + 30));
    line.setAttribute("class", `edge edge-${edge.kind}`);
    svg.append(line);
  }
  for (const p of placed) {
    const g = document.createElementNS(SVG_NS, "g");
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(p.column * COL_W + 20));
    circle.setAttribute("cy", String(p.row * ROW_H + 30));
    circle.setAttribute("r", "12");
    circle.setAttribute(
      "class",
      store.highlighted.has(p.key) ? "node highlighted" : "node",
    );
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(p.column * COL_W + 38));
    label.setAttribute("y", String(p.row * ROW_H + 34));
    label.textContent = p.key;
    g.append(circle, label);
    g.addEventListener("click", () => onSelect(p));
    svg.append(g);
  }
  container.append(svg);
}

export function renderTagPanel(
  panel: TagPanel,
  container: HTMLElement,
  onSet: (key: string, value: string) => void,
): void {
  container.replaceChildren();
  const list = el("dl");
  for (const [key, tagged] of Object.entries(panel.attributes)) {
    list.append(el("dt", {}, key), el("dd", {}, String(tagged.value)));
  }
  const keyInput = el("input", { placeholder: "tag key" });
  const valInput = el("input", { placeholder: "value" });
  const save = el("button", {}, "set tag");
  save.addEventListener("click", () => onSet(keyInput.value, valInput.value));
  container.append(list, el("div", { class: "tag-edit" }, keyInput, valInput, save));
}
