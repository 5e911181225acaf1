/** Dashboard entry point: token entry, job table, log panel, provenance. */

import { ApiClient } from "./api.js";
import { GraphStore } from "./graph.js";
import { JobTableStore } from "./jobs.js";
import { LogPanelStore } from "./logs.js";
import { TagPanel } from "./tags.js";
import {
  el,
  renderGraph,
  renderJobTable,
  renderLogPanel,
  renderTagPanel,
} from "./dom.js";

const POLL_NEW_JOBS_MS = 3000;

async function start(root: HTMLElement, server: string, token: string, user: string) {
  const client = new ApiClient(server, token);
  const table = new JobTableStore(user);
  const graphStore = new GraphStore(client);

  const tableBox = el("div", { id: "jobs" });
  const logBox = el("div", { id: "log" });
  const graphBox = el("div", { id: "graph" });
  const tagBox = el("div", { id: "tags" });
  root.replaceChildren(
    el("h2", {}, "jobs"),
    tableBox,
    logBox,
    el("h2", {}, "provenance"),
    graphBox,
    tagBox,
  );

  const watching = new Set<string>();
  const drawTable = () =>
    renderJobTable(table, tableBox, {
      onSelect: (row) => openLog(row.jobId),
      onPage: (delta) => {
        table.page = Math.max(
          0,
          Math.min(table.pageCount() - 1, table.page + delta),
        );
        drawTable();
      },
      onSort: (key) => {
        table.sortKey = key as typeof table.sortKey;
        table.sortDesc = !table.sortDesc;
        drawTable();
      },
    });

  const followJob = async (jobId: string) => {
    if (watching.has(jobId)) return;
    watching.add(jobId);
    for await (const event of client.watchJob(jobId)) {
      if (table.applyEvent(jobId, event)) drawTable();
    }
    watching.delete(jobId);
  };

  const openLog = async (jobId: string) => {
    const panel = new LogPanelStore();
    const draw = () =>
      renderLogPanel(panel, jobId, logBox, () => void client.killJob(jobId));
    draw();
    for await (const event of client.watchJob(jobId)) {
      panel.applyEvent(event);
      draw();
    }
  };

  const refreshJobs = async () => {
    const jobs = await client.listJobs();
    table.load(jobs);
    drawTable();
    for (const job of jobs) {
      if (!["finished", "failed", "killed"].includes(job.state)) {
        void followJob(job.job_id);
      }
    }
  };

  const drawGraph = () =>
    renderGraph(graphStore, graphBox, (placed) => {
      graphStore.select(placed.node);
      void graphStore.expand("backward").then(drawGraph);
      const tags = new TagPanel(client, placed.node);
      void tags.refresh().then(() =>
        renderTagPanel(tags, tagBox, (key, value) => {
          void tags.setTag(key, value).then(() =>
            renderTagPanel(tags, tagBox, () => undefined),
          );
        }),
      );
    });

  await refreshJobs();
  await graphStore.refresh();
  drawGraph();
  setInterval(() => void refreshJobs(), POLL_NEW_JOBS_MS);
}

function loginForm(root: HTMLElement) {
  const server = el("input", { value: window.location.origin, id: "server" });
  const token = el("input", { placeholder: "access token", id: "token" });
  const user = el("input", { placeholder: "user id", id: "user" });
  const go = el("button", {}, "connect");
  go.addEventListener("click", () =>
    void start(root, server.value, token.value, user.value),
  );
  root.replaceChildren(el("div", { class: "login" }, server, token, user, go));
}

const rootEl = document.getElementById("app");
if (rootEl) loginForm(rootEl);
