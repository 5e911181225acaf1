import { describe, expect, it } from "vitest";

import type { ApiClient } from "../src/api.js";
import { GraphStore, layeredLayout } from "../src/graph.js";
import type { Graph, ProvEdge } from "../src/types.js";

function edge(
  from: [string, number],
  to: [string, number],
  kind: ProvEdge["kind"] = "fileset_creation",
  action = "fsc-1",
): ProvEdge {
  return { from, to, kind, action_id: action };
}

const DIAMOND: Graph = {
  nodes: [
    ["src", 1],
    ["left", 1],
    ["right", 1],
    ["merge", 1],
  ],
  edges: [
    edge(["left", 1], ["src", 1], "job_execution", "j1"),
    edge(["right", 1], ["src", 1], "job_execution", "j2"),
    edge(["merge", 1], ["left", 1]),
    edge(["merge", 1], ["right", 1]),
  ],
};

describe("layered layout", () => {
  it("puts dependencies in earlier columns", () => {
    const placed = new Map(
      layeredLayout(DIAMOND).map((p) => [p.key, p.column]),
    );
    expect(placed.get("src:1")).toBe(0);
    expect(placed.get("left:1")).toBe(1);
    expect(placed.get("right:1")).toBe(1);
    expect(placed.get("merge:1")).toBe(2);
  });

  it("gives parallel nodes distinct rows in the same column", () => {
    const placed = layeredLayout(DIAMOND).filter((p) => p.column === 1);
    expect(new Set(placed.map((p) => p.row)).size).toBe(2);
  });

  it("places every graph node exactly once", () => {
    const placed = layeredLayout(DIAMOND);
    expect(placed.map((p) => p.key).sort()).toEqual([
      "left:1",
      "merge:1",
      "right:1",
      "src:1",
    ]);
  });
});

describe("interactive trace", () => {
  function storeWith(traceNodes: [string, number][]): GraphStore {
    const client = {
      getGraph: async () => DIAMOND,
      trace: async () => ({
        neighbors: traceNodes.map((n) => edge(["merge", 1], n)),
        nodes: traceNodes,
      }),
    } as unknown as ApiClient;
    const store = new GraphStore(client);
    store.graph = DIAMOND;
    return store;
  }

  it("highlights the selected node plus its one-step neighbors", async () => {
    const store = storeWith([
      ["left", 1],
      ["right", 1],
    ]);
    store.select(["merge", 1]);
    expect([...store.highlighted]).toEqual(["merge:1"]);
    const nodes = await store.expand("backward");
    expect(nodes).toEqual([
      ["left", 1],
      ["right", 1],
    ]);
    expect(store.highlighted).toEqual(
      new Set(["merge:1", "left:1", "right:1"]),
    );
  });

  it("re-selecting clears the previous highlight", async () => {
    const store = storeWith([["left", 1]]);
    store.select(["merge", 1]);
    await store.expand("backward");
    store.select(["src", 1]);
    expect(store.highlighted).toEqual(new Set(["src:1"]));
    expect(store.lastTraceEdges).toEqual([]);
  });
});
