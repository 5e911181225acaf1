/** Provenance graph view: layered layout, selection, one-step tracing.
 *
 * Layout is layered left-to-right with dependencies to the left: a node's
 * column is one past the deepest column among the nodes it depends on
 * (edges point dependent -> dependency).
 */

import type { ApiClient } from "./api.js";
import type { Graph, ProvEdge, ProvNode } from "./types.js";
import { nodeKey } from "./types.js";

export interface PlacedNode {
  node: ProvNode;
  key: string;
  column: number;
  row: number;
}

export function layeredLayout(graph: Graph): PlacedNode[] {
  const deps = new Map<string, string[]>(); // dependent key -> dependency keys
  for (const node of graph.nodes) deps.set(nodeKey(node), []);
  for (const edge of graph.edges) {
    deps.get(nodeKey(edge.from))?.push(nodeKey(edge.to));
  }
  const column = new Map<string, number>();
  const place = (key: string, trail: Set<string>): number => {
    const cached = column.get(key);
    if (cached !== undefined) return cached;
    if (trail.has(key)) return 0; // defensive: the server guarantees a DAG
    trail.add(key);
    const below = (deps.get(key) ?? []).map((d) => place(d, trail));
    const col = below.length ? Math.max(...below) + 1 : 0;
    trail.delete(key);
    column.set(key, col);
    return col;
  };
  const rowsUsed = new Map<number, number>();
  return graph.nodes
    .map((node) => ({ node, key: nodeKey(node), column: place(nodeKey(node), new Set()) }))
    .sort((a, b) => a.column - b.column || a.key.localeCompare(b.key))
    .map((p) => {
      const row = rowsUsed.get(p.column) ?? 0;
      rowsUsed.set(p.column, row + 1);
      return { ...p, row };
    });
}

export class GraphStore {
  graph: Graph = { nodes: [], edges: [] };
  selected: ProvNode | null = null;
  /** Node keys revealed by the last trace, plus the selected node. */
  highlighted = new Set<string>();
  lastTraceEdges: ProvEdge[] = [];

  constructor(private client: ApiClient) {}

  async refresh(): Promise<void> {
    this.graph = await this.client.getGraph();
  }

  layout(): PlacedNode[] {
    return layeredLayout(this.graph);
  }

  select(node: ProvNode): void {
    this.selected = node;
    this.highlighted = new Set([nodeKey(node)]);
    this.lastTraceEdges = [];
  }

  /** Expand one step from the selected node; highlights the neighbors. */
  async expand(dir: "forward" | "backward"): Promise<ProvNode[]> {
    if (!this.selected) return [];
    const trace = await this.client.trace(
      this.selected[0],
      this.selected[1],
      dir,
    );
    this.highlighted = new Set([
      nodeKey(this.selected),
      ...trace.nodes.map(nodeKey),
    ]);
    this.lastTraceEdges = trace.neighbors;
    return trace.nodes;
  }
}
