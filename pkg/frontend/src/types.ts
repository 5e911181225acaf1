/** Shared domain types mirroring the gateway's JSON payloads. */

export type JobState =
  | "queued"
  | "launching"
  | "running"
  | "finished"
  | "failed"
  | "killed";

export const TERMINAL_STATES: ReadonlySet<JobState> = new Set([
  "finished",
  "failed",
  "killed",
]);

// legal next states per current state; mirrors the server's job FSM
export const TRANSITIONS: Readonly<Record<JobState, readonly JobState[]>> = {
  queued: ["launching", "killed"],
  launching: ["running", "failed", "killed"],
  running: ["finished", "failed", "killed"],
  finished: [],
  failed: [],
  killed: [],
};

export interface Job {
  job_id: string;
  user: string;
  input_fileset: string;
  input_fileset_version: number;
  output_fileset_name: string;
  output_fileset_version: number | null;
  command: string;
  vcpu: number;
  mem_mb: number;
  state: JobState;
  submitted_at: number;
  started_at: number | null;
  ended_at: number | null;
  runtime: number | null;
  cost: number | null;
  error: string | null;
}

export type JobEvent =
  | { type: "state"; state: JobState; ts: number }
  | { type: "log"; line: string }
  | { type: "gap" }
  | { type: "progress"; job_id: string; phase: string }
  | { type: string; [key: string]: unknown };

export type ProvNode = [string, number]; // [fileset name, version]

export interface ProvEdge {
  from: ProvNode;
  to: ProvNode;
  kind: "job_execution" | "fileset_creation";
  action_id: string;
}

export interface Graph {
  nodes: ProvNode[];
  edges: ProvEdge[];
}

export interface Trace {
  neighbors: ProvEdge[];
  nodes: ProvNode[];
}

export interface TaggedValue {
  type: "string" | "number" | "null";
  value: string | number | null;
}

export interface MetaRecord {
  kind: string;
  entity_id: string;
  attributes: Record<string, TaggedValue>;
}

export function nodeKey(node: ProvNode): string {
  return `${node[0]}:${node[1]}`;
}
