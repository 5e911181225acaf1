/** Thin fetch client for the gateway HTTP API.
 *
 * Every dashboard fact comes through here; there is no other channel to
 * the server. The token rides in the X-ACAI-Token header.
 */

import type {
  Graph,
  Job,
  JobEvent,
  MetaRecord,
  TaggedValue,
  Trace,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private token: string,
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      method,
      headers: {
        "X-ACAI-Token": this.token,
        ...(body === undefined ? {} : { "Content-Type": "application/json" }),
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        detail = (await resp.json()).detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  listJobs(user?: string): Promise<Job[]> {
    const qs = user ? `?user=${encodeURIComponent(user)}` : "";
    return this.request("GET", `/jobs${qs}`);
  }

  getJob(jobId: string): Promise<Job> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  killJob(jobId: string): Promise<{ notice: string }> {
    return this.request("POST", `/jobs/${jobId}/kill`);
  }

  /** Stream job events (replay then live) as parsed ndjson lines. */
  async *watchJob(jobId: string): AsyncGenerator<JobEvent> {
    const resp = await fetch(`${this.baseUrl}/jobs/${jobId}/events`, {
      headers: { "X-ACAI-Token": this.token },
    });
    if (!resp.ok || !resp.body) {
      throw new ApiError(resp.status, "event stream unavailable");
    }
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (value) buffer += decoder.decode(value, { stream: true });
      const lines = buffer.split("\n");
      buffer = lines.pop() ?? "";
      for (const line of lines) {
        if (line.trim()) yield JSON.parse(line) as JobEvent;
      }
      if (done) break;
    }
  }

  getGraph(): Promise<Graph> {
    return this.request("GET", "/provenance/graph");
  }

  trace(
    name: string,
    version: number,
    dir: "forward" | "backward",
  ): Promise<Trace> {
    return this.request(
      "GET",
      `/provenance/${encodeURIComponent(name)}/${version}/trace?dir=${dir}`,
    );
  }

  getMeta(kind: string, entityId: string): Promise<MetaRecord> {
    return this.request("GET", `/meta/${kind}/${entityId}`);
  }

  setMeta(
    kind: string,
    entityId: string,
    attrs: Record<string, TaggedValue>,
  ): Promise<MetaRecord> {
    return this.request("POST", `/meta/${kind}/${entityId}`, { attrs });
  }

  query(body: {
    kind: string;
    predicates?: { key: string; op: string; value: unknown }[];
    aggregate?: [string, string];
    limit?: number;
  }): Promise<{ ids: string[] }> {
    return this.request("POST", "/query", body);
  }
}
