/** Job table state: live rows plus filtering, sorting, and pagination.
 *
 * The rendered state sequence of any row is a subsequence of the
 * FSM-valid event stream: an event that is not a legal transition from
 * the currently displayed state is ignored rather than rendered.
 */

import type { Job, JobEvent, JobState } from "./types.js";
import { TRANSITIONS } from "./types.js";

export interface JobRow {
  jobId: string;
  user: string;
  state: JobState;
  command: string;
  submittedAt: number;
  runtime: number | null;
  cost: number | null;
  outputFileset: string;
}

export interface Filters {
  state?: JobState;
  user?: string;
}

export type SortKey = "submittedAt" | "runtime" | "cost" | "state" | "jobId";

export const PAGE_SIZE = 20;

function toRow(job: Job): JobRow {
  return {
    jobId: job.job_id,
    user: job.user,
    state: job.state,
    command: job.command,
    submittedAt: job.submitted_at,
    runtime: job.runtime,
    cost: job.cost,
    outputFileset: job.output_fileset_name,
  };
}

export class JobTableStore {
  private rows = new Map<string, JobRow>();
  filters: Filters = {};
  sortKey: SortKey = "submittedAt";
  sortDesc = true;
  page = 0;
  /** Default view: only the signed-in user's jobs. */
  showAllProjectJobs = false;

  constructor(private ownUser: string) {}

  load(jobs: Job[]): void {
    for (const job of jobs) this.rows.set(job.job_id, toRow(job));
  }

  upsert(job: Job): void {
    this.rows.set(job.job_id, toRow(job));
  }

  /** Apply one streaming event; returns true when the row changed. */
  applyEvent(jobId: string, event: JobEvent): boolean {
    const row = this.rows.get(jobId);
    if (!row || event.type !== "state") return false;
    const next = (event as { state: JobState }).state;
    if (next === row.state) return false;
    if (!TRANSITIONS[row.state].includes(next)) return false;
    row.state = next;
    return true;
  }

  stateOf(jobId: string): JobState | undefined {
    return this.rows.get(jobId)?.state;
  }

  private visible(): JobRow[] {
    let rows = [...this.rows.values()];
    if (!this.showAllProjectJobs) {
      rows = rows.filter((r) => r.user === this.ownUser);
    }
    const { state, user } = this.filters;
    if (state) rows = rows.filter((r) => r.state === state);
    if (user) rows = rows.filter((r) => r.user === user);
    const key = this.sortKey;
    rows.sort((a, b) => {
      const av = a[key] ?? -Infinity;
      const bv = b[key] ?? -Infinity;
      const cmp = av < bv ? -1 : av > bv ? 1 : a.jobId.localeCompare(b.jobId);
      return this.sortDesc ? -cmp : cmp;
    });
    return rows;
  }

  pageCount(): number {
    return Math.max(1, Math.ceil(this.visible().length / PAGE_SIZE));
  }

  currentPage(): JobRow[] {
    const page = Math.min(this.page, this.pageCount() - 1);
    return this.visible().slice(page * PAGE_SIZE, (page + 1) * PAGE_SIZE);
  }

  totalVisible(): number {
    return this.visible().length;
  }
}
