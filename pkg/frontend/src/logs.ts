/** Live log panel for one job: replay-then-follow, same as engine.watch. */

import type { JobEvent, JobState } from "./types.js";
import { TERMINAL_STATES, TRANSITIONS } from "./types.js";

export type LogEntry =
  | { kind: "line"; text: string }
  | { kind: "gap" }; // the stream dropped lines here

export class LogPanelStore {
  entries: LogEntry[] = [];
  state: JobState = "queued";
  done = false;

  applyEvent(event: JobEvent): void {
    if (event.type === "log") {
      this.entries.push({ kind: "line", text: (event as { line: string }).line });
    } else if (event.type === "gap") {
      // collapse adjacent gaps into one marker
      if (this.entries[this.entries.length - 1]?.kind !== "gap") {
        this.entries.push({ kind: "gap" });
      }
    } else if (event.type === "state") {
      const next = (event as { state: JobState }).state;
      if (next === this.state || TRANSITIONS[this.state].includes(next)) {
        this.state = next;
      }
      if (TERMINAL_STATES.has(this.state)) this.done = true;
    }
  }

  text(): string {
    return this.entries
      .map((e) => (e.kind === "line" ? e.text : "--- log gap ---"))
      .join("\n");
  }
}
