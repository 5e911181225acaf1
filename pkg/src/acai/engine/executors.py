"""Command executors for job agents.

The default executor runs the user command as a sandboxed child process and
measures wall-clock runtime.  The simulated executor computes runtimes
analytically (no sleeping), which lets profiling grids and lifecycle tests
run with simulated clocks.
"""

import os
import signal
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, List


@dataclass
class ExecResult:
    exit_code: int
    runtime: float  # seconds in the running phase


class SubprocessExecutor:
    """Run the command via /bin/sh in the workspace, streaming output lines."""

    def run(self, job, workspace, env, on_line: Callable[[str], None],
            kill_event: threading.Event) -> ExecResult:
        start = time.monotonic()
        proc = subprocess.Popen(
            ["/bin/sh", "-c", job.command],
            cwd=workspace, env=env,
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
            text=True, start_new_session=True,
        )

        def reaper():
            while proc.poll() is None:
                if kill_event.wait(0.05):
                    try:
                        os.killpg(proc.pid, signal.SIGKILL)
                    except ProcessLookupError:
                        pass
                    return

        watcher = threading.Thread(target=reaper, daemon=True)
        watcher.start()
        assert proc.stdout is not None
        for line in proc.stdout:
            on_line(line.rstrip("\n"))
        exit_code = proc.wait()
        return ExecResult(exit_code, time.monotonic() - start)


@dataclass
class SimOutcome:
    exit_code: int = 0
    runtime: float = 1.0
    lines: List[str] = field(default_factory=list)


class SimulatedExecutor:
    """Sleep-free executor: outcome computed from the job and environment."""

    def __init__(self, outcome_fn: Callable[[object, dict], SimOutcome]):
        self.outcome_fn = outcome_fn

    def run(self, job, workspace, env, on_line, kill_event) -> ExecResult:
        outcome = self.outcome_fn(job, env)
        for line in outcome.lines:
            on_line(line)
        if kill_event.is_set():
            return ExecResult(-1, 0.0)
        return ExecResult(outcome.exit_code, outcome.runtime)
