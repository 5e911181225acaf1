"""Job records, the lifecycle state machine, and the persistent registry."""

import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

from ..errors import ConflictError, NotFoundError, ValidationError
from ..journal import Journal

QUEUED = "queued"
LAUNCHING = "launching"
RUNNING = "running"
FINISHED = "finished"
FAILED = "failed"
KILLED = "killed"

TERMINAL = (FINISHED, FAILED, KILLED)

# Legal lifecycle transitions.
TRANSITIONS = {
    QUEUED: {LAUNCHING, KILLED},
    LAUNCHING: {RUNNING, FAILED, KILLED},
    RUNNING: {FINISHED, FAILED, KILLED},
    FINISHED: set(),
    FAILED: set(),
    KILLED: set(),
}


@dataclass(frozen=True)
class ResourceConfig:
    vcpu: float
    mem_mb: int

    def validate(self) -> "ResourceConfig":
        if not (0.5 <= self.vcpu <= 8 and round(self.vcpu * 2) == self.vcpu * 2):
            raise ValidationError(
                f"vcpu must be a multiple of 0.5 in [0.5, 8]: {self.vcpu}")
        if not (512 <= self.mem_mb <= 8192 and self.mem_mb % 256 == 0):
            raise ValidationError(
                f"mem_mb must be a multiple of 256 in [512, 8192]: {self.mem_mb}")
        return self


@dataclass
class Job:
    job_id: str
    project: str
    user: str
    input_fileset: str          # name
    input_fileset_version: int  # pinned at submission
    output_fileset_name: str
    command: str
    resources: ResourceConfig
    code: Tuple[str, ...] = ()
    state: str = QUEUED
    submitted_at: float = 0.0
    started_at: Optional[float] = None
    ended_at: Optional[float] = None
    runtime: Optional[float] = None
    cost: Optional[float] = None
    billed: bool = True
    output_fileset_version: Optional[int] = None
    error: Optional[str] = None

    @property
    def owner(self) -> Tuple[str, str]:
        return (self.project, self.user)

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id, "project": self.project, "user": self.user,
            "input_fileset": self.input_fileset,
            "input_fileset_version": self.input_fileset_version,
            "output_fileset_name": self.output_fileset_name,
            "command": self.command,
            "vcpu": self.resources.vcpu, "mem_mb": self.resources.mem_mb,
            "code": list(self.code), "state": self.state,
            "submitted_at": self.submitted_at, "started_at": self.started_at,
            "ended_at": self.ended_at, "runtime": self.runtime,
            "cost": self.cost, "billed": self.billed,
            "output_fileset_version": self.output_fileset_version,
            "error": self.error,
        }


class JobRegistry:
    """Persistent repository of jobs plus the per-job event streams."""

    def __init__(self, root, fsync: bool = True):
        self._journal = Journal(Path(root) / "jobs.jsonl", fsync=fsync)
        self._lock = threading.RLock()
        self._jobs: Dict[str, Job] = {}
        self._events: Dict[str, List[dict]] = {}
        self._cond = threading.Condition(self._lock)
        for rec in self._journal.replay():
            if rec["ev"] == "submit":
                job = self._job_from_dict(rec["job"])
                self._jobs[job.job_id] = job
                self._events[job.job_id] = [
                    {"type": "state", "state": job.state, "ts": job.submitted_at}]
            elif rec["ev"] == "update":
                job = self._jobs[rec["job_id"]]
                for k, v in rec["fields"].items():
                    setattr(job, k, v)
                if "state" in rec["fields"]:
                    self._events[job.job_id].append(
                        {"type": "state", "state": job.state, "ts": rec["ts"]})
        # jobs caught mid-flight by a restart are marked failed
        for job in self._jobs.values():
            if job.state not in TERMINAL:
                job.state = FAILED
                job.error = "interrupted by restart"
                self._events[job.job_id].append(
                    {"type": "state", "state": FAILED, "ts": time.time()})

    @staticmethod
    def _job_from_dict(d: dict) -> Job:
        return Job(
            job_id=d["job_id"], project=d["project"], user=d["user"],
            input_fileset=d["input_fileset"],
            input_fileset_version=d["input_fileset_version"],
            output_fileset_name=d["output_fileset_name"], command=d["command"],
            resources=ResourceConfig(d["vcpu"], d["mem_mb"]),
            code=tuple(d.get("code", ())), state=d["state"],
            submitted_at=d["submitted_at"], started_at=d.get("started_at"),
            ended_at=d.get("ended_at"), runtime=d.get("runtime"),
            cost=d.get("cost"), billed=d.get("billed", True),
            output_fileset_version=d.get("output_fileset_version"),
            error=d.get("error"),
        )

    def add(self, job: Job) -> None:
        with self._lock:
            if job.job_id in self._jobs:
                raise ConflictError(f"job already submitted: {job.job_id}")
            self._jobs[job.job_id] = job
            self._events[job.job_id] = [
                {"type": "state", "state": job.state, "ts": job.submitted_at}]
            self._journal.append({"ev": "submit", "job": job.to_dict()})
            self._cond.notify_all()

    def get(self, job_id: str) -> Job:
        with self._lock:
            if job_id not in self._jobs:
                raise NotFoundError(f"no such job: {job_id}")
            return self._jobs[job_id]

    def list(self, project: Optional[str] = None,
             user: Optional[str] = None) -> List[Job]:
        with self._lock:
            return [j for j in self._jobs.values()
                    if (project is None or j.project == project)
                    and (user is None or j.user == user)]

    def update(self, job_id: str, **fields) -> Job:
        """Persist field changes; a state change is validated against the FSM."""
        with self._lock:
            job = self.get(job_id)
            if "state" in fields:
                new = fields["state"]
                if new not in TRANSITIONS[job.state]:
                    raise ConflictError(
                        f"illegal transition {job.state} -> {new} for {job_id}")
            for k, v in fields.items():
                setattr(job, k, v)
            ts = time.time()
            self._journal.append({"ev": "update", "job_id": job_id,
                                  "fields": fields, "ts": ts})
            if "state" in fields:
                self._events[job_id].append(
                    {"type": "state", "state": job.state, "ts": ts})
            self._cond.notify_all()
            return job

    def record_event(self, job_id: str, event: dict) -> None:
        """Append a non-state event (log line, progress phase) to the stream."""
        with self._lock:
            self.get(job_id)
            self._events[job_id].append(event)
            self._cond.notify_all()

    def events(self, job_id: str) -> List[dict]:
        with self._lock:
            return list(self._events[job_id])

    def watch(self, job_id: str) -> Iterator[dict]:
        """Replay all past events, then follow live ones until terminal."""
        self.get(job_id)
        index = 0
        while True:
            with self._lock:
                while index >= len(self._events[job_id]):
                    self._cond.wait()
                event = self._events[job_id][index]
            index += 1
            yield event
            if event.get("type") == "state" and event["state"] in TERMINAL:
                # drain trailing events recorded before the terminal state
                with self._lock:
                    rest = self._events[job_id][index:]
                for e in rest:
                    yield e
                return

    def wait(self, job_id: str, timeout: float = 60.0) -> Job:
        """Block until the job reaches a terminal state (test/CLI helper)."""
        deadline = time.monotonic() + timeout
        with self._lock:
            while True:
                job = self.get(job_id)
                if job.state in TERMINAL:
                    return job
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimeoutError(f"job {job_id} still {job.state}")
                self._cond.wait(remaining)
