"""Execution engine: job submission, scheduling, sandboxed agents, logs.

Each launched job gets a fresh workspace directory with input/, code/, and
output/ subdirectories.  The agent materializes the input fileset and code,
runs the command, streams log lines through the tag parser, and on success
uploads everything under output/ as a new version of the job's output
fileset, recording the provenance edge.
"""

import logging
import os
import secrets
import shutil
import threading
import time
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

from ..errors import ConflictError, NotFoundError, ValidationError
from ..filesets import FileSetRegistry
from ..metastore import MetaStore, parse_log_line
from ..pathspec import parse_spec, validate_fileset_name
from ..provenance import ProvenanceGraph
from ..store import LakeStore
from .bus import CONTAINER_STATUS, JOB_PROGRESS, EventBus
from .executors import SubprocessExecutor
from .jobs import (
    FAILED,
    FINISHED,
    KILLED,
    LAUNCHING,
    QUEUED,
    RUNNING,
    TERMINAL,
    Job,
    JobRegistry,
    ResourceConfig,
)
from .scheduler import QuotaScheduler

log = logging.getLogger(__name__)


def parse_fileset_ref(ref: str) -> Tuple[str, Optional[int]]:
    """Parse 'name' or 'name:version'."""
    if ":" in ref:
        name, _, ver = ref.partition(":")
        if not ver.isdigit() or int(ver) < 1:
            raise ValidationError(f"bad fileset version in {ref!r}")
        return validate_fileset_name(name), int(ver)
    return validate_fileset_name(ref), None


class Engine:
    def __init__(self, root, store: LakeStore, filesets: FileSetRegistry,
                 metastore: MetaStore, provenance: ProvenanceGraph,
                 k: int = 2, price_schedule=None, executor=None,
                 fsync: bool = True):
        from ..provisioner import PriceSchedule
        self.root = Path(root)
        self.store = store
        self.filesets = filesets
        self.metastore = metastore
        self.provenance = provenance
        self.price_schedule = price_schedule or PriceSchedule()
        self.executor = executor or SubprocessExecutor()
        self.bus = EventBus()
        self.registry = JobRegistry(self.root, fsync=fsync)
        self.scheduler = QuotaScheduler(k, self._launch)
        self.work_dir = self.root / "work"
        self.log_dir = self.root / "logs"
        self.work_dir.mkdir(parents=True, exist_ok=True)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._kill_events: Dict[str, threading.Event] = {}
        self._threads: Dict[str, threading.Thread] = {}

    # -- submission / lifecycle ------------------------------------------

    def submit(self, project: str, user: str, input_fileset: str,
               output_fileset_name: str, command: str, vcpu: float,
               mem_mb: int, code: Sequence[str] = (),
               job_id: Optional[str] = None, billed: bool = True) -> str:
        resources = ResourceConfig(vcpu, mem_mb).validate()
        validate_fileset_name(output_fileset_name)
        name, version = parse_fileset_ref(input_fileset)
        pinned = self.filesets.get(project, name, version)  # must resolve now
        for spec in code:
            parse_spec(spec)
        job = Job(
            job_id=job_id or f"job-{secrets.token_hex(6)}",
            project=project, user=user,
            input_fileset=name, input_fileset_version=pinned.version,
            output_fileset_name=output_fileset_name, command=command,
            resources=resources, code=tuple(code),
            submitted_at=time.time(), billed=billed,
        )
        with self._lock:
            self.registry.add(job)  # duplicate job_id -> ConflictError
            self._kill_events[job.job_id] = threading.Event()
            self.metastore.register(project, "job", job.job_id, {
                "creator": user, "create_time": job.submitted_at,
                "state": QUEUED, "runtime": None, "cost": None,
            })
            self._publish_progress(job, "queued")
            self.scheduler.submit(job.owner, job.job_id)
        return job.job_id

    def get(self, job_id: str) -> Job:
        return self.registry.get(job_id)

    def kill(self, job_id: str) -> str:
        with self._lock:
            job = self.registry.get(job_id)
            if job.state in TERMINAL:
                return f"job {job_id} already {job.state}"
            if job.state == QUEUED and \
                    self.scheduler.remove_queued(job.owner, job_id):
                self._finish(job, KILLED, count_active=False)
                return f"job {job_id} killed"
            self._kill_events[job_id].set()
            return f"kill signal sent to job {job_id}"

    def watch(self, job_id: str):
        return self.registry.watch(job_id)

    def wait(self, job_id: str, timeout: float = 60.0) -> Job:
        return self.registry.wait(job_id, timeout)

    # -- internals --------------------------------------------------------

    def _launch(self, job_id: str) -> None:
        self._transition(self.registry.get(job_id), LAUNCHING)
        thread = threading.Thread(target=self._run_agent, args=(job_id,),
                                  daemon=True)
        self._threads[job_id] = thread
        thread.start()

    def _transition(self, job: Job, state: str, **fields) -> None:
        self.registry.update(job.job_id, state=state, **fields)
        self.metastore.set_attrs(job.project, "job", job.job_id, {
            "state": state, "runtime": job.runtime, "cost": job.cost,
        })
        self._publish_progress(job, state)

    def _publish_progress(self, job: Job, phase: str) -> None:
        self.bus.publish(JOB_PROGRESS, {
            "type": "progress", "job_id": job.job_id, "phase": phase,
            "ts": time.time(),
        })

    def _finish(self, job: Job, state: str, count_active: bool = True,
                **fields) -> None:
        self._transition(job, state, ended_at=time.time(), **fields)
        if count_active:
            self.scheduler.on_terminal(job.owner, job.job_id)

    def _run_agent(self, job_id: str) -> None:
        job = self.registry.get(job_id)
        kill_event = self._kill_events[job_id]
        workspace = self.work_dir / job_id
        log_file = None
        try:
            workspace.mkdir(parents=True)
            for sub in ("input", "code", "output"):
                (workspace / sub).mkdir()
            self.bus.publish(CONTAINER_STATUS, {
                "type": "container", "job_id": job_id, "status": "created",
                "ts": time.time()})
        except OSError as exc:
            self._finish(job, FAILED, error=f"workspace creation failed: {exc}")
            return
        output_tags = []
        log_file = open(self.log_dir / f"{job_id}.log", "a", encoding="utf-8")

        def on_line(line: str) -> None:
            log_file.write(line + "\n")
            log_file.flush()
            self.registry.record_event(job_id, {"type": "log", "line": line})
            self.bus.publish(JOB_PROGRESS, {
                "type": "log", "job_id": job_id, "line": line})
            directive = parse_log_line(line)
            if directive is not None:
                self._apply_tag(job, directive, output_tags)

        try:
            try:
                self._publish_progress(job, "downloading")
                input_fs = self.filesets.get(job.project, job.input_fileset,
                                             job.input_fileset_version)
                self.filesets.materialize(input_fs, workspace / "input")
                self._materialize_code(job, workspace / "code")
            except Exception as exc:
                self._finish(job, FAILED, error=f"input materialization: {exc}")
                return
            if kill_event.is_set():
                self._finish(job, KILLED)
                return
            env = dict(os.environ)
            env.update({
                "ACAI_JOB_ID": job.job_id,
                "ACAI_VCPU": str(job.resources.vcpu),
                "ACAI_MEM_MB": str(job.resources.mem_mb),
                "ACAI_OUTPUT_DIR": str(workspace / "output"),
            })
            self._transition(job, RUNNING, started_at=time.time())
            result = self.executor.run(job, workspace, env, on_line, kill_event)
            from ..provisioner import job_cost
            job.runtime = result.runtime
            job.cost = float(job_cost(job.resources, result.runtime,
                                      self.price_schedule))
            self.registry.update(job_id, runtime=job.runtime, cost=job.cost)
            if kill_event.is_set():
                self._finish(job, KILLED)
                return
            if result.exit_code != 0:
                self._finish(job, FAILED,
                             error=f"exit code {result.exit_code}")
                return
            try:
                self._publish_progress(job, "uploading")
                output_fs = self._upload_output(job, workspace / "output")
            except Exception as exc:
                self._finish(job, FAILED, error=f"output upload: {exc}")
                return
            for key, value in output_tags:
                self.metastore.set_attrs(job.project, "fileset",
                                         output_fs.ref, {key: value})
            self._finish(job, FINISHED,
                         output_fileset_version=output_fs.version)
        finally:
            log_file.close()
            self.bus.publish(CONTAINER_STATUS, {
                "type": "container", "job_id": job_id, "status": "terminated",
                "ts": time.time()})
            shutil.rmtree(workspace, ignore_errors=True)

    def _materialize_code(self, job: Job, dest: Path) -> None:
        for raw in job.code:
            spec = parse_spec(raw)

            def resolver(name, version):
                return self.filesets.get(job.project, name, version)

            for path, version in self.store.resolve(job.project, spec, resolver):
                data = self.store.download(job.project, path, version)
                target = dest / path.lstrip("/")
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_bytes(data)

    def _upload_output(self, job: Job, output_dir: Path):
        files = sorted(p for p in output_dir.rglob("*") if p.is_file())
        entries = []
        if files:
            rels = [p.relative_to(output_dir).as_posix() for p in files]
            paths = [f"/{job.output_fileset_name}/{rel}" for rel in rels]
            session = self.store.start_session(job.project, job.user, paths)
            try:
                for local, path in zip(files, paths):
                    self.store.store_blob(session.entries[path].ticket,
                                          local.read_bytes())
                versions = self.store.commit_session(session.session_id)
            except Exception:
                self.store.abort_session(session.session_id)
                raise
            entries = [(fv.path, fv.version) for fv in versions]
        output_fs = self.filesets.register_snapshot(
            job.project, job.user, job.output_fileset_name, entries,
            source_specs=(), sources=())
        self.provenance.add_job_edge(
            job.project, job.job_id,
            (output_fs.name, output_fs.version),
            (job.input_fileset, job.input_fileset_version))
        return output_fs

    def _apply_tag(self, job: Job, directive, output_tags) -> None:
        if directive.fileset == "self":
            self.metastore.set_attrs(job.project, "job", job.job_id,
                                     {directive.key: directive.value})
        elif directive.fileset == job.input_fileset:
            ref = f"{job.input_fileset}:{job.input_fileset_version}"
            self.metastore.set_attrs(job.project, "fileset", ref,
                                     {directive.key: directive.value})
        elif directive.fileset == job.output_fileset_name:
            # output fileset does not exist until upload; applied afterwards
            output_tags.append((directive.key, directive.value))
        else:
            log.warning("tag for unrelated fileset %r dropped (job %s)",
                        directive.fileset, job.job_id)
