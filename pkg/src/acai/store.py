"""Versioned blob storage with transactional batch-upload sessions.

Layout under the store root:

    blobs/<blob_id>     raw blob content
    store.jsonl         event journal (sessions + commits); the catalog of
                        committed (path, version) entries is rebuilt from the
                        commit events on load

Version numbers are assigned only at commit time, under a store-wide lock,
so per-path version sequences are gap-free regardless of how concurrent
sessions interleave or fail.
"""

import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from .errors import (
    ConflictError,
    IncompleteSessionError,
    NotFoundError,
    StaleTicketError,
    ValidationError,
)
from .journal import Journal
from .pathspec import PathSpec, parse_spec, validate_path

PENDING = "pending"
COMMITTED = "committed"
ABORTED = "aborted"


@dataclass(frozen=True)
class FileVersion:
    project: str
    path: str
    version: int
    blob_id: int
    size: int
    created_at: float
    creator: str

    def to_dict(self) -> dict:
        return {
            "project": self.project,
            "path": self.path,
            "version": self.version,
            "blob_id": self.blob_id,
            "size": self.size,
            "created_at": self.created_at,
            "creator": self.creator,
        }


@dataclass
class SessionEntry:
    path: str
    blob_id: int
    ticket: str
    stored: bool = False
    size: int = 0


@dataclass
class UploadSession:
    session_id: str
    project: str
    user: str
    state: str = PENDING
    entries: Dict[str, SessionEntry] = field(default_factory=dict)

    @property
    def all_stored(self) -> bool:
        return all(e.stored for e in self.entries.values())


class LakeStore:
    def __init__(self, root, fsync: bool = True,
                 on_commit: Optional[Callable[[List[FileVersion]], None]] = None):
        self.root = Path(root)
        self.blob_dir = self.root / "blobs"
        self.blob_dir.mkdir(parents=True, exist_ok=True)
        self._journal = Journal(self.root / "store.jsonl", fsync=fsync)
        self._fsync = fsync
        self.on_commit = on_commit
        self._lock = threading.RLock()
        self._commit_lock = threading.Lock()
        # (project, path) -> list of FileVersion, index i holds version i+1
        self._catalog: Dict[Tuple[str, str], List[FileVersion]] = {}
        self._sessions: Dict[str, UploadSession] = {}
        self._tickets: Dict[str, Tuple[str, str]] = {}  # ticket -> (session, path)
        self._next_blob_id = 1
        self._load()

    # -- recovery ---------------------------------------------------------

    def _load(self) -> None:
        for rec in self._journal.replay():
            ev = rec["ev"]
            if ev == "session_start":
                session = UploadSession(rec["sid"], rec["project"], rec["user"])
                for e in rec["entries"]:
                    entry = SessionEntry(e["path"], e["blob_id"], e["ticket"])
                    session.entries[entry.path] = entry
                    self._tickets[entry.ticket] = (session.session_id, entry.path)
                    self._next_blob_id = max(self._next_blob_id, entry.blob_id + 1)
                self._sessions[session.session_id] = session
            elif ev == "blob_stored":
                session = self._sessions[rec["sid"]]
                entry = session.entries[rec["path"]]
                entry.stored = True
                entry.size = rec["size"]
            elif ev == "session_commit":
                session = self._sessions[rec["sid"]]
                session.state = COMMITTED
                for v in rec["versions"]:
                    fv = FileVersion(**v)
                    self._catalog.setdefault((fv.project, fv.path), []).append(fv)
            elif ev == "session_abort":
                session = self._sessions[rec["sid"]]
                session.state = ABORTED
                for entry in session.entries.values():
                    self._delete_blob(entry.blob_id)

    # -- sessions ---------------------------------------------------------

    def start_session(self, project: str, user: str, paths: List[str]) -> UploadSession:
        if not paths:
            raise ValidationError("session must contain at least one path")
        if len(set(paths)) != len(paths):
            raise ValidationError("duplicate path in upload request")
        for p in paths:
            validate_path(p)
        with self._lock:
            session = UploadSession(secrets.token_hex(8), project, user)
            for p in paths:
                blob_id = self._next_blob_id
                self._next_blob_id += 1
                entry = SessionEntry(p, blob_id, secrets.token_hex(16))
                session.entries[p] = entry
                self._tickets[entry.ticket] = (session.session_id, p)
            self._sessions[session.session_id] = session
            self._journal.append({
                "ev": "session_start",
                "sid": session.session_id,
                "project": project,
                "user": user,
                "entries": [
                    {"path": e.path, "blob_id": e.blob_id, "ticket": e.ticket}
                    for e in session.entries.values()
                ],
            })
            return session

    def store_blob(self, ticket: str, data: bytes) -> int:
        with self._lock:
            if ticket not in self._tickets:
                raise StaleTicketError("unknown ticket")
            sid, path = self._tickets[ticket]
            session = self._sessions[sid]
            if session.state != PENDING:
                raise StaleTicketError(f"session is {session.state}")
            entry = session.entries[path]
        # blob write happens outside the session lock; re-store overwrites
        blob_path = self.blob_dir / str(entry.blob_id)
        with open(blob_path, "wb") as f:
            f.write(data)
            if self._fsync:
                f.flush()
                os.fsync(f.fileno())
        with self._lock:
            if session.state != PENDING:
                raise StaleTicketError(f"session is {session.state}")
            entry.stored = True
            entry.size = len(data)
            self._journal.append({
                "ev": "blob_stored", "sid": sid, "path": path, "size": len(data),
            })
        return len(data)

    def commit_session(self, session_id: str) -> List[FileVersion]:
        with self._commit_lock:
            with self._lock:
                session = self._get_session(session_id)
                if session.state != PENDING:
                    raise ConflictError(f"session already {session.state}")
                if not session.all_stored:
                    missing = [e.path for e in session.entries.values() if not e.stored]
                    raise IncompleteSessionError(
                        f"entries not stored yet: {missing}")
                now = time.time()
                versions = []
                for entry in session.entries.values():
                    prior = self._catalog.get((session.project, entry.path), [])
                    versions.append(FileVersion(
                        project=session.project,
                        path=entry.path,
                        version=len(prior) + 1,
                        blob_id=entry.blob_id,
                        size=entry.size,
                        created_at=now,
                        creator=session.user,
                    ))
                self._journal.append({
                    "ev": "session_commit",
                    "sid": session_id,
                    "versions": [v.to_dict() for v in versions],
                })
                session.state = COMMITTED
                for fv in versions:
                    self._catalog.setdefault((fv.project, fv.path), []).append(fv)
        if self.on_commit is not None:
            self.on_commit(versions)
        return versions

    def abort_session(self, session_id: str) -> None:
        with self._lock:
            session = self._get_session(session_id)
            if session.state == ABORTED:
                return
            if session.state == COMMITTED:
                raise ConflictError("cannot abort a committed session")
            session.state = ABORTED
            self._journal.append({"ev": "session_abort", "sid": session_id})
            for entry in session.entries.values():
                self._delete_blob(entry.blob_id)

    def get_session(self, session_id: str) -> UploadSession:
        with self._lock:
            return self._get_session(session_id)

    def pending_sessions(self, project: Optional[str] = None) -> List[UploadSession]:
        with self._lock:
            return [s for s in self._sessions.values()
                    if s.state == PENDING and (project is None or s.project == project)]

    def _get_session(self, session_id: str) -> UploadSession:
        if session_id not in self._sessions:
            raise NotFoundError(f"no such session: {session_id}")
        return self._sessions[session_id]

    def _delete_blob(self, blob_id: int) -> None:
        try:
            (self.blob_dir / str(blob_id)).unlink()
        except FileNotFoundError:
            pass

    # -- catalog reads ----------------------------------------------------

    def stat(self, project: str, path: str, version: Optional[int] = None) -> FileVersion:
        with self._lock:
            history = self._catalog.get((project, path))
            if not history:
                raise NotFoundError(f"no such file: {path}")
            if version is None:
                return history[-1]
            if not 1 <= version <= len(history):
                raise NotFoundError(f"no such version: {path}:{version}")
            return history[version - 1]

    def latest_version(self, project: str, path: str) -> int:
        return self.stat(project, path).version

    def download(self, project: str, path: str, version: Optional[int] = None) -> bytes:
        fv = self.stat(project, path, version)
        blob_path = self.blob_dir / str(fv.blob_id)
        try:
            return blob_path.read_bytes()
        except FileNotFoundError:
            raise NotFoundError(f"blob missing for {path}:{fv.version}")

    def list(self, project: str, prefix: str = "/") -> List[FileVersion]:
        """Latest-version catalog entries whose path starts with prefix."""
        if not prefix.startswith("/"):
            raise ValidationError("prefix must start with '/'")
        with self._lock:
            out = [history[-1] for (proj, path), history in self._catalog.items()
                   if proj == project and path.startswith(prefix)]
        return sorted(out, key=lambda fv: fv.path)

    # -- spec resolution --------------------------------------------------

    def resolve(self, project: str, spec, fileset_resolver=None) -> List[Tuple[str, int]]:
        """Resolve a path spec to concrete (path, version) pairs.

        `fileset_resolver(name, version_or_none)` must return an object with
        an `entries` attribute of (path, version) pairs; it is only invoked
        for specs carrying a fileset scope.
        """
        if isinstance(spec, str):
            spec = parse_spec(spec)
        assert isinstance(spec, PathSpec)
        if spec.fileset_name is None:
            fv = self.stat(project, spec.path_or_prefix, spec.file_version)
            return [(fv.path, fv.version)]
        if fileset_resolver is None:
            raise ValidationError(f"spec {spec.raw!r} requires a fileset resolver")
        fs = fileset_resolver(spec.fileset_name, spec.fileset_version)
        entries = list(fs.entries)
        if spec.is_prefix:
            return [(p, v) for p, v in entries if p.startswith(spec.path_or_prefix)]
        for p, v in entries:
            if p == spec.path_or_prefix:
                return [(p, v)]
        raise NotFoundError(
            f"{spec.path_or_prefix} is not part of fileset {spec.fileset_name}")
