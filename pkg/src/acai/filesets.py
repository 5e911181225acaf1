"""File sets: immutable named snapshots of (path, version) references.

A fileset version is created from a list of path specs, resolved
left-to-right against the lake; when two specs bind the same path the later
spec wins.  Every fileset version referenced by a source spec becomes a
creation-dependency edge in the provenance graph.
"""

import shutil
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .errors import EmptyFileSetError, NotFoundError, ValidationError
from .journal import Journal
from .pathspec import parse_spec, validate_fileset_name
from .store import LakeStore


@dataclass(frozen=True)
class FileSetVersion:
    project: str
    name: str
    version: int
    entries: Tuple[Tuple[str, int], ...]
    created_at: float
    creator: str
    source_specs: Tuple[str, ...]
    sources: Tuple[Tuple[str, int], ...] = ()  # fileset versions referenced by specs

    @property
    def ref(self) -> str:
        return f"{self.name}:{self.version}"

    def to_dict(self) -> dict:
        return {
            "project": self.project,
            "name": self.name,
            "version": self.version,
            "entries": [list(e) for e in self.entries],
            "created_at": self.created_at,
            "creator": self.creator,
            "source_specs": list(self.source_specs),
            "sources": [list(s) for s in self.sources],
        }


class FileSetRegistry:
    def __init__(self, root, store: LakeStore, provenance=None, metastore=None,
                 fsync: bool = True):
        self.store = store
        self.provenance = provenance
        self.metastore = metastore
        self._journal = Journal(Path(root) / "filesets.jsonl", fsync=fsync)
        self._lock = threading.RLock()
        # (project, name) -> list of FileSetVersion
        self._filesets: Dict[Tuple[str, str], List[FileSetVersion]] = {}
        for rec in self._journal.replay():
            fs = FileSetVersion(
                project=rec["project"], name=rec["name"], version=rec["version"],
                entries=tuple((p, v) for p, v in rec["entries"]),
                created_at=rec["created_at"], creator=rec["creator"],
                source_specs=tuple(rec["source_specs"]),
                sources=tuple((n, v) for n, v in rec["sources"]),
            )
            self._filesets.setdefault((fs.project, fs.name), []).append(fs)

    def get(self, project: str, name: str,
            version: Optional[int] = None) -> FileSetVersion:
        with self._lock:
            history = self._filesets.get((project, name))
            if not history:
                raise NotFoundError(f"no such fileset: {name}")
            if version is None:
                return history[-1]
            if not 1 <= version <= len(history):
                raise NotFoundError(f"no such fileset version: {name}:{version}")
            return history[version - 1]

    def names(self, project: str) -> List[str]:
        with self._lock:
            return sorted(n for (p, n) in self._filesets if p == project)

    def create(self, project: str, user: str, name: str,
               specs: List[str]) -> FileSetVersion:
        """Resolve specs left-to-right and register the snapshot as a new version."""
        validate_fileset_name(name)
        if not specs:
            raise ValidationError("fileset requires at least one spec")

        def resolver(fs_name, fs_version):
            return self.get(project, fs_name, fs_version)

        merged: Dict[str, int] = {}
        sources: List[Tuple[str, int]] = []
        for raw in specs:
            spec = parse_spec(raw)
            if spec.fileset_name is not None:
                src = self.get(project, spec.fileset_name, spec.fileset_version)
                if (src.name, src.version) not in sources:
                    sources.append((src.name, src.version))
            for path, version in self.store.resolve(project, spec, resolver):
                merged[path] = version  # later spec wins
        if not merged:
            raise EmptyFileSetError(f"specs resolved to no files: {specs}")
        return self.register_snapshot(project, user, name,
                                      sorted(merged.items()),
                                      source_specs=tuple(specs),
                                      sources=tuple(sources))

    def register_snapshot(self, project: str, user: str, name: str,
                          entries, source_specs=(), sources=()) -> FileSetVersion:
        """Register a concrete snapshot as the next version of `name`.

        Used by `create` and by the engine for job outputs (which may
        legitimately be empty).
        """
        validate_fileset_name(name)
        with self._lock:
            history = self._filesets.setdefault((project, name), [])
            fs = FileSetVersion(
                project=project, name=name, version=len(history) + 1,
                entries=tuple(tuple(e) for e in entries),
                created_at=time.time(), creator=user,
                source_specs=tuple(source_specs), sources=tuple(sources),
            )
            self._journal.append(fs.to_dict())
            history.append(fs)

        if self.provenance is not None:
            self.provenance.add_node(project, fs.name, fs.version)
            if sources:
                self.provenance.add_creation_edges(
                    project, (fs.name, fs.version), list(sources))
        if self.metastore is not None:
            self.metastore.register(project, "fileset", fs.ref, {
                "creator": user, "create_time": fs.created_at,
            })
        return fs

    def materialize(self, fs: FileSetVersion, dest) -> List[str]:
        """Write each entry under dest with its version stripped.

        dest must exist and be empty; on any write failure partially written
        files are removed and dest is left empty again.
        """
        dest = Path(dest)
        if not dest.is_dir():
            raise ValidationError(f"destination is not a directory: {dest}")
        if any(dest.iterdir()):
            raise ValidationError(f"destination is not empty: {dest}")
        written: List[str] = []
        try:
            for path, version in fs.entries:
                data = self.store.download(fs.project, path, version)
                target = dest / path.lstrip("/")
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_bytes(data)
                written.append(path)
        except Exception:
            for child in dest.iterdir():
                shutil.rmtree(child) if child.is_dir() else child.unlink()
            raise
        return written
