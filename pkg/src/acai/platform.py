"""Composition root wiring all platform services over one data directory."""

from pathlib import Path
from typing import Optional

from .auth import AuthStore
from .config import Config
from .engine.core import Engine
from .filesets import FileSetRegistry
from .metastore import MetaStore
from .provenance import ProvenanceGraph
from .provisioner import Profiler
from .store import LakeStore


class Platform:
    def __init__(self, config: Optional[Config] = None, executor=None):
        self.config = config or Config()
        root = Path(self.config.data_dir)
        root.mkdir(parents=True, exist_ok=True)
        fsync = self.config.fsync
        self.auth = AuthStore(root, fsync=fsync)
        self.metastore = MetaStore(root, fsync=fsync)
        self.provenance = ProvenanceGraph(root, fsync=fsync)
        self.store = LakeStore(root, fsync=fsync, on_commit=self._on_commit)
        self.filesets = FileSetRegistry(root, self.store,
                                        provenance=self.provenance,
                                        metastore=self.metastore, fsync=fsync)
        self.engine = Engine(root, self.store, self.filesets, self.metastore,
                             self.provenance, k=self.config.quota_k,
                             price_schedule=self.config.price_schedule,
                             executor=executor, fsync=fsync)
        self.profiler = Profiler(root, engine=self.engine)

    def _on_commit(self, versions):
        for fv in versions:
            self.metastore.register(fv.project, "file",
                                    f"{fv.path}:{fv.version}", {
                                        "creator": fv.creator,
                                        "create_time": fv.created_at,
                                        "size": fv.size,
                                    })
