"""Append-only newline-delimited JSON journals.

All durable state in the platform (catalog, sessions, filesets, provenance,
metadata, jobs) is kept as replayable event journals.  One JSON object per
line; a partially written trailing line (crash mid-append) is ignored on
replay.
"""

import json
import os
import threading
from pathlib import Path


class Journal:
    def __init__(self, path: Path, fsync: bool = True):
        self.path = Path(path)
        self.fsync = fsync
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: dict) -> None:
        line = json.dumps(record, separators=(",", ":")) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line)
                if self.fsync:
                    f.flush()
                    os.fsync(f.fileno())

    def replay(self):
        """Yield every complete record in append order."""
        if not self.path.exists():
            return
        with open(self.path, "r", encoding="utf-8") as f:
            for line in f:
                if not line.endswith("\n"):
                    break  # torn tail write
                line = line.strip()
                if not line:
                    continue
                yield json.loads(line)
