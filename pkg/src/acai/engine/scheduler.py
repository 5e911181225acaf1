"""Quota-based FIFO scheduling.

Each (project, user) owner has its own FIFO queue and may hold at most k
jobs in the launching or running states at once.  The scheduler is a pure
state machine: the caller provides the launch callback and drives ticks
from submission and terminal events.
"""

import threading
from collections import deque
from typing import Callable, Dict, List, Tuple

Owner = Tuple[str, str]


class QuotaScheduler:
    def __init__(self, k: int, launch: Callable[[str], None]):
        if k < 1:
            raise ValueError("quota k must be >= 1")
        self.k = k
        self._launch = launch
        self._lock = threading.RLock()
        self._queues: Dict[Owner, deque] = {}
        self._active: Dict[Owner, set] = {}

    def submit(self, owner: Owner, job_id: str) -> List[str]:
        with self._lock:
            self._queues.setdefault(owner, deque()).append(job_id)
            return self._tick(owner)

    def on_terminal(self, owner: Owner, job_id: str) -> List[str]:
        with self._lock:
            self._active.get(owner, set()).discard(job_id)
            return self._tick(owner)

    def remove_queued(self, owner: Owner, job_id: str) -> bool:
        """Drop a still-queued job (kill before launch)."""
        with self._lock:
            queue = self._queues.get(owner)
            if queue and job_id in queue:
                queue.remove(job_id)
                return True
            return False

    def active_count(self, owner: Owner) -> int:
        with self._lock:
            return len(self._active.get(owner, set()))

    def queued(self, owner: Owner) -> List[str]:
        with self._lock:
            return list(self._queues.get(owner, ()))

    def _tick(self, owner: Owner) -> List[str]:
        queue = self._queues.get(owner, deque())
        active = self._active.setdefault(owner, set())
        launched = []
        while len(active) < self.k and queue:
            job_id = queue.popleft()
            active.add(job_id)
            launched.append(job_id)
            self._launch(job_id)
        return launched
