"""In-process pub/sub event bus with the two platform topics.

Publishes never block: each subscriber has a bounded buffer and a slow
subscriber loses its oldest events, replaced by a single gap marker.
"""

import threading
from collections import deque
from typing import Dict, List

CONTAINER_STATUS = "container_status"
JOB_PROGRESS = "job_progress"

GAP = {"type": "gap"}


class Subscription:
    def __init__(self, maxlen: int = 1000):
        self._queue = deque()
        self._maxlen = maxlen
        self._cond = threading.Condition()
        self.closed = False

    def _put(self, event: dict) -> None:
        with self._cond:
            if len(self._queue) >= self._maxlen:
                self._queue.popleft()
                if not self._queue or self._queue[0] is not GAP:
                    self._queue.appendleft(GAP)
            self._queue.append(event)
            self._cond.notify_all()

    def get(self, timeout=None):
        """Next event, or None on timeout / close."""
        with self._cond:
            if not self._queue:
                self._cond.wait(timeout)
            if self._queue:
                return self._queue.popleft()
            return None

    def close(self) -> None:
        with self._cond:
            self.closed = True
            self._cond.notify_all()


class EventBus:
    def __init__(self):
        self._lock = threading.Lock()
        self._topics: Dict[str, List[Subscription]] = {
            CONTAINER_STATUS: [], JOB_PROGRESS: [],
        }

    def subscribe(self, topic: str, maxlen: int = 1000) -> Subscription:
        sub = Subscription(maxlen)
        with self._lock:
            self._topics[topic].append(sub)
        return sub

    def unsubscribe(self, topic: str, sub: Subscription) -> None:
        with self._lock:
            if sub in self._topics[topic]:
                self._topics[topic].remove(sub)
        sub.close()

    def publish(self, topic: str, event: dict) -> None:
        with self._lock:
            subs = list(self._topics[topic])
        for sub in subs:
            sub._put(event)
