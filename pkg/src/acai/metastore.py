"""Key-value metadata for files, filesets, and jobs, plus the log-tag parser.

Queries are conjunctions of equality/range predicates with optional max/min
aggregation; evaluation is a scan over a consistent snapshot, which at desk
scale is also the correctness oracle.
"""

import logging
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from .errors import ConflictError, NotFoundError, QueryError, ValidationError
from .journal import Journal

log = logging.getLogger(__name__)

KINDS = ("file", "fileset", "job")

# Keys that exist with a null value on every entity of a kind until set.
DEFAULT_PREDECLARED = {"job": ("training_loss",)}

Value = Union[str, int, float, None]


@dataclass
class MetaRecord:
    project: str
    kind: str
    entity_id: str
    attributes: Dict[str, Value] = field(default_factory=dict)


@dataclass(frozen=True)
class Predicate:
    key: str
    op: str  # eq | gt | ge | lt | le | between
    value: Union[Value, Tuple[float, float]]

    RANGE_OPS = ("gt", "ge", "lt", "le", "between")


@dataclass
class Query:
    kind: str
    predicates: List[Predicate] = field(default_factory=list)
    aggregate: Optional[Tuple[str, str]] = None  # ("max"|"min", key)
    sort: Optional[Tuple[str, bool]] = None      # (key, descending)
    limit: Optional[int] = None


def _matches(record: MetaRecord, pred: Predicate) -> bool:
    if pred.key not in record.attributes:
        return False
    value = record.attributes[pred.key]
    if value is None:
        return False  # predeclared null keys never match
    if pred.op == "eq":
        return value == pred.value
    if isinstance(value, str):
        raise QueryError(
            f"range predicate {pred.op} over string value for key {pred.key!r}")
    if pred.op == "between":
        lo, hi = pred.value
        return lo <= value <= hi
    if pred.op == "gt":
        return value > pred.value
    if pred.op == "ge":
        return value >= pred.value
    if pred.op == "lt":
        return value < pred.value
    if pred.op == "le":
        return value <= pred.value
    raise QueryError(f"unknown operator: {pred.op}")


class MetaStore:
    def __init__(self, root, fsync: bool = True,
                 predeclared: Optional[dict] = None):
        self.predeclared = dict(DEFAULT_PREDECLARED if predeclared is None
                                else predeclared)
        self._journal = Journal(Path(root) / "meta.jsonl", fsync=fsync)
        self._lock = threading.RLock()
        # (project, kind) -> {entity_id: MetaRecord}
        self._records: Dict[Tuple[str, str], Dict[str, MetaRecord]] = {}
        for rec in self._journal.replay():
            if rec["ev"] == "register":
                self._register(rec["project"], rec["kind"], rec["id"],
                               rec["attrs"])
            else:
                record = self._records[(rec["project"], rec["kind"])][rec["id"]]
                record.attributes.update(rec["attrs"])

    def _register(self, project, kind, entity_id, builtins) -> MetaRecord:
        table = self._records.setdefault((project, kind), {})
        if entity_id in table:
            raise ConflictError(f"{kind} {entity_id} already registered")
        attrs = {k: None for k in self.predeclared.get(kind, ())}
        attrs.update(builtins)
        record = MetaRecord(project, kind, entity_id, attrs)
        table[entity_id] = record
        return record

    def register(self, project: str, kind: str, entity_id: str,
                 builtins: Dict[str, Value]) -> MetaRecord:
        if kind not in KINDS:
            raise ValidationError(f"unknown entity kind: {kind}")
        with self._lock:
            record = self._register(project, kind, entity_id, builtins)
            self._journal.append({"ev": "register", "project": project,
                                  "kind": kind, "id": entity_id,
                                  "attrs": builtins})
            return record

    def set_attrs(self, project: str, kind: str, entity_id: str,
                  attrs: Dict[str, Value]) -> MetaRecord:
        with self._lock:
            record = self._get(project, kind, entity_id)
            record.attributes.update(attrs)
            self._journal.append({"ev": "set", "project": project, "kind": kind,
                                  "id": entity_id, "attrs": attrs})
            return record

    def get(self, project: str, kind: str, entity_id: str) -> MetaRecord:
        with self._lock:
            return self._get(project, kind, entity_id)

    def _get(self, project, kind, entity_id) -> MetaRecord:
        table = self._records.get((project, kind), {})
        if entity_id not in table:
            raise NotFoundError(f"no such {kind}: {entity_id}")
        return table[entity_id]

    def query(self, project: str, q: Query) -> List[str]:
        """Entity ids matching all predicates, after aggregate/sort/limit."""
        with self._lock:
            snapshot = list(self._records.get((project, q.kind), {}).values())
        matched = [r for r in snapshot
                   if all(_matches(r, p) for p in q.predicates)]
        if q.aggregate is not None:
            op, key = q.aggregate
            if op not in ("max", "min"):
                raise QueryError(f"unknown aggregate: {op}")
            scored = [(r.attributes[key], r) for r in matched
                      if isinstance(r.attributes.get(key), (int, float))]
            if not scored:
                return []
            best = max(v for v, _ in scored) if op == "max" else \
                min(v for v, _ in scored)
            matched = [r for v, r in scored if v == best]
        if q.sort is not None:
            key, descending = q.sort
            matched.sort(key=lambda r: (r.attributes.get(key) is None,
                                        r.attributes.get(key)
                                        if r.attributes.get(key) is not None
                                        else 0),
                         reverse=descending)
        ids = [r.entity_id for r in matched]
        if q.limit is not None:
            ids = ids[:q.limit]
        return ids


# -- log tag parsing ------------------------------------------------------

@dataclass(frozen=True)
class TagDirective:
    fileset: str  # fileset name or the literal "self" (the job itself)
    key: str
    value: Value
    numeric: bool


_TAG_RE = re.compile(
    r"^\[ACAI_TAG(_NUM)?\] ([^@:\s/]+) ([A-Za-z_][A-Za-z0-9_.\-]*):(.*)$")


def parse_log_line(line: str) -> Optional[TagDirective]:
    """Extract a metadata tag directive from one log line, or None.

    Never raises: malformed numeric values are dropped with a warning.
    """
    match = _TAG_RE.match(line.rstrip("\n"))
    if match is None:
        return None
    numeric = match.group(1) is not None
    fileset, key, value = match.group(2), match.group(3), match.group(4)
    if numeric:
        try:
            value = float(value)
        except ValueError:
            log.warning("malformed numeric tag dropped: %r", line)
            return None
    return TagDirective(fileset, key, value, numeric)
