"""Project-wide provenance DAG.

Nodes are fileset versions; edges are actions pointing from the dependent
fileset to its dependency (output -> input for job executions, new version
-> source for fileset creations).  The graph stores ids only; attributes
live in the metadata store.
"""

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

from .errors import ConflictError, NotFoundError
from .journal import Journal

JOB_EXECUTION = "job_execution"
FILESET_CREATION = "fileset_creation"

NodeRef = Tuple[str, int]  # (fileset name, version)


@dataclass(frozen=True)
class ProvEdge:
    project: str
    action_id: str
    kind: str
    src: NodeRef  # dependent
    dst: NodeRef  # dependency

    def to_dict(self) -> dict:
        return {
            "project": self.project, "action_id": self.action_id,
            "kind": self.kind, "from": list(self.src), "to": list(self.dst),
        }


class ProvenanceGraph:
    def __init__(self, root, fsync: bool = True):
        self._journal = Journal(Path(root) / "provenance.jsonl", fsync=fsync)
        self._lock = threading.RLock()
        self._nodes: Dict[str, set] = {}                 # project -> {NodeRef}
        self._edges: Dict[str, List[ProvEdge]] = {}      # project -> edges
        self._creation_max = 0
        for rec in self._journal.replay():
            if rec["ev"] == "node":
                self._nodes.setdefault(rec["project"], set()).add(
                    (rec["name"], rec["version"]))
            else:
                edge = ProvEdge(rec["project"], rec["action_id"], rec["kind"],
                                tuple(rec["from"]), tuple(rec["to"]))
                self._edges.setdefault(edge.project, []).append(edge)
                if edge.kind == FILESET_CREATION and edge.action_id.startswith("fsc-"):
                    self._creation_max = max(self._creation_max,
                                             int(edge.action_id[4:]))

    def add_node(self, project: str, name: str, version: int) -> None:
        with self._lock:
            nodes = self._nodes.setdefault(project, set())
            if (name, version) in nodes:
                raise ConflictError(f"node already exists: {name}:{version}")
            nodes.add((name, version))
            self._journal.append({"ev": "node", "project": project,
                                  "name": name, "version": version})

    def has_node(self, project: str, name: str, version: int) -> bool:
        with self._lock:
            return (name, version) in self._nodes.get(project, set())

    def add_creation_edges(self, project: str, new: NodeRef,
                           sources: List[NodeRef]) -> List[ProvEdge]:
        with self._lock:
            self._creation_max += 1
            action_id = f"fsc-{self._creation_max}"
            self._check_node(project, new)
            edges = []
            for src in dict.fromkeys(tuple(s) for s in sources):  # set semantics
                if src == tuple(new):
                    raise ConflictError("self-referential creation edge")
                self._check_node(project, src)
                edges.append(ProvEdge(project, action_id, FILESET_CREATION,
                                      tuple(new), src))
            self._append_edges(project, edges)
            return edges

    def add_job_edge(self, project: str, job_id: str, output: NodeRef,
                     input_: NodeRef) -> ProvEdge:
        with self._lock:
            for e in self._edges.get(project, []):
                if e.kind == JOB_EXECUTION and e.action_id == job_id:
                    raise ConflictError(f"job edge already recorded: {job_id}")
            self._check_node(project, output)
            self._check_node(project, input_)
            edge = ProvEdge(project, job_id, JOB_EXECUTION,
                            tuple(output), tuple(input_))
            self._append_edges(project, [edge])
            return edge

    def _append_edges(self, project: str, edges: List[ProvEdge]) -> None:
        existing = self._edges.setdefault(project, [])
        if self._introduces_cycle(existing + edges):
            raise ConflictError("edge would create a cycle")
        for edge in edges:
            self._journal.append({"ev": "edge", **edge.to_dict()})
            existing.append(edge)

    def _check_node(self, project: str, node: NodeRef) -> None:
        if tuple(node) not in self._nodes.get(project, set()):
            raise NotFoundError(f"no such provenance node: {node}")

    @staticmethod
    def _introduces_cycle(edges: List[ProvEdge]) -> bool:
        # Kahn's algorithm over the dependent -> dependency edges
        adj: Dict[NodeRef, List[NodeRef]] = {}
        indeg: Dict[NodeRef, int] = {}
        for e in edges:
            adj.setdefault(e.src, []).append(e.dst)
            indeg.setdefault(e.src, 0)
            indeg[e.dst] = indeg.get(e.dst, 0) + 1
        ready = [n for n, d in indeg.items() if d == 0]
        seen = 0
        while ready:
            node = ready.pop()
            seen += 1
            for dep in adj.get(node, []):
                indeg[dep] -= 1
                if indeg[dep] == 0:
                    ready.append(dep)
        return seen != len(indeg)

    def trace(self, project: str, name: str, version: int,
              direction: str) -> List[Tuple[ProvEdge, NodeRef]]:
        """One-step neighbors: backward follows dependencies, forward dependents."""
        node = (name, version)
        with self._lock:
            if node not in self._nodes.get(project, set()):
                raise NotFoundError(f"no such provenance node: {name}:{version}")
            out = []
            for e in self._edges.get(project, []):
                if direction == "backward" and e.src == node:
                    out.append((e, e.dst))
                elif direction == "forward" and e.dst == node:
                    out.append((e, e.src))
            return sorted(out, key=lambda pair: (pair[1], pair[0].action_id))

    def full_graph(self, project: str):
        with self._lock:
            nodes = sorted(self._nodes.get(project, set()))
            edges = sorted(self._edges.get(project, []),
                           key=lambda e: (e.src, e.dst, e.action_id))
            return nodes, edges
