import pytest

from acai.errors import ConflictError, NotFoundError
from acai.provenance import FILESET_CREATION, JOB_EXECUTION, ProvenanceGraph

P = "proj"


@pytest.fixture
def graph(tmp_path):
    return ProvenanceGraph(tmp_path / "prov", fsync=False)


def _nodes(graph, *refs):
    for name, version in refs:
        graph.add_node(P, name, version)


class TestNodes:
    def test_unique_per_version(self, graph):
        graph.add_node(P, "A", 1)
        with pytest.raises(ConflictError):
            graph.add_node(P, "A", 1)
        graph.add_node(P, "A", 2)


class TestCreationEdges:
    def test_merge_edges(self, graph):
        _nodes(graph, ("HotpotQA", 1), ("ColdpotQA", 1), ("MergedQA", 1))
        edges = graph.add_creation_edges(P, ("MergedQA", 1),
                                         [("HotpotQA", 1), ("ColdpotQA", 1)])
        assert len(edges) == 2
        assert all(e.kind == FILESET_CREATION for e in edges)
        assert len({e.action_id for e in edges}) == 1

    def test_update_and_subset_single_edge(self, graph):
        _nodes(graph, ("HotpotQA", 1), ("HotpotQA", 2), ("Subset", 1))
        assert len(graph.add_creation_edges(P, ("HotpotQA", 2),
                                            [("HotpotQA", 1)])) == 1
        assert len(graph.add_creation_edges(P, ("Subset", 1),
                                            [("HotpotQA", 1)])) == 1

    def test_duplicate_source_collapses(self, graph):
        _nodes(graph, ("A", 1), ("B", 1))
        edges = graph.add_creation_edges(P, ("B", 1), [("A", 1), ("A", 1)])
        assert len(edges) == 1

    def test_self_reference_rejected(self, graph):
        _nodes(graph, ("A", 1))
        with pytest.raises(ConflictError):
            graph.add_creation_edges(P, ("A", 1), [("A", 1)])

    def test_missing_node_rejected(self, graph):
        _nodes(graph, ("A", 1))
        with pytest.raises(NotFoundError):
            graph.add_creation_edges(P, ("A", 1), [("Ghost", 1)])


class TestJobEdges:
    def test_output_to_input(self, graph):
        _nodes(graph, ("in", 1), ("out", 1))
        edge = graph.add_job_edge(P, "job-1", ("out", 1), ("in", 1))
        assert edge.kind == JOB_EXECUTION
        assert edge.src == ("out", 1)
        assert edge.dst == ("in", 1)

    def test_duplicate_job_id_rejected(self, graph):
        _nodes(graph, ("in", 1), ("out", 1), ("out", 2))
        graph.add_job_edge(P, "job-1", ("out", 1), ("in", 1))
        with pytest.raises(ConflictError):
            graph.add_job_edge(P, "job-1", ("out", 2), ("in", 1))


class TestTrace:
    def test_backward_reaches_input(self, graph):
        _nodes(graph, ("in", 1), ("out", 1))
        graph.add_job_edge(P, "j", ("out", 1), ("in", 1))
        [(edge, node)] = graph.trace(P, "out", 1, "backward")
        assert node == ("in", 1)
        assert edge.action_id == "j"

    def test_leaf_forward_empty(self, graph):
        _nodes(graph, ("in", 1), ("out", 1))
        graph.add_job_edge(P, "j", ("out", 1), ("in", 1))
        assert graph.trace(P, "out", 1, "forward") == []

    def test_diamond_backward_both_branches(self, graph):
        _nodes(graph, ("src", 1), ("left", 1), ("right", 1), ("merge", 1))
        graph.add_job_edge(P, "j1", ("left", 1), ("src", 1))
        graph.add_job_edge(P, "j2", ("right", 1), ("src", 1))
        graph.add_creation_edges(P, ("merge", 1), [("left", 1), ("right", 1)])
        neighbors = [n for _, n in graph.trace(P, "merge", 1, "backward")]
        assert neighbors == [("left", 1), ("right", 1)]
        # and forward from src reaches both jobs' outputs
        forward = [n for _, n in graph.trace(P, "src", 1, "forward")]
        assert forward == [("left", 1), ("right", 1)]

    def test_unknown_node(self, graph):
        with pytest.raises(NotFoundError):
            graph.trace(P, "ghost", 1, "backward")


class TestFullGraph:
    def test_empty_project(self, graph):
        assert graph.full_graph("empty") == ([], [])

    def test_node_count(self, graph):
        for i in range(5):
            graph.add_node(P, "fs", i + 1)
        nodes, edges = graph.full_graph(P)
        assert len(nodes) == 5
        assert edges == []

    def test_replay_equals_operations(self, tmp_path):
        graph = ProvenanceGraph(tmp_path / "p2", fsync=False)
        _nodes(graph, ("a", 1), ("b", 1), ("c", 1))
        graph.add_creation_edges(P, ("b", 1), [("a", 1)])
        graph.add_job_edge(P, "j", ("c", 1), ("b", 1))
        expected = graph.full_graph(P)
        reopened = ProvenanceGraph(tmp_path / "p2", fsync=False)
        assert reopened.full_graph(P) == expected


class TestAcyclicity:
    def test_cycle_rejected(self, graph):
        _nodes(graph, ("a", 1), ("b", 1))
        graph.add_creation_edges(P, ("b", 1), [("a", 1)])
        with pytest.raises(ConflictError):
            graph.add_creation_edges(P, ("a", 1), [("b", 1)])

    def test_normal_flow_stays_acyclic(self, graph):
        # chained creations and jobs as produced by the public flows
        _nodes(graph, ("d", 1))
        for i in range(2, 6):
            graph.add_node(P, "d", i)
            graph.add_creation_edges(P, ("d", i), [("d", i - 1)])
        nodes, edges = graph.full_graph(P)
        assert len(edges) == 4
