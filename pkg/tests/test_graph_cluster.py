from __future__ import annotations

import random

import pytest

import graphgen
from modelbench.graph_core import cluster_homogeneous
from modelbench.model import StateNode, make_graph


def is_refinement(finer, coarser) -> bool:
    """Every finer class fits inside exactly one coarser class."""
    lookup = {}
    for i, cluster in enumerate(coarser):
        for fp in cluster:
            lookup[fp] = i
    return all(len({lookup[fp] for fp in cluster}) == 1 for cluster in finer)


class TestClustering:
    def test_distinct_out_labels_all_singletons(self):
        nodes = [StateNode(str(i), {"x": str(i)}) for i in (1, 2, 3)]
        edges = [("1", "2", "A"), ("2", "3", "B")]
        graph = make_graph(nodes, edges, ["1"])
        clusters = cluster_homogeneous(graph, rounds=1)
        assert all(len(c) == 1 for c in clusters)

    def test_symmetric_workers_share_cluster(self):
        graph = graphgen.symmetric_two_worker_graph()
        clusters = cluster_homogeneous(graph, rounds=1)
        worker_cluster = next(c for c in clusters if "201" in c)
        assert worker_cluster == ("201", "202")

    def test_symmetric_workers_oracle_signature(self):
        # Independent signature computation for the hand-built graph: both
        # workers see one incoming Assign, one outgoing Finish, no violation.
        graph = graphgen.symmetric_two_worker_graph()
        sigs = {}
        for fp in graph.nodes:
            outs = sorted(e.action_label for e in graph.edges if e.src == fp)
            ins = sorted(e.action_label for e in graph.edges if e.dst == fp)
            sigs[fp] = (tuple(outs), tuple(ins), graph.nodes[fp].is_violating)
        assert sigs["201"] == sigs["202"]
        assert sigs["100"] != sigs["201"]

    def test_rounds_zero_rejected(self):
        graph = graphgen.chain_graph(["A"])
        with pytest.raises(ValueError):
            cluster_homogeneous(graph, rounds=0)

    def test_violation_flag_separates(self):
        nodes = [StateNode("1", {"x": "a"}),
                 StateNode("2", {"x": "b"}, is_violating=True,
                           violated_properties=("Inv",))]
        graph = make_graph(nodes, [], [])
        clusters = cluster_homogeneous(graph, rounds=1)
        assert clusters == [("1",), ("2",)]

    def test_clusters_partition_nodes(self):
        rng = random.Random(17)
        for _ in range(50):
            graph = graphgen.random_graph(rng, max_nodes=30, violating_fraction=0.1)
            clusters = cluster_homogeneous(graph, rounds=2)
            seen = [fp for cluster in clusters for fp in cluster]
            assert sorted(seen) == sorted(graph.nodes)
            assert len(seen) == len(set(seen))

    def test_more_rounds_refine(self):
        rng = random.Random(23)
        for _ in range(100):
            graph = graphgen.random_graph(rng, max_nodes=25, edge_factor=2.0)
            for r in (1, 2, 3):
                finer = cluster_homogeneous(graph, rounds=r + 1)
                coarser = cluster_homogeneous(graph, rounds=r)
                assert is_refinement(finer, coarser)

    def test_deterministic_order(self):
        rng = random.Random(3)
        graph = graphgen.random_graph(rng, max_nodes=30, edge_factor=2.0)
        assert cluster_homogeneous(graph) == cluster_homogeneous(graph)
        firsts = [int(c[0]) for c in cluster_homogeneous(graph)]
        assert firsts == sorted(firsts)
