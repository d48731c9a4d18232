"""Homogeneous-node clustering by color refinement.

Nodes start from a local signature (incoming/outgoing action-label multisets
plus the violation flag) and each round folds in the sorted multiset of
neighbor signatures, in and out kept apart. Clusters are the equivalence
classes after the requested number of rounds; more rounds only ever split
clusters, never merge them.
"""

from __future__ import annotations

from ..model import StateGraph

Signature = tuple


def cluster_homogeneous(graph: StateGraph, rounds: int = 2) -> list[tuple[str, ...]]:
    if rounds < 1:
        raise ValueError("rounds must be >= 1")

    out_nbrs: dict[str, list[str]] = {fp: [] for fp in graph.nodes}
    in_nbrs: dict[str, list[str]] = {fp: [] for fp in graph.nodes}
    out_labels: dict[str, list[str]] = {fp: [] for fp in graph.nodes}
    in_labels: dict[str, list[str]] = {fp: [] for fp in graph.nodes}
    for edge in graph.edges:
        out_nbrs[edge.src].append(edge.dst)
        in_nbrs[edge.dst].append(edge.src)
        out_labels[edge.src].append(edge.action_label)
        in_labels[edge.dst].append(edge.action_label)

    sig: dict[str, Signature] = {
        fp: (tuple(sorted(out_labels[fp])), tuple(sorted(in_labels[fp])),
             graph.nodes[fp].is_violating)
        for fp in graph.nodes
    }

    for _ in range(rounds):
        # Re-index signatures to small ints so they stay bounded.
        palette = {s: i for i, s in enumerate(sorted(set(sig.values())))}
        color = {fp: palette[sig[fp]] for fp in sig}
        sig = {
            fp: (color[fp],
                 tuple(sorted(color[n] for n in out_nbrs[fp])),
                 tuple(sorted(color[n] for n in in_nbrs[fp])))
            for fp in sig
        }

    classes: dict[Signature, list[str]] = {}
    for fp in graph.nodes:
        classes.setdefault(sig[fp], []).append(fp)
    clusters = [tuple(sorted(members, key=int)) for members in classes.values()]
    clusters.sort(key=lambda c: int(c[0]))
    return clusters
