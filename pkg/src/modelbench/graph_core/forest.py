"""Spanning forests over state graphs.

Trees are breadth-first so a node's depth equals its shortest transition
distance from the nearest initial state. All tie-breaking is fixed, making
the forest a deterministic function of the graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..model import Edge, StateGraph


@dataclass(frozen=True)
class Tree:
    root: str
    parent: Mapping[str, str]            # child -> parent; root absent
    edge_labels: Mapping[str, str]       # child -> action label of its tree edge
    depth: Mapping[str, int]             # node -> level (root = 0)
    order: Mapping[str, int]             # node -> breadth-first rank (root = 0)
    children: Mapping[str, tuple[str, ...]]

    @property
    def size(self) -> int:
        return len(self.order)

    def nodes(self) -> list[str]:
        return sorted(self.order, key=self.order.__getitem__)

    def subtree_sizes(self) -> dict[str, int]:
        sizes = {fp: 1 for fp in self.order}
        for fp in sorted(self.order, key=lambda n: -self.depth[n]):
            for child in self.children.get(fp, ()):
                sizes[fp] += sizes[child]
        return sizes


@dataclass(frozen=True)
class SpanningForest:
    trees: tuple[Tree, ...]
    cross_edges: tuple[Edge, ...]
    unreachable: tuple[str, ...]

    def tree_of(self, fp: str) -> int | None:
        for i, tree in enumerate(self.trees):
            if fp in tree.order:
                return i
        return None

    def has_node(self, fp: str) -> bool:
        return self.tree_of(fp) is not None


def build_spanning_forest(graph: StateGraph) -> SpanningForest:
    """Grow one breadth-first tree per initial state, roots in ascending
    fingerprint order. A node reachable from several frontiers joins the
    tree that reaches it first; within one frontier ties go to the lowest
    parent fingerprint, then the lowest edge action label."""
    out_edges: dict[str, list[Edge]] = {}
    for edge in graph.edges:
        out_edges.setdefault(edge.src, []).append(edge)

    roots = sorted(set(graph.initial_ids), key=int)
    assignment: dict[str, int] = {}          # node -> tree index
    parents: list[dict[str, str]] = [dict() for _ in roots]
    labels: list[dict[str, str]] = [dict() for _ in roots]
    depths: list[dict[str, int]] = [dict() for _ in roots]

    frontier: list[str] = []
    for i, root in enumerate(roots):
        assignment[root] = i
        depths[i][root] = 0
        frontier.append(root)

    level = 0
    tree_edge_keys: list[tuple[str, str, str]] = []
    while frontier:
        level += 1
        claims: dict[str, list[tuple[str, str]]] = {}
        for u in frontier:
            for edge in out_edges.get(u, ()):
                if edge.dst not in assignment:
                    claims.setdefault(edge.dst, []).append((u, edge.action_label))
        next_frontier = []
        for v in sorted(claims, key=int):
            parent, label = min(claims[v], key=lambda c: (int(c[0]), c[1]))
            tree = assignment[parent]
            assignment[v] = tree
            parents[tree][v] = parent
            labels[tree][v] = label
            depths[tree][v] = level
            tree_edge_keys.append((parent, v, label))
            next_frontier.append(v)
        frontier = next_frontier

    trees = []
    for i, root in enumerate(roots):
        ranked = sorted(depths[i], key=lambda n: (depths[i][n], int(n)))
        order = {fp: rank for rank, fp in enumerate(ranked)}
        children: dict[str, list[str]] = {}
        for child, parent in parents[i].items():
            children.setdefault(parent, []).append(child)
        trees.append(Tree(
            root=root,
            parent=parents[i],
            edge_labels=labels[i],
            depth=depths[i],
            order=order,
            children={p: tuple(sorted(cs, key=lambda c: order[c]))
                      for p, cs in children.items()},
        ))

    # Multiset subtraction: every edge between reachable nodes that is not a
    # tree edge is a cross edge.
    remaining: dict[tuple[str, str, str], int] = {}
    for key in tree_edge_keys:
        remaining[key] = remaining.get(key, 0) + 1
    cross = []
    for edge in graph.edges:
        if edge.src not in assignment or edge.dst not in assignment:
            continue
        key = (edge.src, edge.dst, edge.action_label)
        if remaining.get(key, 0) > 0:
            remaining[key] -= 1
        else:
            cross.append(edge)

    unreachable = tuple(sorted((fp for fp in graph.nodes if fp not in assignment), key=int))
    return SpanningForest(trees=tuple(trees), cross_edges=tuple(cross),
                          unreachable=unreachable)
