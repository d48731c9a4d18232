"""Structural summaries: boundary states, cycle witnesses, action frequency."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping

from ..model import StateGraph


@dataclass(frozen=True)
class StructuralSummary:
    initial_states: tuple[Mapping[str, str], ...]
    terminal_states: tuple[Mapping[str, str], ...]
    cycles: tuple[tuple[str, ...], ...]
    action_frequency: tuple[tuple[str, int], ...]
    node_count: int
    edge_count: int

    def to_doc(self) -> dict:
        def render(bindings: Mapping[str, str]) -> str:
            return " /\\ ".join(f"{k} = {' '.join(bindings[k].split())}"
                                for k in sorted(bindings))

        return {
            "initial": [render(b) for b in self.initial_states],
            "terminal": [render(b) for b in self.terminal_states],
            "cycles": [list(c) for c in self.cycles],
            "actions": [{"action": a, "count": c} for a, c in self.action_frequency],
            "nodes": self.node_count,
            "edges": self.edge_count,
        }


def _tarjan_sccs(nodes: list[str], succ: dict[str, list[str]]) -> list[list[str]]:
    """Iterative Tarjan; recursion-free so deep graphs cannot blow the stack."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = 0

    for start in nodes:
        if start in index:
            continue
        work: list[tuple[str, int]] = [(start, 0)]
        while work:
            node, child_i = work.pop()
            if child_i == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            children = succ.get(node, ())
            advanced = False
            for i in range(child_i, len(children)):
                child = children[i]
                if child not in index:
                    work.append((node, i + 1))
                    work.append((child, 0))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            if low[node] == index[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                sccs.append(component)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return sccs


def _shortest_cycle_through(start: str, members: set[str],
                            succ: dict[str, list[str]]) -> tuple[str, ...]:
    """Shortest cycle through ``start`` staying inside ``members`` (BFS)."""
    parent: dict[str, str] = {}
    frontier = [start]
    seen = {start}
    while frontier:
        next_frontier = []
        for u in sorted(frontier, key=int):
            for v in sorted(succ.get(u, ()), key=int):
                if v == start:
                    path = [u]
                    while path[-1] != start:
                        path.append(parent[path[-1]])
                    path.reverse()
                    return tuple(path)
                if v in members and v not in seen:
                    seen.add(v)
                    parent[v] = u
                    next_frontier.append(v)
        frontier = next_frontier
    raise AssertionError(f"no cycle through {start} inside its own component")


def summarize_structure(graph: StateGraph, top_k: int = 10) -> StructuralSummary:
    if top_k < 1:
        raise ValueError("top_k must be >= 1")

    succ: dict[str, list[str]] = {}
    self_loops: set[str] = set()
    for edge in graph.edges:
        succ.setdefault(edge.src, []).append(edge.dst)
        if edge.src == edge.dst:
            self_loops.add(edge.src)
    succ = {u: sorted(set(vs), key=int) for u, vs in succ.items()}

    node_order = sorted(graph.nodes, key=int)
    initial = tuple(graph.nodes[fp].bindings for fp in sorted(graph.initial_ids, key=int))
    terminal = tuple(graph.nodes[fp].bindings for fp in node_order
                     if graph.nodes[fp].is_terminal)

    witnesses: list[tuple[str, ...]] = [(fp,) for fp in sorted(self_loops, key=int)]
    for scc in _tarjan_sccs(node_order, succ):
        if len(scc) < 2:
            continue
        members = set(scc)
        anchor = min(scc, key=int)
        inner = {u: [v for v in succ.get(u, ()) if v in members] for u in members}
        witnesses.append(_shortest_cycle_through(anchor, members, inner))
    witnesses.sort(key=lambda w: (int(w[0]), len(w)))

    counts = Counter(e.action_label for e in graph.edges)
    frequency = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]

    return StructuralSummary(
        initial_states=initial,
        terminal_states=terminal,
        cycles=tuple(witnesses),
        action_frequency=tuple(frequency),
        node_count=len(graph.nodes),
        edge_count=len(graph.edges),
    )
