"""Chain compaction: collapse pass-through runs into counted summary edges.

A node is pass-through when it has exactly one incoming and one outgoing
edge carrying the same action label, no violation flag, and is neither
initial nor terminal. Collapsing is lossless: every summary edge retains
its elided node sequence, and :func:`expand_compacted` reconstructs the
original graph exactly.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping

from ..model import Edge, StateGraph, StateNode


@dataclass(frozen=True)
class SummaryEdge:
    src: str
    dst: str
    action_label: str
    collapsed_count: int
    elided: tuple[str, ...]  # interior fingerprints in path order


@dataclass(frozen=True)
class CompactedGraph:
    nodes: Mapping[str, StateNode]
    edges: tuple[Edge, ...]
    summary_edges: tuple[SummaryEdge, ...]
    elided_nodes: Mapping[str, StateNode]
    initial_ids: tuple[str, ...]

    def to_doc(self) -> dict:
        return {
            "nodes": [
                {
                    "id": fp,
                    "vars": {k: n.bindings[k] for k in sorted(n.bindings)},
                    "initial": n.is_initial,
                    "terminal": n.is_terminal,
                    "violating": n.is_violating,
                    "violated": list(n.violated_properties),
                }
                for fp, n in sorted(self.nodes.items(), key=lambda kv: int(kv[0]))
            ],
            "edges": [
                {"from": e.src, "to": e.dst, "action": e.action_label}
                for e in sorted(self.edges, key=lambda e: (int(e.src), int(e.dst), e.action_label))
            ],
            "summary_edges": [
                {
                    "from": s.src,
                    "to": s.dst,
                    "action": s.action_label,
                    "collapsed": s.collapsed_count,
                    "elided": list(s.elided),
                }
                for s in sorted(self.summary_edges,
                                key=lambda s: (int(s.src), int(s.dst), s.action_label))
            ],
            "initial": sorted(self.initial_ids, key=int),
        }


def _degrees(graph: StateGraph) -> tuple[dict[str, list[Edge]], dict[str, list[Edge]]]:
    ins: dict[str, list[Edge]] = {fp: [] for fp in graph.nodes}
    outs: dict[str, list[Edge]] = {fp: [] for fp in graph.nodes}
    for edge in graph.edges:
        outs[edge.src].append(edge)
        ins[edge.dst].append(edge)
    return ins, outs


def compact_chains(graph: StateGraph) -> CompactedGraph:
    ins, outs = _degrees(graph)

    def eligible(fp: str) -> bool:
        node = graph.nodes[fp]
        if node.is_initial or node.is_violating:
            return False
        if len(ins[fp]) != 1 or len(outs[fp]) != 1:
            return False
        if ins[fp][0].src == fp:  # a self-loop has no distinct entry and exit
            return False
        return ins[fp][0].action_label == outs[fp][0].action_label

    interior = {fp for fp in graph.nodes if eligible(fp)}
    consumed_nodes: set[str] = set()
    consumed_edges: Counter = Counter()
    summaries: list[SummaryEdge] = []

    for start in sorted(interior, key=int):
        if start in consumed_nodes:
            continue
        # Walk to the head of the maximal run containing `start`.
        head = start
        ring = False
        while True:
            pred = ins[head][0].src
            if pred not in interior:
                break
            if pred == start:
                ring = True
                break
            head = pred
        if ring:
            # A pure cycle of pass-through nodes has no natural endpoint;
            # the minimum fingerprint survives and anchors a self summary.
            members = [head]
            cur = outs[head][0].dst
            while cur != head:
                members.append(cur)
                cur = outs[cur][0].dst
            anchor = min(members, key=int)
            i = members.index(anchor)
            ordered = members[i:] + members[:i]
            chain = ordered[1:]
            src = dst = anchor
        else:
            chain = [head]
            while True:
                nxt = outs[chain[-1]][0].dst
                if nxt in interior and nxt not in chain:
                    chain.append(nxt)
                else:
                    break
            src = ins[chain[0]][0].src
            dst = outs[chain[-1]][0].dst

        label = outs[chain[0]][0].action_label if chain else outs[src][0].action_label
        consumed_nodes.update(chain)
        consumed_edges[(src, chain[0], label)] += 1
        for a, b in zip(chain, chain[1:]):
            consumed_edges[(a, b, label)] += 1
        consumed_edges[(chain[-1], dst, label)] += 1
        summaries.append(SummaryEdge(
            src=src, dst=dst, action_label=label,
            collapsed_count=len(chain), elided=tuple(chain)))

    kept_edges = []
    budget = Counter(consumed_edges)
    for edge in graph.edges:
        key = (edge.src, edge.dst, edge.action_label)
        if budget.get(key, 0) > 0:
            budget[key] -= 1
        else:
            kept_edges.append(edge)

    surviving = {fp: n for fp, n in graph.nodes.items() if fp not in consumed_nodes}
    elided = {fp: graph.nodes[fp] for fp in consumed_nodes}
    return CompactedGraph(
        nodes=surviving,
        edges=tuple(kept_edges),
        summary_edges=tuple(summaries),
        elided_nodes=elided,
        initial_ids=graph.initial_ids,
    )


def expand_compacted(compacted: CompactedGraph) -> StateGraph:
    """Reinsert every elided run; inverse of :func:`compact_chains`."""
    nodes = dict(compacted.nodes)
    nodes.update(compacted.elided_nodes)
    edges = list(compacted.edges)
    for s in compacted.summary_edges:
        path = (s.src,) + s.elided + (s.dst,)
        for a, b in zip(path, path[1:]):
            edges.append(Edge(a, b, s.action_label))
    return StateGraph(nodes=nodes, edges=tuple(edges), initial_ids=compacted.initial_ids)
