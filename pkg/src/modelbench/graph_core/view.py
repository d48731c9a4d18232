"""Fold state and lazy materialization of the active tree.

Folding hides a node's whole tree subtree; cross edges into hidden territory
surface as stub counts on their visible endpoint. Only one tree is
materialized per view; the rest exist as index entries for the toggle panel.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Optional

from ..errors import UnknownNode, UnknownTree
from ..model import Edge, StateGraph, StateNode
from .forest import SpanningForest

DEFAULT_DEPTH_LIMIT = 2
DEFAULT_MAX_VISIBLE_NODES = 500


@dataclass(frozen=True)
class ViewState:
    active_tree: int = 0
    folded: frozenset[str] = frozenset()
    depth_limit: int = DEFAULT_DEPTH_LIMIT

    def __post_init__(self):
        if self.depth_limit < 1:
            raise ValueError("depth_limit must be >= 1")

    def to_doc(self) -> dict:
        return {
            "active_tree": self.active_tree,
            "folded": sorted(self.folded, key=int),
            "depth_limit": self.depth_limit,
        }

    @classmethod
    def from_doc(cls, doc: Mapping) -> "ViewState":
        return cls(
            active_tree=doc.get("active_tree", 0),
            folded=frozenset(doc.get("folded", ())),
            depth_limit=doc.get("depth_limit", DEFAULT_DEPTH_LIMIT),
        )


@dataclass(frozen=True)
class VisibleNode:
    node: StateNode
    depth: int
    rank: int
    folded: bool
    hidden_descendant_count: int
    stub_edge_count: int


@dataclass(frozen=True)
class TreeIndexEntry:
    index: int
    root: str
    root_bindings: Mapping[str, str]
    size: int


@dataclass(frozen=True)
class RenderGraph:
    tree: int
    visible_nodes: tuple[VisibleNode, ...]
    visible_edges: tuple[Edge, ...]
    tree_index: tuple[TreeIndexEntry, ...]
    truncated: bool = False

    def to_doc(self) -> dict:
        return {
            "tree": self.tree,
            "truncated": self.truncated,
            "nodes": [
                {
                    "id": v.node.fingerprint,
                    "vars": {k: v.node.bindings[k] for k in sorted(v.node.bindings)},
                    "initial": v.node.is_initial,
                    "terminal": v.node.is_terminal,
                    "violating": v.node.is_violating,
                    "violated": list(v.node.violated_properties),
                    "depth": v.depth,
                    "rank": v.rank,
                    "folded": v.folded,
                    "hidden": v.hidden_descendant_count,
                    "stubs": v.stub_edge_count,
                }
                for v in self.visible_nodes
            ],
            "edges": [
                {"from": e.src, "to": e.dst, "action": e.action_label}
                for e in self.visible_edges
            ],
            "trees": [
                {
                    "index": t.index,
                    "root": t.root,
                    "vars": {k: t.root_bindings[k] for k in sorted(t.root_bindings)},
                    "size": t.size,
                }
                for t in self.tree_index
            ],
        }


def set_fold(forest: SpanningForest, view: ViewState, node: str, folded: bool) -> ViewState:
    """Pure update of the fold set; idempotent, and unfolding inverts folding."""
    if not forest.has_node(node):
        raise UnknownNode(f"node {node} is not in the forest")
    new = set(view.folded)
    if folded:
        new.add(node)
    else:
        new.discard(node)
    return replace(view, folded=frozenset(new))


def visible_view(graph: StateGraph, forest: SpanningForest, view: ViewState,
                 max_nodes: Optional[int] = DEFAULT_MAX_VISIBLE_NODES) -> RenderGraph:
    if not (0 <= view.active_tree < len(forest.trees)):
        raise UnknownTree(f"tree {view.active_tree} of {len(forest.trees)}")
    tree = forest.trees[view.active_tree]
    sizes = tree.subtree_sizes()

    # A node is visible when every strict tree-ancestor is unfolded and its
    # depth is within the expansion frontier.
    visible: set[str] = set()
    stack = [tree.root]
    while stack:
        fp = stack.pop()
        visible.add(fp)
        if fp in view.folded:
            continue
        for child in tree.children.get(fp, ()):
            if tree.depth[child] <= view.depth_limit:
                stack.append(child)

    ordered = sorted(visible, key=tree.order.__getitem__)
    truncated = False
    if max_nodes is not None and len(ordered) > max_nodes:
        # Rank order is (depth, fingerprint), so a prefix keeps ancestor
        # closure intact.
        ordered = ordered[:max_nodes]
        visible = set(ordered)
        truncated = True

    hidden_counts: dict[str, int] = {}
    for fp in ordered:
        hidden = 0
        for child in tree.children.get(fp, ()):
            if child not in visible:
                hidden += sizes[child]
        hidden_counts[fp] = hidden

    stub_counts = {fp: 0 for fp in ordered}
    cross_visible: list[Edge] = []
    for edge in forest.cross_edges:
        src_vis, dst_vis = edge.src in visible, edge.dst in visible
        if src_vis and dst_vis:
            cross_visible.append(edge)
        elif src_vis:
            stub_counts[edge.src] += 1
        elif dst_vis:
            stub_counts[edge.dst] += 1

    tree_edges = [
        Edge(tree.parent[fp], fp, tree.edge_labels[fp])
        for fp in ordered
        if fp in tree.parent and tree.parent[fp] in visible
    ]
    edges = tuple(sorted(
        tree_edges + cross_visible,
        key=lambda e: (int(e.src), int(e.dst), e.action_label)))

    nodes = tuple(
        VisibleNode(
            node=graph.nodes[fp],
            depth=tree.depth[fp],
            rank=tree.order[fp],
            folded=fp in view.folded,
            hidden_descendant_count=hidden_counts[fp],
            stub_edge_count=stub_counts[fp],
        )
        for fp in ordered
    )
    index = tuple(
        TreeIndexEntry(index=i, root=t.root,
                       root_bindings=graph.nodes[t.root].bindings, size=t.size)
        for i, t in enumerate(forest.trees)
    )
    return RenderGraph(tree=view.active_tree, visible_nodes=nodes,
                       visible_edges=edges, tree_index=index, truncated=truncated)
