"""Structure, abstraction, and annotation of state graphs."""

from .annotate import mark_violations
from .cluster import cluster_homogeneous
from .compact import CompactedGraph, SummaryEdge, compact_chains, expand_compacted
from .forest import SpanningForest, Tree, build_spanning_forest
from .summary import StructuralSummary, summarize_structure
from .view import (
    DEFAULT_DEPTH_LIMIT,
    DEFAULT_MAX_VISIBLE_NODES,
    RenderGraph,
    TreeIndexEntry,
    ViewState,
    VisibleNode,
    set_fold,
    visible_view,
)

__all__ = [
    "CompactedGraph",
    "DEFAULT_DEPTH_LIMIT",
    "DEFAULT_MAX_VISIBLE_NODES",
    "RenderGraph",
    "SpanningForest",
    "StructuralSummary",
    "SummaryEdge",
    "Tree",
    "TreeIndexEntry",
    "ViewState",
    "VisibleNode",
    "build_spanning_forest",
    "cluster_homogeneous",
    "compact_chains",
    "expand_compacted",
    "mark_violations",
    "set_fold",
    "summarize_structure",
    "visible_view",
]
