"""Marking violating states on a graph from a counterexample trace."""

from __future__ import annotations

from dataclasses import replace

from ..errors import TraceStateUnmatched
from ..model import ErrorCategory, StateGraph, TlcError, TraceState, normalize_bindings

DEADLOCK_PSEUDO_PROPERTY = "DEADLOCK"
TEMPORAL_PSEUDO_PROPERTY = "TEMPORAL_PROPERTY"


def mark_violations(graph: StateGraph, error: TlcError) -> StateGraph:
    """Return a new graph with violation flags set on the nodes matched by
    the error's trace. Trace states are matched by normalized bindings."""
    if error.trace is None:
        raise ValueError("error has no trace to mark from")

    table = graph.node_by_bindings()

    def match(state: TraceState) -> str:
        key = normalize_bindings(state.bindings)
        if key not in table:
            raise TraceStateUnmatched(state.index)
        return table[key]

    if error.category is ErrorCategory.TEMPORAL_VIOLATION and error.trace.lasso_start:
        targets = [s for s in error.trace.states if s.index >= error.trace.lasso_start]
        prop = error.property_name or TEMPORAL_PSEUDO_PROPERTY
    elif error.category is ErrorCategory.DEADLOCK:
        targets = [error.trace.states[-1]]
        prop = DEADLOCK_PSEUDO_PROPERTY
    else:
        targets = [error.trace.states[-1]]
        prop = error.property_name or TEMPORAL_PSEUDO_PROPERTY

    nodes = dict(graph.nodes)
    for state in targets:
        fp = match(state)
        node = nodes[fp]
        props = node.violated_properties
        if prop not in props:
            props = props + (prop,)
        nodes[fp] = replace(node, is_violating=True, violated_properties=props)
    return StateGraph(nodes=nodes, edges=graph.edges, initial_ids=graph.initial_ids)
