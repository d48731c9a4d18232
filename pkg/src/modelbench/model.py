"""Core domain types: checker results, counterexample traces, state graphs.

Values of state variables are kept as verbatim text throughout; equality is
decided on a whitespace-normalized form because the checker renders the same
value with different layout in traces and graph dumps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Optional


class ErrorCategory(str, Enum):
    PARSE_ERROR = "ParseError"
    SEMANTIC_ERROR = "SemanticError"
    CONFIG_ERROR = "ConfigError"
    INVARIANT_VIOLATION = "InvariantViolation"
    TEMPORAL_VIOLATION = "TemporalViolation"
    DEADLOCK = "Deadlock"
    EVALUATION_ERROR = "EvaluationError"
    TIMEOUT = "Timeout"
    UNKNOWN = "Unknown"


def normalize_value(text: str) -> str:
    """Collapse whitespace runs and strip the ends; the equality form for values."""
    return " ".join(text.split())


def normalize_bindings(bindings: Mapping[str, str]) -> tuple[tuple[str, str], ...]:
    """Canonical, hashable form of a variable-binding map."""
    return tuple(sorted((var, normalize_value(val)) for var, val in bindings.items()))


@dataclass(frozen=True)
class RunStats:
    states_generated: int = 0
    distinct_states: int = 0
    depth: int = 0


@dataclass(frozen=True)
class SourceLocation:
    module: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __post_init__(self):
        if (self.start_line, self.start_col) > (self.end_line, self.end_col):
            raise ValueError(f"location ends before it starts: {self}")

    def to_doc(self) -> dict:
        return {
            "module": self.module,
            "start_line": self.start_line,
            "start_col": self.start_col,
            "end_line": self.end_line,
            "end_col": self.end_col,
        }

    @classmethod
    def from_doc(cls, doc: Mapping) -> "SourceLocation":
        return cls(doc["module"], doc["start_line"], doc["start_col"],
                   doc["end_line"], doc["end_col"])


@dataclass(frozen=True)
class TraceState:
    index: int  # 1-based
    action_label: str
    bindings: Mapping[str, str]


@dataclass(frozen=True)
class CounterexampleTrace:
    states: tuple[TraceState, ...]
    lasso_start: Optional[int] = None

    def __post_init__(self):
        indices = [s.index for s in self.states]
        if indices != list(range(1, len(indices) + 1)):
            raise ValueError(f"trace indices not contiguous from 1: {indices}")
        if self.lasso_start is not None and not (1 <= self.lasso_start <= len(self.states)):
            raise ValueError(f"lasso_start {self.lasso_start} outside trace of length {len(self.states)}")

    def to_doc(self) -> dict:
        doc = {
            "states": [
                {"index": s.index, "action": s.action_label, "vars": dict(s.bindings)}
                for s in self.states
            ],
        }
        doc["lasso_start"] = self.lasso_start
        return doc

    @classmethod
    def from_doc(cls, doc: Mapping) -> "CounterexampleTrace":
        states = tuple(
            TraceState(s["index"], s["action"], dict(s["vars"])) for s in doc["states"]
        )
        return cls(states, doc.get("lasso_start"))


@dataclass(frozen=True)
class TlcError:
    category: ErrorCategory
    message: str
    property_name: Optional[str] = None
    locations: tuple[SourceLocation, ...] = ()
    trace: Optional[CounterexampleTrace] = None

    def to_doc(self) -> dict:
        return {
            "category": self.category.value,
            "property": self.property_name,
            "message": self.message,
            "locations": [loc.to_doc() for loc in self.locations],
            "trace": self.trace.to_doc() if self.trace else None,
        }

    @classmethod
    def from_doc(cls, doc: Mapping) -> "TlcError":
        return cls(
            category=ErrorCategory(doc["category"]),
            message=doc["message"],
            property_name=doc.get("property"),
            locations=tuple(SourceLocation.from_doc(d) for d in doc.get("locations", [])),
            trace=CounterexampleTrace.from_doc(doc["trace"]) if doc.get("trace") else None,
        )


@dataclass(frozen=True)
class StateNode:
    fingerprint: str  # signed 64-bit integer as decimal text
    bindings: Mapping[str, str]
    is_initial: bool = False
    is_terminal: bool = False
    is_violating: bool = False
    violated_properties: tuple[str, ...] = ()


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    action_label: str


@dataclass(frozen=True)
class StateGraph:
    nodes: Mapping[str, StateNode]
    edges: tuple[Edge, ...]
    initial_ids: tuple[str, ...]

    def __post_init__(self):
        for e in self.edges:
            if e.src not in self.nodes or e.dst not in self.nodes:
                raise ValueError(f"edge {e} references unknown node")
        for fp in self.initial_ids:
            if fp not in self.nodes:
                raise ValueError(f"initial id {fp} not among nodes")

    def out_degree(self, fp: str) -> int:
        return sum(1 for e in self.edges if e.src == fp)

    def successors(self, fp: str) -> list[Edge]:
        return [e for e in self.edges if e.src == fp]

    def node_by_bindings(self) -> dict[tuple[tuple[str, str], ...], str]:
        """Normalized binding map -> fingerprint (lowest wins on the rare collision)."""
        table: dict[tuple[tuple[str, str], ...], str] = {}
        for fp in sorted(self.nodes, key=int):
            key = normalize_bindings(self.nodes[fp].bindings)
            table.setdefault(key, fp)
        return table


def make_graph(nodes: Iterable[StateNode], edges: Iterable[tuple[str, str, str]],
               initial_ids: Iterable[str]) -> StateGraph:
    """Build a graph, deriving is_initial / is_terminal flags from structure."""
    node_map = {n.fingerprint: n for n in nodes}
    edge_list = tuple(Edge(s, d, a) for s, d, a in edges)
    initial = tuple(dict.fromkeys(initial_ids))  # dedupe, keep order
    has_out = {e.src for e in edge_list}
    flagged = {}
    for fp, node in node_map.items():
        flagged[fp] = replace(
            node,
            is_initial=fp in initial,
            is_terminal=fp not in has_out,
        )
    return StateGraph(nodes=flagged, edges=edge_list, initial_ids=initial)


# --- canonical graph document ---
# Field order is part of the wire contract: nodes, edges, initial; node fields
# id, vars, initial, terminal, violating, violated.

def graph_to_doc(graph: StateGraph) -> dict:
    nodes = []
    for fp in sorted(graph.nodes, key=int):
        n = graph.nodes[fp]
        nodes.append({
            "id": fp,
            "vars": {k: n.bindings[k] for k in sorted(n.bindings)},
            "initial": n.is_initial,
            "terminal": n.is_terminal,
            "violating": n.is_violating,
            "violated": list(n.violated_properties),
        })
    edges = [
        {"from": e.src, "to": e.dst, "action": e.action_label}
        for e in sorted(graph.edges, key=lambda e: (int(e.src), int(e.dst), e.action_label))
    ]
    return {
        "nodes": nodes,
        "edges": edges,
        "initial": sorted(graph.initial_ids, key=int),
    }


def graph_from_doc(doc: Mapping) -> StateGraph:
    nodes = {
        n["id"]: StateNode(
            fingerprint=n["id"],
            bindings=dict(n["vars"]),
            is_initial=n["initial"],
            is_terminal=n["terminal"],
            is_violating=n["violating"],
            violated_properties=tuple(n["violated"]),
        )
        for n in doc["nodes"]
    }
    edges = tuple(Edge(e["from"], e["to"], e["action"]) for e in doc["edges"])
    return StateGraph(nodes=nodes, edges=edges, initial_ids=tuple(doc["initial"]))


def dumps_canonical(doc) -> str:
    """Stable byte layout for persisted documents and API payloads."""
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
