"""Parsers for checker output: tool-mode message frames, statistics, error
classification, counterexample traces, source locations, and the dot-format
state-graph dump.

All functions are pure; none touches the filesystem. ``parse_tool_output``
never raises on arbitrary input except for :class:`UnrecognizedFraming`,
which signals that the text is not tool-mode output at all.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Optional

from .errors import (
    DanglingEdge,
    DotParseFailure,
    MalformedBinding,
    MalformedLocation,
    MalformedTrace,
    UnrecognizedFraming,
)
from .model import (
    CounterexampleTrace,
    ErrorCategory,
    RunStats,
    SourceLocation,
    StateGraph,
    StateNode,
    TlcError,
    TraceState,
    make_graph,
)

# Tool-mode frames: @!@!@STARTMSG <code>:<severity> @!@!@ ... @!@!@ENDMSG <code> @!@!@
_START_RE = re.compile(r"^@!@!@STARTMSG (\d+):(\d+) @!@!@\s*$")
_END_RE = re.compile(r"^@!@!@ENDMSG (\d+) @!@!@\s*$")

SEVERITY_ERROR = 1
SEVERITY_STATE = 4

_STATS_RE = re.compile(
    r"([\d,]+) states generated.*?([\d,]+) distinct states found", re.DOTALL)
_PROGRESS_RE = re.compile(
    r"Progress\(%?([\d,]+)%?\) at [^:]*: ([\d,]+) states generated.*?"
    r"([\d,]+) distinct states found", re.DOTALL)
_DEPTH_RE = re.compile(r"The depth of the complete state graph search is ([\d,]+)")
_INITIAL_STATES_RE = re.compile(r"Finished computing initial states: ([\d,]+) distinct state")

_LOCATION_RE = re.compile(
    r"line (\d+), col (\d+) to line (\d+), col (\d+) of module (\w+)")
_SANY_POINT_RE = re.compile(r"at line (\d+), column (\d+)")
_PARSING_FILE_RE = re.compile(r"Parsing file .*?(\w+)\.tla\s*$", re.MULTILINE)

# Pattern fallbacks for error classification, tried in order on the message body.
_CATEGORY_PATTERNS: tuple[tuple[re.Pattern, ErrorCategory], ...] = (
    (re.compile(r"Invariant \S+ is violated"), ErrorCategory.INVARIANT_VIOLATION),
    (re.compile(r"violated by the initial state"), ErrorCategory.INVARIANT_VIOLATION),
    (re.compile(r"Deadlock reached"), ErrorCategory.DEADLOCK),
    (re.compile(r"Temporal properties were violated"), ErrorCategory.TEMPORAL_VIOLATION),
    (re.compile(r"Parse Error|Parsing or semantic analysis failed|Lexical error"),
     ErrorCategory.PARSE_ERROR),
    (re.compile(r"configuration file|error in the configuration", re.IGNORECASE),
     ErrorCategory.CONFIG_ERROR),
    (re.compile(r"could not be evaluated|The exception was generated|In evaluation,|"
                r"Attempted to"), ErrorCategory.EVALUATION_ERROR),
)

_PROPERTY_RES = (
    re.compile(r"Invariant (\S+) is violated"),
    re.compile(r"Invariant (\S+) is violated by the initial state"),
    re.compile(r"Temporal property (\S+)"),
    re.compile(r"Property (\S+) is violated"),
)


def _load_code_table() -> tuple[dict[int, ErrorCategory], list[tuple[int, int, ErrorCategory]]]:
    raw = json.loads(resources.files("modelbench.data")
                     .joinpath("tlc_message_codes.json").read_text())
    exact = {int(code): ErrorCategory(cat) for code, cat in raw["exact"].items()}
    ranges = [(r["lo"], r["hi"], ErrorCategory(r["category"])) for r in raw["ranges"]]
    return exact, ranges


_CODE_EXACT, _CODE_RANGES = _load_code_table()


@dataclass(frozen=True)
class TlcMessage:
    code: int  # 0 for unframed text between frames
    severity: int
    body: str


@dataclass(frozen=True)
class ParsedOutput:
    messages: tuple[TlcMessage, ...]
    stats: RunStats
    error: Optional[TlcError]
    trace_block: Optional[str]


def classify_code(code: int, body: str) -> ErrorCategory:
    if code in _CODE_EXACT:
        return _CODE_EXACT[code]
    for lo, hi, cat in _CODE_RANGES:
        if lo <= code <= hi:
            return cat
    for pattern, cat in _CATEGORY_PATTERNS:
        if pattern.search(body):
            return cat
    return ErrorCategory.UNKNOWN


def _extract_property(body: str) -> Optional[str]:
    for pattern in _PROPERTY_RES:
        m = pattern.search(body)
        if m:
            return m.group(1).rstrip(".")
    return None


def _split_frames(raw: str) -> list[TlcMessage]:
    messages: list[TlcMessage] = []
    current: Optional[tuple[int, int]] = None
    buf: list[str] = []
    loose: list[str] = []

    def flush_loose():
        text = "\n".join(loose).strip("\n")
        if text.strip():
            messages.append(TlcMessage(0, 5, text))
        loose.clear()

    for line in raw.splitlines():
        start = _START_RE.match(line)
        end = _END_RE.match(line)
        if start and current is None:
            flush_loose()
            current = (int(start.group(1)), int(start.group(2)))
            buf = []
        elif end and current is not None and int(end.group(1)) == current[0]:
            messages.append(TlcMessage(current[0], current[1], "\n".join(buf).strip("\n")))
            current = None
        elif current is not None:
            buf.append(line)
        else:
            loose.append(line)
    if current is not None:
        # Truncated output (killed run): keep the partial frame.
        messages.append(TlcMessage(current[0], current[1], "\n".join(buf).strip("\n")))
    flush_loose()
    return messages


def _collect_stats(messages: list[TlcMessage]) -> RunStats:
    generated = distinct = depth = 0
    for msg in messages:
        if msg.code == 2199:
            m = _STATS_RE.search(msg.body)
            if m:
                generated = int(m.group(1).replace(",", ""))
                distinct = int(m.group(2).replace(",", ""))
        elif msg.code in (2200, 2209):
            m = _PROGRESS_RE.search(msg.body)
            if m:
                depth = max(depth, int(m.group(1).replace(",", "")))
                generated = max(generated, int(m.group(2).replace(",", "")))
                distinct = max(distinct, int(m.group(3).replace(",", "")))
        elif msg.code == 2194:
            m = _DEPTH_RE.search(msg.body)
            if m:
                depth = int(m.group(1).replace(",", ""))
        elif msg.code == 2190 and generated == 0:
            m = _INITIAL_STATES_RE.search(msg.body)
            if m:
                generated = distinct = int(m.group(1).replace(",", ""))
    return RunStats(states_generated=generated, distinct_states=distinct, depth=depth)


def _error_locations(messages: list[TlcMessage], primary: TlcMessage,
                     category: ErrorCategory) -> tuple[SourceLocation, ...]:
    locations = []
    for m in _LOCATION_RE.finditer(primary.body):
        a, b, c, d = (int(m.group(i)) for i in range(1, 5))
        locations.append(SourceLocation(m.group(5), a, b, c, d))
    if not locations and category is ErrorCategory.PARSE_ERROR:
        # SANY reports bare "at line L, column C" points in unframed text;
        # attribute them to the most recently parsed module.
        module = None
        for msg in messages:
            pf = _PARSING_FILE_RE.findall(msg.body)
            if pf:
                module = pf[-1]
            if msg is primary:
                break
            if msg.code == 0:
                for pm in _SANY_POINT_RE.finditer(msg.body):
                    line, col = int(pm.group(1)), int(pm.group(2))
                    locations.append(SourceLocation(module or "?", line, col, line, col))
    return tuple(locations)


def parse_tool_output(raw: str) -> ParsedOutput:
    """Split tool-mode output into messages, extract statistics, classify the
    first fatal message, and reassemble the counterexample trace block."""
    messages = _split_frames(raw)
    if not any(m.code != 0 for m in messages):
        raise UnrecognizedFraming("no tool-mode message frames found; was the run started with tool output enabled?")

    stats = _collect_stats(messages)

    trace_parts: list[str] = []
    for msg in messages:
        if msg.severity != SEVERITY_STATE:
            continue
        body = msg.body.strip("\n")
        if re.match(r"^\d+:", body):
            body = "State " + body
        trace_parts.append(body)
    trace_block = "\n\n".join(trace_parts) if trace_parts else None

    error: Optional[TlcError] = None
    for msg in messages:
        if msg.severity != SEVERITY_ERROR:
            continue
        category = classify_code(msg.code, msg.body)
        error = TlcError(
            category=category,
            message=msg.body,
            property_name=_extract_property(msg.body),
            locations=_error_locations(messages, msg, category),
        )
        break

    if error is not None and trace_block and error.category in (
            ErrorCategory.INVARIANT_VIOLATION, ErrorCategory.TEMPORAL_VIOLATION,
            ErrorCategory.DEADLOCK):
        try:
            trace = parse_trace(trace_block)
        except MalformedTrace:
            trace = None
        if trace is not None:
            error = TlcError(
                category=error.category,
                message=error.message,
                property_name=error.property_name,
                locations=error.locations,
                trace=trace,
            )

    return ParsedOutput(tuple(messages), stats, error, trace_block)


# --- counterexample traces ---

_STATE_HEADER_RE = re.compile(r"^(?:State )?(\d+): <(.*)>\s*$")
_BACK_TO_STATE_RE = re.compile(r"^Back to state (\d+)(?::.*)?\s*$")


def parse_trace(trace_block: str) -> CounterexampleTrace:
    """Parse a block of ``State <i>: <label>`` sections (the ``State`` prefix
    is optional, matching raw tool-mode frames) into an ordered trace."""
    states: list[TraceState] = []
    lasso_start: Optional[int] = None
    header: Optional[tuple[int, str]] = None
    body: list[str] = []

    def close():
        nonlocal header
        if header is None:
            return
        index, label = header
        try:
            bindings = parse_state_block("\n".join(body))
        except MalformedBinding as exc:
            raise MalformedTrace(f"state {index}: {exc.message}") from exc
        states.append(TraceState(index=index, action_label=label, bindings=bindings))
        header = None
        body.clear()

    for line in trace_block.splitlines():
        m = _STATE_HEADER_RE.match(line.strip())
        if m:
            close()
            header = (int(m.group(1)), m.group(2))
            continue
        b = _BACK_TO_STATE_RE.match(line.strip())
        if b:
            close()
            lasso_start = int(b.group(1))
            continue
        if header is not None:
            body.append(line)
        elif line.strip():
            raise MalformedTrace(f"unexpected text outside any state section: {line!r}")
    close()

    if not states:
        raise MalformedTrace("no state headers found")
    try:
        return CounterexampleTrace(states=tuple(states), lasso_start=lasso_start)
    except ValueError as exc:
        raise MalformedTrace(str(exc)) from exc


_BINDING_RE = re.compile(r"^/\\ (\w+) = (.*)$")


def parse_state_block(text: str) -> dict[str, str]:
    """Parse ``/\\ var = value`` conjunct lines into a binding map. Values are
    verbatim text; lines not starting a new conjunct continue the previous
    value."""
    bindings: dict[str, str] = {}
    current: Optional[str] = None
    for line in text.splitlines():
        m = _BINDING_RE.match(line)
        if m:
            current = m.group(1)
            bindings[current] = m.group(2)
        elif current is not None and line.strip():
            bindings[current] += "\n" + line
        elif line.strip():
            raise MalformedBinding(f"expected a '/\\ var = value' line, got {line!r}")
    for var, value in bindings.items():
        if not value.strip():
            raise MalformedBinding(f"binding for {var!r} has no value")
    return bindings


def render_state_block(bindings: dict[str, str]) -> str:
    return "\n".join(f"/\\ {var} = {value}" for var, value in bindings.items())


_FULL_LOCATION_RE = re.compile(
    r"^\s*line (\d+), col (\d+) to line (\d+), col (\d+) of module (\w+)\s*$")


def parse_location(text: str) -> SourceLocation:
    m = _FULL_LOCATION_RE.match(text)
    if not m:
        raise MalformedLocation(f"not a location string: {text!r}")
    a, b, c, d = (int(m.group(i)) for i in range(1, 5))
    try:
        return SourceLocation(m.group(5), a, b, c, d)
    except ValueError as exc:
        raise MalformedLocation(str(exc)) from exc


# --- dot-format graph dump ---
#
# Only the checker-emitted subset is handled: a digraph header, optional
# cluster subgraphs (the action-label legend is skipped entirely), node
# statements with quoted labels, and edge statements with action labels.

_NODE_STMT_RE = re.compile(r'^\s*"?(-?\d+)"?\s*\[(.*)\]\s*;?\s*$')
_EDGE_STMT_RE = re.compile(r'^\s*"?(-?\d+)"?\s*->\s*"?(-?\d+)"?\s*(?:\[(.*)\])?\s*;?\s*$')
_LABEL_ATTR_RE = re.compile(r'label\s*=\s*"((?:\\.|[^"\\])*)"')
_FILLED_RE = re.compile(r"style\s*=\s*\"?filled\"?")
_ESCAPE_RE = re.compile(r"\\(.)")


def _unescape_label(label: str) -> str:
    return _ESCAPE_RE.sub(lambda m: "\n" if m.group(1) == "n" else m.group(1), label)


def _strip_quoted(line: str) -> str:
    return re.sub(r'"(?:\\.|[^"\\])*"', '""', line)


def parse_dot_graph(dot_text: str) -> StateGraph:
    text = dot_text.strip()
    if not text:
        raise DotParseFailure("empty dump")

    header_seen = False
    depth = 0
    legend_depth: Optional[int] = None
    node_bindings: dict[str, dict[str, str]] = {}
    styled_initial: list[str] = []
    edges: list[tuple[str, str, str]] = []

    for line in text.splitlines():
        structural = _strip_quoted(line)
        if not header_seen:
            if "digraph" in structural and "{" in structural:
                header_seen = True
                depth += structural.count("{") - structural.count("}")
                if depth == 0 and structural.rstrip().endswith("}"):
                    break  # single-line `digraph G {}`
                continue
            if structural.strip():
                raise DotParseFailure(f"not a digraph dump: {line!r}")
            continue

        opens, closes = structural.count("{"), structural.count("}")
        if legend_depth is not None:
            depth += opens - closes
            if depth < legend_depth:
                legend_depth = None
            continue
        if "subgraph" in structural and opens:
            if "cluster_legend" in line:
                legend_depth = depth + 1
            depth += opens - closes
            continue
        if opens or closes:
            depth += opens - closes
            if depth < 0:
                raise DotParseFailure("unbalanced braces")
            continue

        em = _EDGE_STMT_RE.match(line)
        if em:
            label_m = _LABEL_ATTR_RE.search(em.group(3) or "")
            action = _unescape_label(label_m.group(1)) if label_m else ""
            edges.append((em.group(1), em.group(2), action))
            continue
        nm = _NODE_STMT_RE.match(line)
        if nm:
            fp, attrs = nm.group(1), nm.group(2)
            label_m = _LABEL_ATTR_RE.search(attrs)
            if label_m:
                try:
                    node_bindings[fp] = parse_state_block(_unescape_label(label_m.group(1)))
                except MalformedBinding as exc:
                    raise DotParseFailure(f"node {fp}: bad state label: {exc.message}") from exc
            else:
                node_bindings.setdefault(fp, {})
            if _FILLED_RE.search(attrs) and fp not in styled_initial:
                styled_initial.append(fp)
            continue
        # Attribute assignments (nodesep=..., color=...) and defaults fall through.

    if not header_seen:
        raise DotParseFailure("not a digraph dump")
    if depth != 0:
        raise DotParseFailure("unbalanced braces")

    for src, dst, _ in edges:
        if src not in node_bindings:
            raise DanglingEdge(f"edge source {src} has no node statement")
        if dst not in node_bindings:
            raise DanglingEdge(f"edge target {dst} has no node statement")

    if styled_initial:
        initial = styled_initial
    else:
        with_in = {dst for _, dst, _ in edges}
        initial = [fp for fp in node_bindings if fp not in with_in]

    nodes = [StateNode(fingerprint=fp, bindings=b) for fp, b in node_bindings.items()]
    return make_graph(nodes, edges, sorted(initial, key=int))


def graph_to_dot(graph: StateGraph) -> str:
    """Serialize in the same dump subset ``parse_dot_graph`` reads, so the
    export round-trips."""
    def esc(text: str) -> str:
        return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")

    lines = ["strict digraph DiskGraph {", "nodesep=0.35;",
             "subgraph cluster_graph {", 'color="white";']
    for fp in sorted(graph.nodes, key=int):
        node = graph.nodes[fp]
        label = esc(render_state_block({k: node.bindings[k] for k in sorted(node.bindings)}))
        style = ",style = filled" if node.is_initial else ""
        lines.append(f'{fp} [label="{label}"{style}]')
    for e in sorted(graph.edges, key=lambda e: (int(e.src), int(e.dst), e.action_label)):
        lines.append(f'{e.src} -> {e.dst} [label="{esc(e.action_label)}",color="black",fontcolor="black"];')
    lines.append("}}")
    return "\n".join(lines) + "\n"
