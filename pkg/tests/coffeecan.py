"""Independent oracle for the bean-can fixture model.

Simulates the fixture spec's transition system by brute-force BFS and
synthesizes checker-style artifacts (tool-mode stdout, dot dump) from the
result. The simulation is the source of truth the parsers are tested
against; nothing here goes through the code under test.

Model (one record variable ``can`` with fields black/white):

  Init:               can = [black |-> 0, white |-> MaxBeanCount]
  PickSameColorWhite: count > 1 and white >= 2  ->  black+1, white+WHITE_DELTA
  PickSameColorBlack: count > 1 and black >= 2  ->  black-1
  PickDifferentColor: count > 1 and black >= 1 and white >= 1 -> black-1

WHITE_DELTA is -2 in the correct spec and -1 in the buggy mutation; the
invariant ``WhiteParityOdd`` (white % 2 = 1) separates the two.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

MAX_BEANS = 5
INVARIANT_NAME = "WhiteParityOdd"
MODULE_NAME = "CoffeeCan"

State = tuple[int, int]  # (black, white)


def state_text(state: State) -> str:
    return f"[black |-> {state[0]}, white |-> {state[1]}]"


def fingerprint(state: State) -> str:
    """Deterministic signed 64-bit id rendered as decimal, like checker output."""
    digest = hashlib.sha256(f"can={state_text(state)}".encode()).digest()
    return str(int.from_bytes(digest[:8], "big", signed=True))


def invariant_holds(state: State) -> bool:
    return state[1] % 2 == 1


def enabled_actions(state: State, white_delta: int) -> list[tuple[str, State]]:
    black, white = state
    count = black + white
    firings = []
    if count > 1 and white >= 2:
        firings.append(("PickSameColorWhite", (black + 1, white + white_delta)))
    if count > 1 and black >= 2:
        firings.append(("PickSameColorBlack", (black - 1, white)))
    if count > 1 and black >= 1 and white >= 1:
        firings.append(("PickDifferentColor", (black - 1, white)))
    return firings


@dataclass
class Exploration:
    states: list[State] = field(default_factory=list)  # BFS discovery order
    levels: dict[State, int] = field(default_factory=dict)
    edges: list[tuple[State, State, str]] = field(default_factory=list)
    initial: list[State] = field(default_factory=list)
    violation: State | None = None
    trace: list[tuple[str, State]] | None = None  # (action label, state)
    states_generated: int = 0
    queue_left: int = 0

    @property
    def distinct_states(self) -> int:
        return len(self.states)

    @property
    def depth(self) -> int:
        return max(self.levels.values()) + 1 if self.levels else 0


def explore(max_beans: int = MAX_BEANS, white_delta: int = -2,
            check_deadlock: bool = False) -> Exploration:
    """BFS like the checker: invariants are checked as states are generated;
    exploration stops at the first violation."""
    result = Exploration()
    init = (0, max_beans)
    parent: dict[State, tuple[State, str]] = {}

    def build_trace(bad: State) -> list[tuple[str, State]]:
        chain: list[tuple[str, State]] = []
        cur: State | None = bad
        while cur is not None:
            if cur in parent:
                prev, action = parent[cur]
                chain.append((action, cur))
                cur = prev
            else:
                chain.append(("Initial predicate", cur))
                cur = None
        chain.reverse()
        return chain

    result.initial = [init]
    result.states = [init]
    result.levels[init] = 0
    result.states_generated = 1
    if not invariant_holds(init):
        result.violation = init
        result.trace = build_trace(init)
        return result

    queue: list[State] = [init]
    while queue:
        state = queue.pop(0)
        firings = enabled_actions(state, white_delta)
        if not firings and check_deadlock:
            result.violation = state
            result.trace = build_trace(state)
            result.queue_left = len(queue)
            return result
        for action, succ in firings:
            result.states_generated += 1
            result.edges.append((state, succ, action))
            if succ not in result.levels:
                result.states.append(succ)
                result.levels[succ] = result.levels[state] + 1
                parent[succ] = (state, action)
                if not invariant_holds(succ):
                    result.violation = succ
                    result.trace = build_trace(succ)
                    result.queue_left = len(queue) + 1
                    return result
                queue.append(succ)
    return result


# --- synthesis of checker-shaped artifacts ---

FAKE_TIME = "2026-08-01 12:00:00"


def _frame(code: int, severity: int, body: str) -> str:
    return (f"@!@!@STARTMSG {code}:{severity} @!@!@\n"
            f"{body}\n"
            f"@!@!@ENDMSG {code} @!@!@\n")


def action_location(spec_text: str, action: str) -> str:
    """Definition span of an action, reported the way the checker decorates
    trace headers: the right-hand side of the definition."""
    lines = spec_text.split("\n")
    start = next(i for i, ln in enumerate(lines) if ln.startswith(f"{action} =="))
    end = start + 1
    while end + 1 < len(lines) and lines[end + 1].startswith("    "):
        end += 1
    first_col = len(lines[start + 1]) - len(lines[start + 1].lstrip()) + 1
    return (f"line {start + 2}, col {first_col} to line {end + 1}, "
            f"col {len(lines[end])} of module {MODULE_NAME}")


def trace_frames(exploration: Exploration, spec_text: str) -> str:
    parts = []
    for i, (action, state) in enumerate(exploration.trace, start=1):
        if action == "Initial predicate":
            label = "<Initial predicate>"
        else:
            label = f"<{action} {action_location(spec_text, action)}>"
        parts.append(_frame(2217, 4, f"{i}: {label}\n/\\ can = {state_text(state)}\n"))
    return "".join(parts)


def tool_output(exploration: Exploration, spec_text: str) -> tuple[str, int]:
    """Full tool-mode stdout for the run plus the process exit status."""
    out = [
        _frame(2262, 0, "TLC2 Version 2.18 of Day Month 20?? (rev: fixture)"),
        _frame(2187, 0, "Running breadth-first search Model-Checking with fp 22 and seed "
                        "-9049644843340582038 with 1 worker on 4 cores with 1024MB heap "
                        "[pid: 4242] (Linux 5.15 amd64, fixture runtime, MSBDiskFPSet, "
                        "DiskStateQueue)."),
        _frame(2220, 0, "Starting SANY..."),
        f"Parsing file /workspace/{MODULE_NAME}.tla\n"
        "Parsing file /tmp/Naturals.tla\n"
        "Semantic processing of module Naturals\n"
        f"Semantic processing of module {MODULE_NAME}\n",
        _frame(2219, 0, "SANY finished."),
        _frame(2185, 0, f"Starting... ({FAKE_TIME})"),
        _frame(2189, 0, "Computing initial states..."),
        _frame(2190, 0, f"Finished computing initial states: {len(exploration.initial)} "
                        f"distinct state generated at {FAKE_TIME}."),
    ]
    if exploration.violation is not None:
        deadlocked = not enabled_actions(exploration.violation, 0) and \
            invariant_holds(exploration.violation)
        if deadlocked:
            out.append(_frame(2114, 1, "Deadlock reached."))
            exit_status = 11
        else:
            out.append(_frame(2110, 1, f"Invariant {INVARIANT_NAME} is violated."))
            exit_status = 12
        out.append(_frame(2121, 1, "The behavior up to this point is:"))
        out.append(trace_frames(exploration, spec_text))
        out.append(_frame(2199, 0,
                          f"{exploration.states_generated} states generated, "
                          f"{exploration.distinct_states} distinct states found, "
                          f"{exploration.queue_left} states left on queue."))
    else:
        out.append(_frame(2193, 0, "Model checking completed. No error has been found.\n"
                                   "  Estimates of the probability that TLC did not check "
                                   "all reachable states\n  because two distinct states had "
                                   "the same fingerprint:\n  calculated (optimistic):  "
                                   "val = 1.1E-17"))
        out.append(_frame(2199, 0,
                          f"{exploration.states_generated} states generated, "
                          f"{exploration.distinct_states} distinct states found, "
                          "0 states left on queue."))
        out.append(_frame(2194, 0, f"The depth of the complete state graph search is "
                                   f"{exploration.depth}."))
        exit_status = 0
    out.append(_frame(2186, 0, f"Finished in 00s at ({FAKE_TIME})"))
    return "".join(out), exit_status


def parse_error_output(module: str = MODULE_NAME) -> tuple[str, int]:
    body = (
        f"Parsing file /workspace/{module}.tla\n"
        "***Parse Error***\n"
        "\n"
        'Was expecting "==== or more Module body"\n'
        f'Encountered "PickSameColorBlack" at line 28, column 1 and token "=="\n'
    )
    out = [
        _frame(2262, 0, "TLC2 Version 2.18 of Day Month 20?? (rev: fixture)"),
        _frame(2220, 0, "Starting SANY..."),
        body,
        _frame(3002, 1, "Parsing or semantic analysis failed."),
    ]
    return "".join(out), 150


def dot_dump(exploration: Exploration) -> str:
    """State-graph dump in the checker's dot dialect, legend included."""
    def esc(text: str) -> str:
        return text.replace("\\", "\\\\").replace('"', '\\"')

    lines = ["strict digraph DiskGraph {", "nodesep=0.35;",
             "subgraph cluster_graph {", 'color="white";']
    emitted: set[State] = set()
    for state in exploration.initial:
        label = esc(f"/\\ can = {state_text(state)}")
        lines.append(f'{fingerprint(state)} [label="{label}",style = filled]')
        emitted.add(state)
    for src, dst, action in exploration.edges:
        lines.append(f'{fingerprint(src)} -> {fingerprint(dst)} '
                     f'[label="{action}",color="black",fontcolor="black"];')
        if dst not in emitted:
            label = esc(f"/\\ can = {state_text(dst)}")
            lines.append(f'{fingerprint(dst)} [label="{label}"]')
            emitted.add(dst)
    lines.append("}")
    actions = sorted({a for _, _, a in exploration.edges})
    lines.append('subgraph cluster_legend {graph[style=bold];label = "Next State Actions" '
                 'style="solid"')
    lines.append('node [ labeljust="l",colorscheme="paired12",style=filled,shape=record ]')
    for i, action in enumerate(actions, start=1):
        lines.append(f'{1000 + i} [label="{action}",fillcolor={i}]')
    lines.append("}}")
    return "\n".join(lines) + "\n"


def lasso_tool_output() -> str:
    """Temporal-violation output for a three-state clock whose run loops back
    to its second state; exercises the lasso marker."""
    states = ["0", "1", "2"]
    frames = [
        _frame(2262, 0, "TLC2 Version 2.18 of Day Month 20?? (rev: fixture)"),
        _frame(2185, 0, f"Starting... ({FAKE_TIME})"),
        _frame(2116, 1, "Temporal properties were violated."),
        _frame(2121, 1, "The behavior up to this point is:"),
    ]
    for i, value in enumerate(states, start=1):
        label = "<Initial predicate>" if i == 1 else \
            f"<Tick line 8, col 5 to line 9, col 20 of module Clock>"
        frames.append(_frame(2217, 4, f"{i}: {label}\n/\\ x = {value}\n"))
    frames.append(_frame(2218, 4, "Back to state 2: <Tick line 8, col 5 to line 9, "
                                  "col 20 of module Clock>"))
    frames.append(_frame(2186, 0, f"Finished in 00s at ({FAKE_TIME})"))
    return "".join(frames)
