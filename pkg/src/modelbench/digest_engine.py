"""Structural summaries plus LLM explanations of a checked model.

Prompts are byte-deterministic for fixed inputs: the summary is embedded as
the canonical summary document and all clipping rules are fixed constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Mapping, Optional

from .errors import MissingGraph, SelectionOutOfRange
from .graph_core import StructuralSummary, summarize_structure
from .llm_gateway import Conversation, LlmClient
from .model import StateGraph, dumps_canonical

SECTION_NAMES = ("overview", "variables", "constants", "actions",
                 "transitions", "invariants")

SUMMARY_TOP_K = 10
PROMPT_MAX_CYCLES = 5
PROMPT_MAX_CYCLE_NODES = 12

# Versioned prompt templates; any wording change shows up as a test diff.
DIGEST_SYSTEM_PROMPT = """\
You explain TLA+ specifications to engineers. You are given a specification,
its model configuration, and a structural summary of the state graph the
checker explored. Explain what the model does and why it behaves that way.

Respond in Markdown using exactly these six section headings, in this order:

## Overview
## Variables
## Constants
## Actions
## Transitions
## Invariants

Under Actions, explain each action's effect, preconditions, and
postconditions in plain language. Under Transitions, relate the most
frequent transitions and any cycles to the behavior of the model. Keep every
statement grounded in the provided material."""

_FOCUS_INSTRUCTION = ("Focus the explanation on the highlighted segment; cover the "
                      "rest of the model only as context.")


@dataclass(frozen=True)
class DigestRequest:
    spec_text: str
    cfg_text: str
    run_id: str
    selection: Optional[tuple[int, int]] = None  # 1-based inclusive line range


@dataclass(frozen=True)
class DigestReport:
    summary_doc: Mapping
    explanation: Mapping[str, str]
    selection_echo: Optional[str]
    model_used: str
    created_at: str

    def to_doc(self) -> dict:
        return {
            "model": self.model_used,
            "created_at": self.created_at,
            "selection_echo": self.selection_echo,
            "summary": dict(self.summary_doc),
            "explanation": {name: self.explanation.get(name, "")
                            for name in SECTION_NAMES},
        }


def _selection_excerpt(request: DigestRequest) -> Optional[str]:
    if request.selection is None:
        return None
    start, end = request.selection
    lines = request.spec_text.split("\n")
    if not (1 <= start <= end <= len(lines)):
        raise SelectionOutOfRange(
            f"selection {start}:{end} outside 1:{len(lines)}")
    return "\n".join(lines[start - 1:end])


def _clipped_summary_doc(summary: StructuralSummary) -> dict:
    doc = summary.to_doc()
    doc["cycles"] = [cycle[:PROMPT_MAX_CYCLE_NODES]
                     for cycle in doc["cycles"][:PROMPT_MAX_CYCLES]]
    return doc


def build_digest_prompt(request: DigestRequest, summary: StructuralSummary) -> Conversation:
    excerpt = _selection_excerpt(request)
    parts = [
        "=== Specification ===",
        request.spec_text,
        "=== Model configuration ===",
        request.cfg_text,
        "=== State-graph summary ===",
        dumps_canonical(_clipped_summary_doc(summary)).rstrip("\n"),
    ]
    if excerpt is not None:
        start, end = request.selection
        parts += [
            f"=== Highlighted segment (lines {start}-{end}) ===",
            excerpt,
            _FOCUS_INSTRUCTION,
        ]
    return Conversation(messages=(
        ("system", DIGEST_SYSTEM_PROMPT),
        ("user", "\n".join(parts)),
    ))


def parse_sections(text: str) -> dict[str, str]:
    """Split a response on the required headings; text before the first
    heading (or under unknown headings) lands in the overview."""
    sections = {name: [] for name in SECTION_NAMES}
    current = "overview"
    for line in text.split("\n"):
        stripped = line.strip().lstrip("#").strip().rstrip(":").lower()
        if line.lstrip().startswith("#") and stripped in sections:
            current = stripped
            continue
        sections[current].append(line)
    return {name: "\n".join(body).strip() for name, body in sections.items()}


def run_digest(request: DigestRequest, graph: Optional[StateGraph],
               client: LlmClient, now: Optional[datetime] = None) -> DigestReport:
    if graph is None:
        raise MissingGraph(f"run {request.run_id} has no parsed state graph")
    summary = summarize_structure(graph, top_k=SUMMARY_TOP_K)
    prompt = build_digest_prompt(request, summary)
    response = client.chat(prompt)
    stamp = (now or datetime.now(timezone.utc)).isoformat()
    return DigestReport(
        summary_doc=_clipped_summary_doc(summary),
        explanation=parse_sections(response),
        selection_echo=_selection_excerpt(request),
        model_used=client.config.model_name,
        created_at=stamp,
    )
