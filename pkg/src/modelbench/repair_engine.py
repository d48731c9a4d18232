"""LLM-driven repair of failing specs: context extraction, prompting, patch
application, and the bounded multi-pass loop.

The loop never trusts the model: success is declared only after a recheck
comes back clean, candidate hashes are tracked to cut oscillation short, and
every attempt is persisted the moment it completes (write-once files, so the
on-disk ledger is append-only by construction).
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .errors import IoFailure, MissingModuleHeader, ModuleNameMismatch, NoError, PatchExtractFailed
from .llm_gateway import Conversation, LlmClient
from .model import ErrorCategory, SourceLocation, TlcError
from .runner import TlcRunResult, module_name_of
from .source_mapper import DefinitionIndex, index_definitions, resolve_action
from .tlc_parser import _LOCATION_RE  # embedded label decorations reuse the parser's shape

TRACE_EXCERPT_HEAD = 5
TRACE_EXCERPT_TAIL = 5
DEFAULT_MAX_PASSES = 5

PATCH_STATUS_APPLIED = "applied"
PATCH_STATUS_EXTRACT_FAILED = "extract_failed"
PATCH_STATUS_NAME_MISMATCH = "name_mismatch"

VERDICT_CLEAN = "clean"
VERDICT_STILL_FAILING = "still_failing"
VERDICT_NOT_RUN = "not_run"

STATUS_SUCCESS = "success"
STATUS_LIMIT_REACHED = "limit_reached"
STATUS_NO_PROGRESS = "no_progress"
STATUS_PATCH_FAILED = "patch_failed"
STATUS_ABORTED = "aborted"

REPAIR_SYSTEM_PROMPT = """\
You repair TLA+ specifications that fail model checking. You receive the
full specification, its model configuration, and a structured report of the
checker's finding. Produce a corrected version of the module.

Rules:
- Return the COMPLETE corrected module inside exactly one fenced code block.
- Keep the module name unchanged.
- Make the smallest change that fixes the reported problem; do not restyle
  unrelated parts of the specification."""


def spec_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True)
class SourceExcerpt:
    reason: str  # "error_location" | "final_action"
    location: Optional[SourceLocation]
    text: str

    def to_doc(self) -> dict:
        return {
            "reason": self.reason,
            "location": self.location.to_doc() if self.location else None,
            "text": self.text,
        }


@dataclass(frozen=True)
class RepairContext:
    category: ErrorCategory
    message: str
    property_name: Optional[str]
    trace_excerpt: tuple[str, ...]
    implicated_source: tuple[SourceExcerpt, ...]
    cfg_text: str


def _excerpt_lines(spec_text: str, location: SourceLocation) -> str:
    lines = spec_text.split("\n")
    return "\n".join(lines[location.start_line - 1:location.end_line])


def _render_trace_excerpt(error: TlcError) -> tuple[str, ...]:
    if error.trace is None:
        return ()
    states = error.trace.states

    def render(state) -> str:
        bindings = " /\\ ".join(f"{k} = {state.bindings[k]}"
                                for k in sorted(state.bindings))
        return f"State {state.index} <{state.action_label}>: {bindings}"

    if len(states) <= TRACE_EXCERPT_HEAD + TRACE_EXCERPT_TAIL:
        rendered = [render(s) for s in states]
    else:
        elided = len(states) - TRACE_EXCERPT_HEAD - TRACE_EXCERPT_TAIL
        rendered = ([render(s) for s in states[:TRACE_EXCERPT_HEAD]]
                    + [f"... {elided} states elided ..."]
                    + [render(s) for s in states[-TRACE_EXCERPT_TAIL:]])
    if error.trace.lasso_start is not None:
        rendered.append(f"Back to state {error.trace.lasso_start}")
    return tuple(rendered)


def extract_error_context(result: TlcRunResult, spec_text: str,
                          index: DefinitionIndex,
                          cfg_text: str = "") -> RepairContext:
    """Assemble the error report the repair prompt is built from. Excerpts
    quote the current spec byte-exactly."""
    if result.error is None:
        raise NoError("run finished clean; nothing to repair")
    error = result.error

    excerpts: list[SourceExcerpt] = []
    for location in error.locations:
        excerpts.append(SourceExcerpt(
            reason="error_location",
            location=location,
            text=_excerpt_lines(spec_text, location),
        ))
    if error.trace is not None and error.trace.states:
        label = error.trace.states[-1].action_label
        embedded = _LOCATION_RE.search(label)
        if embedded:
            a, b, c, d = (int(embedded.group(i)) for i in range(1, 5))
            location = SourceLocation(embedded.group(5), a, b, c, d)
        else:
            location = resolve_action(index, label)
        if location is not None and location.start_line <= len(spec_text.split("\n")):
            excerpts.append(SourceExcerpt(
                reason="final_action",
                location=location,
                text=_excerpt_lines(spec_text, location),
            ))

    return RepairContext(
        category=error.category,
        message=error.message,
        property_name=error.property_name,
        trace_excerpt=_render_trace_excerpt(error),
        implicated_source=tuple(excerpts),
        cfg_text=cfg_text,
    )


@dataclass(frozen=True)
class RepairAttempt:
    index: int  # 1-based
    input_spec_hash: str
    prompt: Conversation
    response: str
    patch_status: str
    patched_spec: Optional[str] = None
    recheck: Optional[TlcRunResult] = None
    verdict: str = VERDICT_NOT_RUN

    def to_doc(self) -> dict:
        return {
            "index": self.index,
            "input_spec_hash": self.input_spec_hash,
            "patch_status": self.patch_status,
            "verdict": self.verdict,
            "patched_spec_hash": spec_hash(self.patched_spec) if self.patched_spec else None,
            "patched_spec": self.patched_spec,
            "recheck": self.recheck.to_doc() if self.recheck else None,
            "prompt": self.prompt.to_doc(),
            "response": self.response,
        }


@dataclass
class RepairSession:
    mode: str  # single_pass | multi_pass
    max_passes: int = DEFAULT_MAX_PASSES
    attempts: list[RepairAttempt] = field(default_factory=list)
    final_status: Optional[str] = None
    abort_reason: Optional[str] = None

    def to_doc(self) -> dict:
        return {
            "mode": self.mode,
            "max_passes": self.max_passes,
            "final_status": self.final_status,
            "abort_reason": self.abort_reason,
            "attempts": [a.index for a in self.attempts],
        }


def _attempt_feedback(attempt: RepairAttempt) -> str:
    if attempt.patch_status == PATCH_STATUS_EXTRACT_FAILED:
        return (f"Attempt {attempt.index}: the reply contained no fenced code block, "
                "so nothing could be applied. Return exactly one fenced code block "
                "holding the complete module.")
    if attempt.patch_status == PATCH_STATUS_NAME_MISMATCH:
        return (f"Attempt {attempt.index}: the returned module did not keep the "
                "original module name, so it was rejected. Keep the name unchanged.")
    if attempt.verdict == VERDICT_STILL_FAILING:
        if attempt.recheck is not None and attempt.recheck.error is not None:
            reason = attempt.recheck.error.message.split("\n")[0]
        else:
            reason = "it repeats an already-rejected version of the module"
        return (f"Attempt {attempt.index}: the patch was applied but checking still "
                f"fails: {reason}")
    return f"Attempt {attempt.index}: no progress."


def build_repair_prompt(spec_text: str, context: RepairContext,
                        prior_attempts: Sequence[RepairAttempt] = ()) -> Conversation:
    parts = [
        "=== Specification (to repair) ===",
        spec_text,
        "=== Model configuration ===",
        context.cfg_text,
        "=== Checker finding ===",
        f"Category: {context.category.value}",
    ]
    if context.property_name:
        parts.append(f"Violated property: {context.property_name}")
    parts += ["Message:", context.message]
    if context.trace_excerpt:
        parts.append("Counterexample trace:")
        parts.extend(context.trace_excerpt)
    for excerpt in context.implicated_source:
        where = f" ({excerpt.location.to_doc()})" if excerpt.location else ""
        parts.append(f"Implicated source [{excerpt.reason}]{where}:")
        parts.append(excerpt.text)
    for attempt in prior_attempts:
        parts.append(_attempt_feedback(attempt))
    return Conversation(messages=(
        ("system", REPAIR_SYSTEM_PROMPT),
        ("user", "\n".join(parts)),
    ))


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def apply_patch(spec_text: str, response: str) -> str:
    """Extract the first fenced code block and require it to be a complete
    module with the original name. The original spec is never mutated."""
    m = _FENCE_RE.search(response)
    if not m:
        raise PatchExtractFailed("response contains no fenced code block")
    candidate = m.group(1)
    try:
        candidate_module = module_name_of(candidate)
    except MissingModuleHeader:
        raise PatchExtractFailed("fenced block is not a complete module") from None
    original_module = module_name_of(spec_text)
    if candidate_module != original_module:
        raise ModuleNameMismatch(
            f"patched module is named {candidate_module!r}, expected {original_module!r}")
    return candidate


Checker = Callable[[str, str], TlcRunResult]


class AttemptStore:
    """Write-once attempt files plus a content-addressed blob store."""

    def __init__(self, attempts_dir: Optional[Path], blobs_dir: Optional[Path] = None):
        self.attempts_dir = Path(attempts_dir) if attempts_dir else None
        self.blobs_dir = Path(blobs_dir) if blobs_dir else None

    def save_attempt(self, attempt: RepairAttempt) -> None:
        if self.attempts_dir is None:
            return
        self.attempts_dir.mkdir(parents=True, exist_ok=True)
        path = self.attempts_dir / f"{attempt.index}.json"
        if path.exists():
            raise IoFailure(f"attempt ledger entry {path} already exists")
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(attempt.to_doc(), indent=2) + "\n")
        tmp.rename(path)

    def save_session(self, session: RepairSession) -> None:
        if self.attempts_dir is None:
            return
        self.attempts_dir.mkdir(parents=True, exist_ok=True)
        path = self.attempts_dir / "session.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(session.to_doc(), indent=2) + "\n")
        tmp.rename(path)

    def save_blob(self, text: str) -> str:
        digest = spec_hash(text)
        if self.blobs_dir is not None:
            self.blobs_dir.mkdir(parents=True, exist_ok=True)
            path = self.blobs_dir / digest
            if not path.exists():
                tmp = path.with_suffix(".tmp")
                tmp.write_text(text)
                tmp.rename(path)
        return digest


def _build_index(spec_text: str) -> DefinitionIndex:
    try:
        return index_definitions(spec_text)
    except MissingModuleHeader:
        return DefinitionIndex(module="?", entries={})


def single_pass(spec_text: str, cfg_text: str, result: TlcRunResult,
                client: LlmClient, store: Optional[AttemptStore] = None) -> RepairAttempt:
    """One context -> prompt -> chat -> apply cycle. The attempt comes back
    as a proposal (verdict not_run); accepting and rechecking is the
    caller's decision."""
    store = store or AttemptStore(None)
    store.save_blob(spec_text)
    context = extract_error_context(result, spec_text, _build_index(spec_text), cfg_text)
    prompt = build_repair_prompt(spec_text, context)
    response = client.chat(prompt)
    patched, status = None, PATCH_STATUS_APPLIED
    try:
        patched = apply_patch(spec_text, response)
        store.save_blob(patched)
    except PatchExtractFailed:
        status = PATCH_STATUS_EXTRACT_FAILED
    except ModuleNameMismatch:
        status = PATCH_STATUS_NAME_MISMATCH
    attempt = RepairAttempt(
        index=1,
        input_spec_hash=spec_hash(spec_text),
        prompt=prompt,
        response=response,
        patch_status=status,
        patched_spec=patched,
        verdict=VERDICT_NOT_RUN,
    )
    store.save_attempt(attempt)
    return attempt


def multi_pass(spec_text: str, cfg_text: str, checker: Checker, client: LlmClient,
               limit: int = DEFAULT_MAX_PASSES,
               store: Optional[AttemptStore] = None,
               no_progress_check: bool = True,
               cancel_event: Optional[threading.Event] = None) -> RepairSession:
    """Alternate checking and patching until clean, oscillating, cancelled,
    or out of budget. Checker runs are bounded by limit + 1."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    store = store or AttemptStore(None)
    session = RepairSession(mode="multi_pass", max_passes=limit)
    store.save_session(session)

    current = spec_text
    seen_hashes = {spec_hash(current)}
    store.save_blob(current)

    def finish(status: str, reason: Optional[str] = None) -> RepairSession:
        session.final_status = status
        session.abort_reason = reason
        store.save_session(session)
        return session

    try:
        result = checker(current, cfg_text)
    except Exception as exc:  # checker infrastructure failure
        return finish(STATUS_ABORTED, f"checker failed: {exc}")
    if result.error is None:
        return finish(STATUS_SUCCESS)

    for i in range(1, limit + 1):
        if cancel_event is not None and cancel_event.is_set():
            return finish(STATUS_ABORTED, "cancelled")
        context = extract_error_context(result, current, _build_index(current), cfg_text)
        prompt = build_repair_prompt(current, context, session.attempts)
        try:
            response = client.chat(prompt)
        except Exception as exc:
            return finish(STATUS_ABORTED, f"llm failed: {exc}")

        patched, status = None, PATCH_STATUS_APPLIED
        try:
            patched = apply_patch(current, response)
        except PatchExtractFailed:
            status = PATCH_STATUS_EXTRACT_FAILED
        except ModuleNameMismatch:
            status = PATCH_STATUS_NAME_MISMATCH

        if status != PATCH_STATUS_APPLIED:
            attempt = RepairAttempt(
                index=i, input_spec_hash=spec_hash(current), prompt=prompt,
                response=response, patch_status=status, verdict=VERDICT_NOT_RUN)
            session.attempts.append(attempt)
            store.save_attempt(attempt)
            store.save_session(session)
            continue

        store.save_blob(patched)
        candidate_hash = spec_hash(patched)
        if no_progress_check and candidate_hash in seen_hashes:
            # Known-failing module again; skip the pointless recheck.
            attempt = RepairAttempt(
                index=i, input_spec_hash=spec_hash(current), prompt=prompt,
                response=response, patch_status=PATCH_STATUS_APPLIED,
                patched_spec=patched, verdict=VERDICT_STILL_FAILING)
            session.attempts.append(attempt)
            store.save_attempt(attempt)
            if i == limit:
                return finish(STATUS_LIMIT_REACHED)
            return finish(STATUS_NO_PROGRESS)
        seen_hashes.add(candidate_hash)

        try:
            recheck = checker(patched, cfg_text)
        except Exception as exc:
            attempt = RepairAttempt(
                index=i, input_spec_hash=spec_hash(current), prompt=prompt,
                response=response, patch_status=PATCH_STATUS_APPLIED,
                patched_spec=patched, verdict=VERDICT_NOT_RUN)
            session.attempts.append(attempt)
            store.save_attempt(attempt)
            return finish(STATUS_ABORTED, f"checker failed: {exc}")

        verdict = VERDICT_CLEAN if recheck.error is None else VERDICT_STILL_FAILING
        attempt = RepairAttempt(
            index=i, input_spec_hash=spec_hash(current), prompt=prompt,
            response=response, patch_status=PATCH_STATUS_APPLIED,
            patched_spec=patched, recheck=recheck, verdict=verdict)
        session.attempts.append(attempt)
        store.save_attempt(attempt)
        store.save_session(session)

        if verdict == VERDICT_CLEAN:
            return finish(STATUS_SUCCESS)
        current, result = patched, recheck

    return finish(STATUS_LIMIT_REACHED)
