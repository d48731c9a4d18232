"""Workspace preparation and execution of the external checker process.

The checker archive is operator configuration (``MW_TLC_JAR``) and is never
bundled; ``MW_JAVA_BIN`` overrides the launcher. Each run gets a fresh
workspace directory, machine-readable output, and (by default) a dot-format
graph dump with action labels.
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
import tempfile
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import tlc_parser
from .errors import (
    CheckerCrashed,
    DanglingEdge,
    DotParseFailure,
    IoFailure,
    MissingModuleHeader,
    RuntimeMissing,
    UnknownRunId,
    UnrecognizedFraming,
)
from .model import ErrorCategory, RunStats, StateGraph, TlcError, graph_from_doc, graph_to_doc

MODULE_HEADER_RE = re.compile(r"^\s*-{4,}\s*MODULE\s+(\w+)\s*-{4,}", re.MULTILINE)

JAR_ENV = "MW_TLC_JAR"
JAVA_ENV = "MW_JAVA_BIN"

TIMEOUT_GRACE_MS = 2000
_POLL_INTERVAL = 0.05

STATUS_COMPLETED = "completed"
STATUS_TIMEOUT = "timeout"
STATUS_CANCELLED = "cancelled"


def module_name_of(spec_text: str) -> str:
    m = MODULE_HEADER_RE.search(spec_text)
    if not m:
        raise MissingModuleHeader("spec has no '---- MODULE <name> ----' header")
    return m.group(1)


@dataclass(frozen=True)
class RunOptions:
    timeout_seconds: int = 60
    worker_count: int = 1
    deadlock_check: bool = False
    dump_graph: bool = True
    extra_flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.timeout_seconds < 1:
            raise ValueError("timeout_seconds must be >= 1")
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")

    def to_doc(self) -> dict:
        return {
            "timeout_seconds": self.timeout_seconds,
            "worker_count": self.worker_count,
            "deadlock_check": self.deadlock_check,
            "dump_graph": self.dump_graph,
            "extra_flags": list(self.extra_flags),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "RunOptions":
        return cls(
            timeout_seconds=doc.get("timeout_seconds", 60),
            worker_count=doc.get("worker_count", 1),
            deadlock_check=doc.get("deadlock_check", False),
            dump_graph=doc.get("dump_graph", True),
            extra_flags=tuple(doc.get("extra_flags", ())),
        )


@dataclass(frozen=True)
class WorkspaceHandle:
    run_id: str
    root_path: Path
    module_name: str
    spec_path: Path
    cfg_path: Path
    dot_path: Path
    stdout_path: Path


@dataclass(frozen=True)
class TlcRunResult:
    run_id: str
    status: str  # completed | timeout | cancelled
    exit_status: int
    wall_time_ms: int
    stats: RunStats
    error: Optional[TlcError]
    graph: Optional[StateGraph]
    raw_output_path: Optional[Path]

    def to_doc(self, include_graph: bool = False) -> dict:
        doc = {
            "run_id": self.run_id,
            "status": self.status,
            "exit_status": self.exit_status,
            "wall_time_ms": self.wall_time_ms,
            "stats": {
                "states_generated": self.stats.states_generated,
                "distinct_states": self.stats.distinct_states,
                "depth": self.stats.depth,
            },
            "error": self.error.to_doc() if self.error else None,
            "raw_output_path": str(self.raw_output_path) if self.raw_output_path else None,
        }
        if include_graph:
            doc["graph"] = graph_to_doc(self.graph) if self.graph else None
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "TlcRunResult":
        graph_doc = doc.get("graph")
        return cls(
            run_id=doc["run_id"],
            status=doc["status"],
            exit_status=doc["exit_status"],
            wall_time_ms=doc["wall_time_ms"],
            stats=RunStats(**doc["stats"]),
            error=TlcError.from_doc(doc["error"]) if doc.get("error") else None,
            graph=graph_from_doc(graph_doc) if graph_doc else None,
            raw_output_path=Path(doc["raw_output_path"]) if doc.get("raw_output_path") else None,
        )


@dataclass
class _ActiveRun:
    lock: threading.Lock = field(default_factory=threading.Lock)
    process: Optional[subprocess.Popen] = None
    cancelled: bool = False
    finished: bool = False


class CheckRunner:
    """Prepares workspaces and drives checker processes. Thread-safe: a run
    may be started, polled, and cancelled from different threads; per-run
    transitions are serialized by the run's lock."""

    def __init__(self, jar_path: str | os.PathLike | None = None,
                 java_bin: str | None = None,
                 workspace_root: str | os.PathLike | None = None):
        self.jar_path = Path(jar_path) if jar_path else None
        self.java_bin = java_bin
        self.workspace_root = Path(workspace_root) if workspace_root else None
        self._runs: dict[str, _ActiveRun] = {}
        self._registry_lock = threading.Lock()

    def _resolve_jar(self) -> Path:
        jar = self.jar_path or (Path(os.environ[JAR_ENV]) if os.environ.get(JAR_ENV) else None)
        if jar is None or not jar.exists():
            raise RuntimeMissing(
                f"checker archive not found; set {JAR_ENV} to the tla2tools.jar path")
        return jar

    def _resolve_java(self) -> str:
        java = self.java_bin or os.environ.get(JAVA_ENV, "java")
        if shutil.which(java) is None:
            raise RuntimeMissing(f"launcher {java!r} not found; set {JAVA_ENV}")
        return java

    def prepare_workspace(self, spec_text: str, cfg_text: str, options: RunOptions,
                          base_dir: str | os.PathLike | None = None) -> WorkspaceHandle:
        module = module_name_of(spec_text)
        run_id = uuid.uuid4().hex[:12]
        try:
            if base_dir is not None:
                root = Path(base_dir)
                root.mkdir(parents=True, exist_ok=True)
            elif self.workspace_root is not None:
                root = self.workspace_root / run_id
                root.mkdir(parents=True, exist_ok=False)
            else:
                root = Path(tempfile.mkdtemp(prefix=f"mb-run-{run_id}-"))
            spec_path = root / f"{module}.tla"
            cfg_path = root / f"{module}.cfg"
            spec_path.write_bytes(spec_text.encode())
            cfg_path.write_bytes(cfg_text.encode())
        except OSError as exc:
            raise IoFailure(f"cannot prepare workspace: {exc}") from exc
        handle = WorkspaceHandle(
            run_id=run_id,
            root_path=root,
            module_name=module,
            spec_path=spec_path,
            cfg_path=cfg_path,
            dot_path=root / "graph.dot",
            stdout_path=root / "stdout.log",
        )
        with self._registry_lock:
            self._runs[run_id] = _ActiveRun()
        return handle

    def command_line(self, workspace: WorkspaceHandle, options: RunOptions) -> list[str]:
        cmd = [
            self._resolve_java(),
            "-XX:+UseParallelGC",
            "-jar", str(self._resolve_jar()),
            "-tool",
            "-config", workspace.cfg_path.name,
            "-workers", str(options.worker_count),
        ]
        if not options.deadlock_check:
            cmd.append("-deadlock")  # flag presence disables deadlock checking
        if options.dump_graph:
            cmd += ["-dump", "dot,actionlabels", "graph"]
        cmd += list(options.extra_flags)
        cmd.append(f"{workspace.module_name}.tla")
        return cmd

    def run_check(self, workspace: WorkspaceHandle, options: RunOptions) -> TlcRunResult:
        cmd = self.command_line(workspace, options)
        run = self._runs.get(workspace.run_id)
        if run is None:
            with self._registry_lock:
                run = self._runs.setdefault(workspace.run_id, _ActiveRun())

        started = time.monotonic()
        deadline = started + options.timeout_seconds
        status = STATUS_COMPLETED
        with open(workspace.stdout_path, "wb") as log:
            with run.lock:
                if run.cancelled:
                    run.finished = True
                    return self._assemble(workspace, options, STATUS_CANCELLED, -1, 0)
                try:
                    process = subprocess.Popen(
                        cmd, cwd=workspace.root_path, stdout=log,
                        stderr=subprocess.STDOUT)
                except OSError as exc:
                    run.finished = True
                    raise RuntimeMissing(f"cannot launch checker: {exc}") from exc
                run.process = process

            while True:
                code = process.poll()
                if code is not None:
                    if run.cancelled:
                        status = STATUS_CANCELLED
                    break
                if run.cancelled:
                    status = STATUS_CANCELLED
                    self._kill(process)
                    break
                if time.monotonic() >= deadline:
                    status = STATUS_TIMEOUT
                    self._kill(process)
                    break
                time.sleep(_POLL_INTERVAL)
            process.wait()

        wall_ms = int((time.monotonic() - started) * 1000)
        with run.lock:
            run.finished = True
            run.process = None
        return self._assemble(workspace, options, status, process.returncode, wall_ms)

    @staticmethod
    def _kill(process: subprocess.Popen) -> None:
        process.terminate()
        try:
            process.wait(timeout=1.0)
        except subprocess.TimeoutExpired:
            process.kill()

    def _assemble(self, workspace: WorkspaceHandle, options: RunOptions,
                  status: str, exit_status: int, wall_ms: int) -> TlcRunResult:
        raw = ""
        if workspace.stdout_path.exists():
            raw = workspace.stdout_path.read_text(errors="replace")

        stats = RunStats()
        error: Optional[TlcError] = None
        try:
            parsed = tlc_parser.parse_tool_output(raw)
            stats, error = parsed.stats, parsed.error
        except UnrecognizedFraming:
            if status == STATUS_COMPLETED:
                raise CheckerCrashed(exit_status) from None
            # Killed before any frame was written: keep the partial result.

        if status == STATUS_TIMEOUT and error is None:
            error = TlcError(
                category=ErrorCategory.TIMEOUT,
                message=f"checker exceeded the {options.timeout_seconds}s deadline and was killed",
            )

        graph = None
        if options.dump_graph and workspace.dot_path.exists():
            try:
                graph = tlc_parser.parse_dot_graph(
                    workspace.dot_path.read_text(errors="replace"))
            except (DotParseFailure, DanglingEdge):
                graph = None  # partial dumps from killed runs may be cut mid-line

        return TlcRunResult(
            run_id=workspace.run_id,
            status=status,
            exit_status=exit_status,
            wall_time_ms=wall_ms,
            stats=stats,
            error=error,
            graph=graph,
            raw_output_path=workspace.stdout_path,
        )

    def cancel_run(self, run_id: str) -> dict:
        with self._registry_lock:
            run = self._runs.get(run_id)
        if run is None:
            raise UnknownRunId(f"no run with id {run_id!r}")
        with run.lock:
            was_active = not run.finished
            run.cancelled = True
            if run.process is not None:
                run.process.terminate()
        return {"run_id": run_id, "was_active": was_active}
