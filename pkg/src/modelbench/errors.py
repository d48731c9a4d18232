"""Exception types shared across the workbench.

Every error carries a short machine-readable ``code`` so the HTTP layer and
the CLI can map failures without string matching.
"""

from __future__ import annotations


class ModelBenchError(Exception):
    """Base class; ``code`` is stable across releases."""

    code = "internal"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__doc__ or self.code)
        self.message = message or self.code


# --- workspace / runner ---

class MissingModuleHeader(ModelBenchError):
    code = "missing_module_header"


class IoFailure(ModelBenchError):
    code = "io_failure"


class RuntimeMissing(ModelBenchError):
    code = "runtime_missing"


class CheckerCrashed(ModelBenchError):
    code = "checker_crashed"

    def __init__(self, exit_status: int, message: str = ""):
        super().__init__(message or f"checker exited with status {exit_status} and unparseable output")
        self.exit_status = exit_status


class UnknownRunId(ModelBenchError):
    code = "unknown_run_id"


# --- parsing ---

class UnrecognizedFraming(ModelBenchError):
    code = "unrecognized_framing"


class MalformedTrace(ModelBenchError):
    code = "malformed_trace"


class MalformedBinding(ModelBenchError):
    code = "malformed_binding"


class MalformedLocation(ModelBenchError):
    code = "malformed_location"


class DotParseFailure(ModelBenchError):
    code = "dot_parse_failure"


class DanglingEdge(ModelBenchError):
    code = "dangling_edge"


# --- graph views ---

class UnknownNode(ModelBenchError):
    code = "unknown_node"


class UnknownTree(ModelBenchError):
    code = "unknown_tree"


class TraceStateUnmatched(ModelBenchError):
    code = "trace_state_unmatched"

    def __init__(self, state_index: int, message: str = ""):
        super().__init__(message or f"trace state {state_index} matches no graph node")
        self.state_index = state_index


# --- source mapping ---
# (MissingModuleHeader shared with the runner.)


# --- llm gateway ---

class AuthFailure(ModelBenchError):
    code = "auth_failure"


class RateLimited(ModelBenchError):
    code = "rate_limited"


class Unavailable(ModelBenchError):
    code = "unavailable"


class MalformedResponse(ModelBenchError):
    code = "malformed_response"


class InvalidConfig(ModelBenchError):
    code = "invalid_config"

    def __init__(self, field: str, message: str = ""):
        super().__init__(message or f"invalid value for {field}")
        self.field = field


# --- digest / repair ---

class SelectionOutOfRange(ModelBenchError):
    code = "selection_out_of_range"


class MissingGraph(ModelBenchError):
    code = "missing_graph"


class NoError(ModelBenchError):
    code = "no_error"


class PatchExtractFailed(ModelBenchError):
    code = "patch_extract_failed"


class ModuleNameMismatch(ModelBenchError):
    code = "module_name_mismatch"


# --- service ---

class SpecMissing(ModelBenchError):
    code = "spec_missing"


class ConcurrentRun(ModelBenchError):
    code = "concurrent_run"


class UnknownSession(ModelBenchError):
    code = "unknown_session"


class UnknownRun(ModelBenchError):
    code = "unknown_run"


class UnknownArtifact(ModelBenchError):
    code = "unknown_artifact"
