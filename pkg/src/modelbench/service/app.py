"""HTTP facade tying the runner, parsers, graph engine, digest, and repair
into on-disk sessions. All payloads are canonical documents with stable
field order, so identical session state yields byte-identical responses."""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response

from .. import digest_engine, repair_engine
from ..errors import (
    AuthFailure,
    ConcurrentRun,
    InvalidConfig,
    MalformedResponse,
    MissingGraph,
    ModelBenchError,
    NoError,
    RateLimited,
    RuntimeMissing,
    SpecMissing,
    TraceStateUnmatched,
    Unavailable,
    UnknownArtifact,
    UnknownNode,
    UnknownRun,
    UnknownRunId,
    UnknownSession,
    UnknownTree,
)
from ..graph_core import (
    DEFAULT_MAX_VISIBLE_NODES,
    ViewState,
    build_spanning_forest,
    mark_violations,
    set_fold,
    summarize_structure,
    visible_view,
)
from ..llm_gateway import LlmClient, load_llm_config
from ..model import dumps_canonical, graph_from_doc, graph_to_doc
from ..runner import CheckRunner, RunOptions, TlcRunResult
from ..source_mapper import index_definitions, resolve_action
from .store import SessionStore

_STATUS_BY_CODE = {
    UnknownSession.code: 404,
    UnknownRun.code: 404,
    UnknownRunId.code: 404,
    UnknownTree.code: 404,
    UnknownNode.code: 404,
    UnknownArtifact.code: 404,
    SpecMissing.code: 422,
    InvalidConfig.code: 422,
    "selection_out_of_range": 422,
    "missing_module_header": 422,
    ConcurrentRun.code: 409,
    MissingGraph.code: 409,
    NoError.code: 409,
    RuntimeMissing.code: 503,
    AuthFailure.code: 502,
    RateLimited.code: 502,
    Unavailable.code: 502,
    MalformedResponse.code: 502,
}


def _canonical(doc, status_code: int = 200) -> Response:
    return Response(content=dumps_canonical(doc), status_code=status_code,
                    media_type="application/json")


class WorkbenchService:
    """Application state shared by the endpoint handlers."""

    def __init__(self, data_dir: str | Path,
                 max_visible_nodes: int = DEFAULT_MAX_VISIBLE_NODES):
        self.store = SessionStore(data_dir)
        self.runner = CheckRunner()
        self.max_visible_nodes = max_visible_nodes
        self.repair_cancels: dict[tuple[str, int], threading.Event] = {}

    # --- runs ---

    def start_check(self, session_id: str, options_doc: Optional[dict]) -> int:
        spec, cfg = self.store.load_spec(session_id)
        options = RunOptions.from_doc(options_doc or {})
        with self.store.lock(session_id):
            if self.store.active_run(session_id) is not None:
                raise ConcurrentRun("a run is already active for this session")
            rid = self.store.allocate_run(session_id, options.to_doc())
        thread = threading.Thread(
            target=self._execute_run, args=(session_id, rid, spec, cfg, options),
            daemon=True)
        thread.start()
        return rid

    def _execute_run(self, session_id: str, rid: int, spec: str, cfg: str,
                     options: RunOptions) -> None:
        store = self.store
        try:
            run_dir = store.run_dir(session_id, rid)
            handle = self.runner.prepare_workspace(spec, cfg, options, base_dir=run_dir)
            store.update_run_meta(session_id, rid, status="running",
                                  runner_id=handle.run_id)
            result = self.runner.run_check(handle, options)
        except Exception as exc:
            store.update_run_meta(session_id, rid, status="failed", error=str(exc))
            return
        self._persist_result(session_id, rid, result)

    def _persist_result(self, session_id: str, rid: int, result: TlcRunResult) -> None:
        store = self.store
        note = None
        graph = result.graph
        if graph is not None and result.error is not None and result.error.trace:
            try:
                graph = mark_violations(graph, result.error)
            except TraceStateUnmatched as exc:
                note = exc.message
                graph = result.graph
        store.save_run_artifact(session_id, rid, "result.json", result.to_doc())
        if graph is not None:
            store.save_run_artifact(session_id, rid, "graph.json", graph_to_doc(graph))
            store.save_run_artifact(
                session_id, rid, "summary.json",
                summarize_structure(graph, top_k=digest_engine.SUMMARY_TOP_K).to_doc())
        status = {"completed": "done", "timeout": "timeout",
                  "cancelled": "cancelled"}[result.status]
        meta = dict(status=status)
        if note:
            meta["note"] = note
        store.update_run_meta(session_id, rid, **meta)

    def cancel_run(self, session_id: str, rid: int) -> dict:
        meta = self.store.load_run_meta(session_id, rid)
        if meta.get("status") not in ("queued", "running"):
            return {"run_id": rid, "was_active": False}
        runner_id = meta.get("runner_id")
        try:
            ack = self.runner.cancel_run(runner_id) if runner_id else None
        except UnknownRunId:
            ack = None
        if ack is None:
            # Stale after a restart; the registry no longer knows the run.
            self.store.update_run_meta(session_id, rid, status="failed",
                                       note="cancelled while not tracked")
            return {"run_id": rid, "was_active": False}
        return {"run_id": rid, "was_active": ack["was_active"]}

    # --- graph views ---

    def _load_graph(self, session_id: str, rid: int):
        doc = self.store.load_run_artifact(session_id, rid, "graph.json")
        return graph_from_doc(doc)

    def _load_view(self, session_id: str, rid: int) -> ViewState:
        path = self.store.run_dir(session_id, rid) / "view.json"
        if path.exists():
            import json as _json
            return ViewState.from_doc(_json.loads(path.read_text()))
        return ViewState()

    def _save_view(self, session_id: str, rid: int, view: ViewState) -> None:
        self.store.save_run_artifact(session_id, rid, "view.json", view.to_doc())

    def graph_view(self, session_id: str, rid: int, tree: Optional[int],
                   depth: Optional[int], fold_delta: Optional[dict] = None) -> dict:
        graph = self._load_graph(session_id, rid)
        forest = build_spanning_forest(graph)
        view = self._load_view(session_id, rid)
        if tree is not None:
            if not (0 <= tree < len(forest.trees)):
                raise UnknownTree(f"tree {tree} of {len(forest.trees)}")
            view = ViewState(active_tree=tree, folded=view.folded,
                             depth_limit=view.depth_limit)
        if depth is not None:
            view = ViewState(active_tree=view.active_tree, folded=view.folded,
                             depth_limit=depth)
        if fold_delta is not None:
            view = set_fold(forest, view, str(fold_delta["node"]),
                            bool(fold_delta["folded"]))
        self._save_view(session_id, rid, view)
        render = visible_view(graph, forest, view, max_nodes=self.max_visible_nodes)
        doc = render.to_doc()
        doc["view"] = view.to_doc()
        return doc

    # --- digest ---

    def run_digest(self, session_id: str, selection: Optional[list],
                   run_id: Optional[int]) -> int:
        spec, cfg = self.store.load_spec(session_id)
        rid = run_id if run_id is not None else self._latest_run_with_graph(session_id)
        if rid is None:
            raise MissingGraph("no finished run with a state graph in this session")
        graph = self._load_graph(session_id, rid)
        request = digest_engine.DigestRequest(
            spec_text=spec, cfg_text=cfg, run_id=str(rid),
            selection=tuple(selection) if selection else None)
        report = digest_engine.run_digest(request, graph, self._llm_client(session_id))
        n = self.store.allocate_digest(session_id)
        self.store.save_digest(session_id, n, report.to_doc())
        return n

    def _latest_run_with_graph(self, session_id: str) -> Optional[int]:
        doc = self.store.load_session(session_id)
        for rid in range(doc["run_seq"], 0, -1):
            try:
                meta = self.store.load_run_meta(session_id, rid)
            except UnknownRun:
                continue
            if meta.get("status") == "done":
                if (self.store.run_dir(session_id, rid) / "graph.json").exists():
                    return rid
        return None

    def _latest_finished_run(self, session_id: str) -> Optional[int]:
        doc = self.store.load_session(session_id)
        for rid in range(doc["run_seq"], 0, -1):
            try:
                meta = self.store.load_run_meta(session_id, rid)
            except UnknownRun:
                continue
            if meta.get("status") in ("done", "timeout"):
                return rid
        return None

    def _llm_client(self, session_id: str) -> LlmClient:
        settings = self.store.load_session(session_id).get("llm_settings", {})
        config = load_llm_config(session=settings)
        transcript = self.store.sessions_dir / session_id / "transcripts.jsonl"
        return LlmClient(config, transcript_path=transcript)

    # --- repair ---

    def start_repair(self, session_id: str, mode: str, max_passes: Optional[int]) -> int:
        spec, cfg = self.store.load_spec(session_id)
        rid = self._latest_finished_run(session_id)
        if rid is None:
            raise NoError("no finished run to repair from")
        result_doc = self.store.load_run_artifact(session_id, rid, "result.json")
        result = TlcRunResult.from_doc(result_doc)
        if result.error is None:
            raise NoError("latest run is clean; nothing to repair")
        n, repair_dir = self.store.allocate_repair(session_id)
        store = repair_engine.AttemptStore(repair_dir, self.store.blobs_dir(session_id))
        client = self._llm_client(session_id)

        if mode == "single_pass":
            attempt = repair_engine.single_pass(spec, cfg, result, client, store)
            session = repair_engine.RepairSession(mode="single_pass", max_passes=1,
                                                  attempts=[attempt],
                                                  final_status="proposal")
            store.save_session(session)
            return n

        cancel = threading.Event()
        self.repair_cancels[(session_id, n)] = cancel
        limit = max_passes or repair_engine.DEFAULT_MAX_PASSES
        thread = threading.Thread(
            target=self._execute_repair,
            args=(session_id, n, spec, cfg, limit, store, client, cancel),
            daemon=True)
        thread.start()
        return n

    def _execute_repair(self, session_id: str, n: int, spec: str, cfg: str,
                        limit: int, store: repair_engine.AttemptStore,
                        client: LlmClient, cancel: threading.Event) -> None:
        counter = {"i": 0}

        def checker(spec_text: str, cfg_text: str) -> TlcRunResult:
            counter["i"] += 1
            work = store.attempts_dir / "work" / str(counter["i"])
            handle = self.runner.prepare_workspace(
                spec_text, cfg_text, RunOptions(), base_dir=work)
            return self.runner.run_check(handle, RunOptions())

        repair_engine.multi_pass(spec, cfg, checker, client, limit=limit,
                                 store=store, cancel_event=cancel)

    def accept_repair(self, session_id: str, n: int) -> None:
        doc = self.store.load_repair(session_id, n)
        candidates = [a for a in doc.get("attempts", [])
                      if a.get("patch_status") == "applied" and a.get("patched_spec")]
        if not candidates:
            raise UnknownArtifact(f"repair {n} has no applicable patch")
        _, cfg = self.store.load_spec(session_id)
        self.store.save_spec(session_id, candidates[-1]["patched_spec"], cfg)
        meta = {k: v for k, v in doc.items() if k != "attempts"}
        meta["accepted"] = True
        self.store.save_repair_meta(session_id, n, meta)

    def cancel_repair(self, session_id: str, n: int) -> None:
        self.store.repair_dir(session_id, n)
        event = self.repair_cancels.get((session_id, n))
        if event is not None:
            event.set()


def create_app(data_dir: str | Path,
               max_visible_nodes: int = DEFAULT_MAX_VISIBLE_NODES) -> FastAPI:
    app = FastAPI(title="modelbench", docs_url=None, redoc_url=None)
    service = WorkbenchService(data_dir, max_visible_nodes=max_visible_nodes)
    app.state.service = service
    store = service.store

    @app.exception_handler(ModelBenchError)
    async def _handle_domain_error(request: Request, exc: ModelBenchError):
        status = _STATUS_BY_CODE.get(exc.code, 500)
        return _canonical({"code": exc.code, "message": exc.message}, status)

    @app.post("/api/sessions")
    async def create_session():
        return _canonical({"id": store.create_session()})

    @app.put("/api/sessions/{sid}/spec", status_code=204)
    async def put_spec(sid: str, request: Request):
        body = await request.json()
        store.save_spec(sid, body.get("spec", ""), body.get("cfg", ""))
        return Response(status_code=204)

    @app.get("/api/sessions/{sid}/spec")
    async def get_spec(sid: str):
        spec, cfg = store.load_spec(sid)
        return _canonical({"spec": spec, "cfg": cfg})

    @app.get("/api/sessions/{sid}/llm-settings")
    async def get_llm_settings(sid: str):
        return _canonical(store.load_session(sid).get("llm_settings", {}))

    @app.put("/api/sessions/{sid}/llm-settings")
    async def put_llm_settings(sid: str, request: Request):
        body = await request.json()
        load_llm_config(session=body)  # validation only; names the bad field
        store.update_session(sid, llm_settings=body)
        return _canonical(body)

    @app.post("/api/sessions/{sid}/check")
    async def start_check(sid: str, request: Request):
        body = await request.json() if int(request.headers.get("content-length") or 0) else {}
        rid = service.start_check(sid, (body or {}).get("options"))
        return _canonical({"run_id": rid})

    @app.get("/api/sessions/{sid}/runs/{rid}")
    async def get_run(sid: str, rid: int):
        meta = store.load_run_meta(sid, rid)
        doc = {"run_id": rid, "status": meta.get("status"), "result": None}
        if meta.get("note"):
            doc["note"] = meta["note"]
        if meta.get("error"):
            doc["error"] = meta["error"]
        result_path = store.run_dir(sid, rid) / "result.json"
        if result_path.exists():
            doc["result"] = store.load_run_artifact(sid, rid, "result.json")
        return _canonical(doc)

    @app.post("/api/sessions/{sid}/runs/{rid}/cancel")
    async def cancel_run(sid: str, rid: int):
        return _canonical(service.cancel_run(sid, rid))

    @app.get("/api/sessions/{sid}/runs/{rid}/graph")
    async def get_graph_view(sid: str, rid: int, tree: Optional[int] = None,
                             depth: Optional[int] = None):
        return _canonical(service.graph_view(sid, rid, tree, depth))

    @app.post("/api/sessions/{sid}/runs/{rid}/graph/folds")
    async def post_fold(sid: str, rid: int, request: Request):
        body = await request.json()
        return _canonical(service.graph_view(sid, rid, None, None, fold_delta=body))

    @app.get("/api/sessions/{sid}/runs/{rid}/graph/full")
    async def get_full_graph(sid: str, rid: int):
        return _canonical(store.load_run_artifact(sid, rid, "graph.json"))

    @app.get("/api/sessions/{sid}/runs/{rid}/summary")
    async def get_summary(sid: str, rid: int):
        return _canonical(store.load_run_artifact(sid, rid, "summary.json"))

    @app.post("/api/sessions/{sid}/digest")
    async def post_digest(sid: str, request: Request):
        body = await request.json() if int(request.headers.get("content-length") or 0) else {}
        n = service.run_digest(sid, (body or {}).get("selection"),
                               (body or {}).get("run_id"))
        return _canonical({"digest_id": n})

    @app.get("/api/sessions/{sid}/digest/{n}")
    async def get_digest(sid: str, n: int):
        return _canonical(store.load_digest(sid, n))

    @app.post("/api/sessions/{sid}/repair")
    async def post_repair(sid: str, request: Request):
        body = await request.json()
        mode = body.get("mode", "single")
        mode = {"single": "single_pass", "multi": "multi_pass"}.get(mode, mode)
        n = service.start_repair(sid, mode, body.get("max_passes"))
        return _canonical({"repair_id": n})

    @app.get("/api/sessions/{sid}/repair/{n}")
    async def get_repair(sid: str, n: int):
        return _canonical(store.load_repair(sid, n))

    @app.post("/api/sessions/{sid}/repair/{n}/accept", status_code=204)
    async def accept_repair(sid: str, n: int):
        service.accept_repair(sid, n)
        return Response(status_code=204)

    @app.post("/api/sessions/{sid}/repair/{n}/cancel")
    async def cancel_repair(sid: str, n: int):
        service.cancel_repair(sid, n)
        return _canonical({"repair_id": n, "cancelling": True})

    @app.get("/api/sessions/{sid}/source/location")
    async def source_location(sid: str, action: str):
        spec, _ = store.load_spec(sid)
        index = index_definitions(spec)
        location = resolve_action(index, action)
        if location is None:
            return _canonical({"code": "unresolved_action",
                               "message": f"no definition found for {action!r}"}, 404)
        return _canonical(location.to_doc())

    _mount_ui(app)
    return app


def _mount_ui(app: FastAPI) -> None:
    """Serve the built browser workbench when MW_UI_DIR points at it."""
    import os

    ui_dir = os.environ.get("MW_UI_DIR")
    if not ui_dir or not Path(ui_dir).is_dir():
        return
    from fastapi.staticfiles import StaticFiles

    app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
