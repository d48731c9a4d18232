"""On-disk session store.

Layout: ``sessions/<id>/session.json``, ``spec.tla``, ``model.cfg``,
``runs/<n>/...``, ``digest/<n>.json``, ``repair/<n>/...``, ``blobs/<hash>``.
All writes go through atomic replace, and sessions are recovered on open:
a run that was queued or running when the process died is marked failed,
never left half-done.
"""

from __future__ import annotations

import json
import secrets
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from ..errors import IoFailure, SpecMissing, UnknownArtifact, UnknownRun, UnknownSession
from ..model import dumps_canonical

ACTIVE_RUN_STATES = ("queued", "running")
FINAL_RUN_STATES = ("done", "failed", "cancelled", "timeout")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text)
        tmp.rename(path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _read_json(path: Path) -> dict:
    return json.loads(path.read_text())


class SessionStore:
    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.sessions_dir = self.data_dir / "sessions"
        try:
            self.sessions_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoFailure(f"cannot create data dir {data_dir}: {exc}") from exc
        self._locks: dict[str, threading.RLock] = {}
        self._locks_guard = threading.Lock()
        self._recover_interrupted()

    def lock(self, session_id: str) -> threading.RLock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.RLock())

    def _session_dir(self, session_id: str, must_exist: bool = True) -> Path:
        path = self.sessions_dir / session_id
        if must_exist and not (path / "session.json").exists():
            raise UnknownSession(f"no session {session_id!r}")
        return path

    def _recover_interrupted(self) -> None:
        for run_meta in self.sessions_dir.glob("*/runs/*/run.json"):
            try:
                meta = _read_json(run_meta)
            except (OSError, ValueError):
                continue
            if meta.get("status") in ACTIVE_RUN_STATES:
                meta["status"] = "failed"
                meta["note"] = "interrupted by service restart"
                meta["finished_at"] = _now()
                _write_atomic(run_meta, dumps_canonical(meta))

    # --- sessions ---

    def create_session(self) -> str:
        session_id = secrets.token_urlsafe(9)
        root = self.sessions_dir / session_id
        try:
            root.mkdir(parents=True, exist_ok=False)
            for sub in ("runs", "digest", "repair", "blobs"):
                (root / sub).mkdir()
        except OSError as exc:
            raise IoFailure(f"cannot create session skeleton: {exc}") from exc
        doc = {
            "id": session_id,
            "created_at": _now(),
            "updated_at": _now(),
            "llm_settings": {},
            "run_seq": 0,
            "digest_seq": 0,
            "repair_seq": 0,
        }
        _write_atomic(root / "session.json", dumps_canonical(doc))
        return session_id

    def session_ids(self) -> list[str]:
        return sorted(p.parent.name for p in self.sessions_dir.glob("*/session.json"))

    def load_session(self, session_id: str) -> dict:
        return _read_json(self._session_dir(session_id) / "session.json")

    def update_session(self, session_id: str, **fields) -> dict:
        with self.lock(session_id):
            doc = self.load_session(session_id)
            doc.update(fields)
            doc["updated_at"] = _now()
            _write_atomic(self._session_dir(session_id) / "session.json",
                          dumps_canonical(doc))
            return doc

    # --- spec / cfg ---

    def save_spec(self, session_id: str, spec_text: str, cfg_text: str) -> None:
        root = self._session_dir(session_id)
        with self.lock(session_id):
            _write_atomic(root / "spec.tla", spec_text)
            _write_atomic(root / "model.cfg", cfg_text)
            self.update_session(session_id)

    def load_spec(self, session_id: str) -> tuple[str, str]:
        root = self._session_dir(session_id)
        spec, cfg = root / "spec.tla", root / "model.cfg"
        if not spec.exists() or not spec.read_text().strip():
            raise SpecMissing("session has no spec text")
        return spec.read_text(), cfg.read_text() if cfg.exists() else ""

    # --- runs ---

    def allocate_run(self, session_id: str, options_doc: dict) -> int:
        with self.lock(session_id):
            doc = self.load_session(session_id)
            rid = doc["run_seq"] + 1
            self.update_session(session_id, run_seq=rid)
            run_dir = self._session_dir(session_id) / "runs" / str(rid)
            run_dir.mkdir(parents=True)
            self.write_run_meta(session_id, rid, {
                "run_id": rid,
                "status": "queued",
                "options": options_doc,
                "created_at": _now(),
            })
            return rid

    def run_dir(self, session_id: str, rid: int) -> Path:
        path = self._session_dir(session_id) / "runs" / str(rid)
        if not path.exists():
            raise UnknownRun(f"no run {rid} in session {session_id!r}")
        return path

    def write_run_meta(self, session_id: str, rid: int, meta: dict) -> None:
        run_dir = self._session_dir(session_id) / "runs" / str(rid)
        _write_atomic(run_dir / "run.json", dumps_canonical(meta))

    def update_run_meta(self, session_id: str, rid: int, **fields) -> dict:
        with self.lock(session_id):
            meta = self.load_run_meta(session_id, rid)
            meta.update(fields)
            self.write_run_meta(session_id, rid, meta)
            return meta

    def load_run_meta(self, session_id: str, rid: int) -> dict:
        return _read_json(self.run_dir(session_id, rid) / "run.json")

    def active_run(self, session_id: str) -> Optional[int]:
        root = self._session_dir(session_id) / "runs"
        for meta_path in root.glob("*/run.json"):
            try:
                meta = _read_json(meta_path)
            except (OSError, ValueError):
                continue
            if meta.get("status") in ACTIVE_RUN_STATES:
                return meta.get("run_id")
        return None

    def save_run_artifact(self, session_id: str, rid: int, name: str, doc) -> None:
        _write_atomic(self.run_dir(session_id, rid) / name, dumps_canonical(doc))

    def load_run_artifact(self, session_id: str, rid: int, name: str) -> dict:
        path = self.run_dir(session_id, rid) / name
        if not path.exists():
            raise UnknownArtifact(f"run {rid} has no {name}")
        return _read_json(path)

    # --- numbered documents (digest reports, repair sessions) ---

    def allocate_digest(self, session_id: str) -> int:
        with self.lock(session_id):
            doc = self.load_session(session_id)
            n = doc["digest_seq"] + 1
            self.update_session(session_id, digest_seq=n)
            return n

    def save_digest(self, session_id: str, n: int, doc: dict) -> None:
        root = self._session_dir(session_id) / "digest"
        _write_atomic(root / f"{n}.json", dumps_canonical(doc))

    def load_digest(self, session_id: str, n: int) -> dict:
        path = self._session_dir(session_id) / "digest" / f"{n}.json"
        if not path.exists():
            raise UnknownArtifact(f"no digest {n}")
        return _read_json(path)

    def allocate_repair(self, session_id: str) -> tuple[int, Path]:
        with self.lock(session_id):
            doc = self.load_session(session_id)
            n = doc["repair_seq"] + 1
            self.update_session(session_id, repair_seq=n)
            repair_dir = self._session_dir(session_id) / "repair" / str(n)
            repair_dir.mkdir(parents=True)
            return n, repair_dir

    def repair_dir(self, session_id: str, n: int) -> Path:
        path = self._session_dir(session_id) / "repair" / str(n)
        if not path.exists():
            raise UnknownArtifact(f"no repair session {n}")
        return path

    def save_repair_meta(self, session_id: str, n: int, meta: dict) -> None:
        _write_atomic(self.repair_dir(session_id, n) / "session.json",
                      dumps_canonical(meta))

    def load_repair(self, session_id: str, n: int) -> dict:
        root = self.repair_dir(session_id, n)
        meta_path = root / "session.json"
        meta = _read_json(meta_path) if meta_path.exists() else {}
        attempts = []
        for path in sorted(root.glob("[0-9]*.json"), key=lambda p: int(p.stem)):
            attempts.append(_read_json(path))
        meta["attempts"] = attempts
        return meta

    def blobs_dir(self, session_id: str) -> Path:
        return self._session_dir(session_id) / "blobs"
