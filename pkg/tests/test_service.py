from __future__ import annotations

import json
import time

import pytest
from fastapi.testclient import TestClient

from modelbench.service import SessionStore, create_app


def wait_until(predicate, timeout=15.0, interval=0.05):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        value = predicate()
        if value:
            return value
        time.sleep(interval)
    raise AssertionError("condition not reached in time")


@pytest.fixture
def mock_llm_env(tmp_path, monkeypatch, clean_spec):
    reply = ("## Overview\nok\n## Variables\ncan\n## Constants\nMaxBeanCount\n"
             "## Actions\npicks\n## Transitions\nsteps\n## Invariants\nparity\n")
    script = tmp_path / "llm_script.json"
    script.write_text(json.dumps({
        "rules": [{"pattern": "to repair", "response": f"```tla\n{clean_spec}```"}],
        "default": reply,
    }))
    monkeypatch.setenv("MW_LLM_PROVIDER", "mock")
    monkeypatch.setenv("MW_LLM_MOCK_SCRIPT", str(script))
    return script


@pytest.fixture
def client(fake_tlc, mock_llm_env, tmp_path):
    app = create_app(tmp_path / "data")
    with TestClient(app) as tc:
        yield tc


@pytest.fixture
def session(client, clean_spec, cfg_text):
    sid = client.post("/api/sessions").json()["id"]
    response = client.put(f"/api/sessions/{sid}/spec",
                          json={"spec": clean_spec, "cfg": cfg_text})
    assert response.status_code == 204
    return sid


def run_to_completion(client, sid, options=None) -> int:
    body = {"options": options} if options else {}
    response = client.post(f"/api/sessions/{sid}/check", json=body)
    assert response.status_code == 200, response.text
    rid = response.json()["run_id"]
    wait_until(lambda: client.get(f"/api/sessions/{sid}/runs/{rid}").json()["status"]
               not in ("queued", "running"))
    return rid


class TestSessions:
    def test_create_returns_distinct_ids_and_dirs(self, client, tmp_path):
        a = client.post("/api/sessions").json()["id"]
        b = client.post("/api/sessions").json()["id"]
        assert a != b
        assert (tmp_path / "data" / "sessions" / a / "session.json").exists()

    def test_unknown_session_404(self, client):
        response = client.get("/api/sessions/nothere/llm-settings")
        assert response.status_code == 404
        assert response.json()["code"] == "unknown_session"

    def test_check_without_spec_422(self, client):
        sid = client.post("/api/sessions").json()["id"]
        response = client.post(f"/api/sessions/{sid}/check", json={})
        assert response.status_code == 422
        assert response.json()["code"] == "spec_missing"


class TestRuns:
    def test_clean_run_completes_with_artifacts(self, client, session):
        rid = run_to_completion(client, session)
        run = client.get(f"/api/sessions/{session}/runs/{rid}").json()
        assert run["status"] == "done"
        assert run["result"]["error"] is None
        assert run["result"]["stats"]["distinct_states"] == 6
        summary = client.get(f"/api/sessions/{session}/runs/{rid}/summary").json()
        assert summary["initial"] == ["can = [black |-> 0, white |-> 5]"]

    def test_buggy_run_marks_violation(self, client, session, buggy_spec, cfg_text):
        client.put(f"/api/sessions/{session}/spec",
                   json={"spec": buggy_spec, "cfg": cfg_text})
        rid = run_to_completion(client, session)
        graph = client.get(f"/api/sessions/{session}/runs/{rid}/graph/full").json()
        violating = [n for n in graph["nodes"] if n["violating"]]
        assert len(violating) == 1
        assert violating[0]["violated"] == ["WhiteParityOdd"]

    def test_concurrent_run_409(self, client, session, clean_spec, cfg_text):
        slow = clean_spec + "\n\\* FAKE_TLC_SLEEP: 20\n"
        client.put(f"/api/sessions/{session}/spec",
                   json={"spec": slow, "cfg": cfg_text})
        first = client.post(f"/api/sessions/{session}/check", json={}).json()["run_id"]
        wait_until(lambda: client.get(
            f"/api/sessions/{session}/runs/{first}").json()["status"] == "running")
        response = client.post(f"/api/sessions/{session}/check", json={})
        assert response.status_code == 409
        assert response.json()["code"] == "concurrent_run"
        client.post(f"/api/sessions/{session}/runs/{first}/cancel")
        wait_until(lambda: client.get(
            f"/api/sessions/{session}/runs/{first}").json()["status"] == "cancelled")

    def test_cancel_finished_run_no_op(self, client, session):
        rid = run_to_completion(client, session)
        response = client.post(f"/api/sessions/{session}/runs/{rid}/cancel")
        assert response.json()["was_active"] is False

    def test_unknown_run_404(self, client, session):
        assert client.get(f"/api/sessions/{session}/runs/99").status_code == 404


class TestGraphView:
    def test_default_view_depth_limited(self, client, session):
        rid = run_to_completion(client, session)
        view = client.get(f"/api/sessions/{session}/runs/{rid}/graph").json()
        assert view["tree"] == 0
        assert all(n["depth"] <= 2 for n in view["nodes"])
        assert len(view["trees"]) == 1
        ids = {n["id"] for n in view["nodes"]}
        assert all(e["from"] in ids and e["to"] in ids for e in view["edges"])

    def test_fold_root_single_node_payload(self, client, session):
        rid = run_to_completion(client, session)
        root = client.get(
            f"/api/sessions/{session}/runs/{rid}/graph").json()["trees"][0]["root"]
        view = client.post(
            f"/api/sessions/{session}/runs/{rid}/graph/folds",
            json={"node": root, "folded": True}).json()
        assert [n["id"] for n in view["nodes"]] == [root]
        assert view["nodes"][0]["hidden"] == 5
        assert root in view["view"]["folded"]

    def test_fold_state_persists_across_requests(self, client, session):
        rid = run_to_completion(client, session)
        root = client.get(
            f"/api/sessions/{session}/runs/{rid}/graph").json()["trees"][0]["root"]
        client.post(f"/api/sessions/{session}/runs/{rid}/graph/folds",
                    json={"node": root, "folded": True})
        again = client.get(f"/api/sessions/{session}/runs/{rid}/graph").json()
        assert [n["id"] for n in again["nodes"]] == [root]

    def test_unknown_tree_404(self, client, session):
        rid = run_to_completion(client, session)
        response = client.get(f"/api/sessions/{session}/runs/{rid}/graph?tree=7")
        assert response.status_code == 404
        assert response.json()["code"] == "unknown_tree"

    def test_unknown_fold_node_404(self, client, session):
        rid = run_to_completion(client, session)
        response = client.post(f"/api/sessions/{session}/runs/{rid}/graph/folds",
                               json={"node": "12345", "folded": True})
        assert response.status_code == 404

    def test_byte_identical_responses(self, client, session):
        rid = run_to_completion(client, session)
        a = client.get(f"/api/sessions/{session}/runs/{rid}/graph?depth=10")
        b = client.get(f"/api/sessions/{session}/runs/{rid}/graph?depth=10")
        assert a.content == b.content

    def test_payload_bound(self, fake_tlc, mock_llm_env, tmp_path, clean_spec,
                           cfg_text):
        app = create_app(tmp_path / "small", max_visible_nodes=3)
        with TestClient(app) as small_client:
            sid = small_client.post("/api/sessions").json()["id"]
            small_client.put(f"/api/sessions/{sid}/spec",
                             json={"spec": clean_spec, "cfg": cfg_text})
            rid = run_to_completion(small_client, sid)
            view = small_client.get(
                f"/api/sessions/{sid}/runs/{rid}/graph?depth=10").json()
            assert len(view["nodes"]) == 3
            assert view["truncated"] is True


class TestLlmSettings:
    def test_round_trip(self, client, session):
        body = {"model_name": "claude-3", "provider": "anthropic_compatible",
                "base_url": "https://a.test"}
        response = client.put(f"/api/sessions/{session}/llm-settings", json=body)
        assert response.status_code == 200
        assert client.get(f"/api/sessions/{session}/llm-settings").json() == body

    def test_invalid_settings_name_field(self, client, session):
        response = client.put(f"/api/sessions/{session}/llm-settings",
                              json={"temperature": 9})
        assert response.status_code == 422
        assert "temperature" in response.json()["message"]


class TestDigest:
    def test_digest_flow(self, client, session):
        run_to_completion(client, session)
        n = client.post(f"/api/sessions/{session}/digest", json={}).json()["digest_id"]
        report = client.get(f"/api/sessions/{session}/digest/{n}").json()
        assert report["summary"]["initial"] == ["can = [black |-> 0, white |-> 5]"]
        assert report["explanation"]["invariants"] == "parity"

    def test_digest_without_graph_409(self, client, session, clean_spec, cfg_text):
        options = {"dump_graph": False}
        run_to_completion(client, session, options=options)
        response = client.post(f"/api/sessions/{session}/digest", json={})
        assert response.status_code == 409
        assert response.json()["code"] == "missing_graph"

    def test_selection_out_of_range_422(self, client, session):
        run_to_completion(client, session)
        response = client.post(f"/api/sessions/{session}/digest",
                               json={"selection": [10, 5]})
        assert response.status_code == 422


class TestRepair:
    def setup_buggy_run(self, client, session, buggy_spec, cfg_text):
        client.put(f"/api/sessions/{session}/spec",
                   json={"spec": buggy_spec, "cfg": cfg_text})
        return run_to_completion(client, session)

    def test_single_pass_proposal_and_accept(self, client, session, buggy_spec,
                                             cfg_text, clean_spec):
        self.setup_buggy_run(client, session, buggy_spec, cfg_text)
        n = client.post(f"/api/sessions/{session}/repair",
                        json={"mode": "single"}).json()["repair_id"]
        doc = client.get(f"/api/sessions/{session}/repair/{n}").json()
        assert doc["final_status"] == "proposal"
        assert doc["attempts"][0]["verdict"] == "not_run"
        assert doc["attempts"][0]["patched_spec"] == clean_spec
        assert client.post(
            f"/api/sessions/{session}/repair/{n}/accept").status_code == 204
        spec_now = client.get(f"/api/sessions/{session}/spec").json()["spec"]
        assert spec_now == clean_spec
        rid = run_to_completion(client, session)
        run = client.get(f"/api/sessions/{session}/runs/{rid}").json()
        assert run["result"]["error"] is None

    def test_multi_pass_background_success(self, client, session, buggy_spec,
                                           cfg_text):
        self.setup_buggy_run(client, session, buggy_spec, cfg_text)
        n = client.post(f"/api/sessions/{session}/repair",
                        json={"mode": "multi", "max_passes": 3}).json()["repair_id"]
        doc = wait_until(lambda: (
            lambda d: d if d.get("final_status") else None)(
                client.get(f"/api/sessions/{session}/repair/{n}").json()))
        assert doc["final_status"] == "success"
        assert len(doc["attempts"]) == 1
        assert doc["attempts"][0]["recheck"]["error"] is None

    def test_repair_on_clean_run_409(self, client, session):
        run_to_completion(client, session)
        response = client.post(f"/api/sessions/{session}/repair",
                               json={"mode": "single"})
        assert response.status_code == 409
        assert response.json()["code"] == "no_error"


class TestSourceLocation:
    def test_resolves_action(self, client, session, clean_spec):
        response = client.get(
            f"/api/sessions/{session}/source/location",
            params={"action": "PickSameColorWhite"})
        assert response.status_code == 200
        loc = response.json()
        lines = clean_spec.split("\n")
        excerpt = "\n".join(lines[loc["start_line"] - 1:loc["end_line"]])
        assert "PickSameColorWhite" in excerpt

    def test_unresolved_404(self, client, session):
        response = client.get(f"/api/sessions/{session}/source/location",
                              params={"action": "Missing"})
        assert response.status_code == 404
        assert response.json()["code"] == "unresolved_action"


class TestCrashSafety:
    def test_interrupted_run_marked_failed_on_reload(self, fake_tlc, mock_llm_env,
                                                     tmp_path, clean_spec, cfg_text):
        data_dir = tmp_path / "crashdata"
        app = create_app(data_dir)
        with TestClient(app) as tc:
            sid = tc.post("/api/sessions").json()["id"]
            slow = clean_spec + "\n\\* FAKE_TLC_SLEEP: 30\n"
            tc.put(f"/api/sessions/{sid}/spec", json={"spec": slow, "cfg": cfg_text})
            rid = tc.post(f"/api/sessions/{sid}/check", json={}).json()["run_id"]
            wait_until(lambda: tc.get(
                f"/api/sessions/{sid}/runs/{rid}").json()["status"] == "running")

            # Simulate a crash: open a second service over the same data dir
            # while the first one's run is still in flight.
            recovered = SessionStore(data_dir)
            assert sid in recovered.session_ids()
            meta = recovered.load_run_meta(sid, rid)
            assert meta["status"] == "failed"
            assert "interrupted" in meta["note"]
            run_dir = recovered.run_dir(sid, rid)
            assert not (run_dir / "graph.json").exists()

            # Cleanup: the recovery pass rewrote the on-disk status, so kill
            # the still-sleeping checker through the live runner registry.
            runner_id = meta.get("runner_id")
            if runner_id:
                app.state.service.runner.cancel_run(runner_id)
