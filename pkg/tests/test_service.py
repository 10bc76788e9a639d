import json
import time

import pytest
from fastapi.testclient import TestClient

from promptcad.geometry import export_obj, mesh_from_json
from promptcad.service import create_app
from promptcad.session import DesignSession, SessionConfig
from promptcad.gateway import MockProvider
from promptcad.geometry import SectionConstraints

from conftest import decagon_text


def session_body(script, **overrides):
    body = {
        "mode": "coordinate_sections",
        "sections_target": 3,
        "max_iterations": 6,
        "constraints": {"require_convex": True, "forbid_self_intersection": True},
        "provider": {"kind": "mock", "mock_replies": script},
    }
    body.update(overrides)
    return body


def wait_for_state(client, url, states, timeout=5.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        snapshot = client.get(url).json()
        if snapshot["state"] in states:
            return snapshot
        time.sleep(0.01)
    raise AssertionError(f"timed out waiting for {states} at {url}")


def sse_events(client, url):
    events = []
    with client.stream("GET", url) as stream:
        name = None
        for line in stream.iter_lines():
            if line.startswith("event: "):
                name = line[len("event: "):]
            elif line.startswith("data: "):
                events.append((name, json.loads(line[len("data: "):])))
    return events


@pytest.fixture
def client():
    return TestClient(create_app())


GOOD_SCRIPT = [{"reply": decagon_text(r)} for r in (4.0, 4.2, 4.4)]


class TestSessionEndpoints:
    def test_create_start_events_model(self, client):
        response = client.post("/api/sessions", json=session_body(GOOD_SCRIPT))
        assert response.status_code == 201
        session_id = response.json()["id"]

        assert client.get(f"/api/sessions/{session_id}/model").status_code == 409
        assert client.get(f"/api/sessions/{session_id}/model.obj").status_code == 409

        assert client.post(f"/api/sessions/{session_id}/start").status_code == 202
        events = sse_events(client, f"/api/sessions/{session_id}/events")
        names = [name for name, _ in events]
        assert names == ["iteration", "iteration", "iteration", "complete"]
        iterations = [payload["iteration"] for name, payload in events if name == "iteration"]
        assert iterations == [1, 2, 3]

        snapshot = client.get(f"/api/sessions/{session_id}").json()
        assert snapshot["state"] == "complete"
        assert snapshot["mesh_ready"] is True
        assert set(snapshot["links"]) == {"model_url", "transcript_url", "events_url"}

        mesh_json = client.get(f"/api/sessions/{session_id}/model").json()
        obj_bytes = client.get(f"/api/sessions/{session_id}/model.obj").content
        assert obj_bytes == export_obj(mesh_from_json(mesh_json))

        transcript = client.get(f"/api/sessions/{session_id}/transcript").text
        assert len(transcript.splitlines()) == 6

    def test_events_match_reports(self, client):
        script = [{"reply": "(0,0,0)\n(2,0,2)\n(2,0,0)\n(0,0,2)"}] + GOOD_SCRIPT
        response = client.post("/api/sessions", json=session_body(script))
        session_id = response.json()["id"]
        client.post(f"/api/sessions/{session_id}/start")
        events = sse_events(client, f"/api/sessions/{session_id}/events")
        iteration_events = [payload for name, payload in events if name == "iteration"]
        assert len(iteration_events) == 4
        assert iteration_events[0]["outcome"]["kind"] == "rejected"
        assert [e["iteration"] for e in iteration_events] == [1, 2, 3, 4]

    def test_manual_ticks(self, client):
        response = client.post("/api/sessions", json=session_body(GOOD_SCRIPT))
        session_id = response.json()["id"]
        for expected in ("accepted", "accepted", "accepted"):
            outcome = client.post(f"/api/sessions/{session_id}/tick")
            assert outcome.status_code == 200
            assert outcome.json()["kind"] == expected
        snapshot = client.get(f"/api/sessions/{session_id}").json()
        assert snapshot["state"] == "complete"
        assert client.post(f"/api/sessions/{session_id}/tick").status_code == 409

    def test_unknown_session_404(self, client):
        assert client.get("/api/sessions/nope").status_code == 404
        assert client.post("/api/sessions/nope/start").status_code == 404
        assert client.delete("/api/sessions/nope").status_code == 404

    def test_invalid_config_422(self, client):
        bad = session_body(GOOD_SCRIPT, mode="bogus")
        assert client.post("/api/sessions", json=bad).status_code == 422
        bad = session_body(GOOD_SCRIPT, sections_target=1)
        assert client.post("/api/sessions", json=bad).status_code == 422
        response = client.post("/api/sessions", json=session_body(GOOD_SCRIPT, degree=2))
        assert response.status_code == 422
        assert response.json()["detail"]

    def test_missing_provider_422(self, client):
        body = session_body(GOOD_SCRIPT)
        del body["provider"]
        assert client.post("/api/sessions", json=body).status_code == 422

    def test_delete_idle_session_cancels(self, client):
        response = client.post("/api/sessions", json=session_body(GOOD_SCRIPT))
        session_id = response.json()["id"]
        assert client.delete(f"/api/sessions/{session_id}").status_code == 204
        snapshot = client.get(f"/api/sessions/{session_id}").json()
        assert snapshot["state"] == "failed"
        assert snapshot["failure"] == "CANCELED"

    def test_delete_running_session_cancels(self, client):
        script = [{"reply": decagon_text(4.0 + 0.01 * i)} for i in range(40)]
        body = session_body(
            script, sections_target=40, max_iterations=40, trigger_interval=0.25
        )
        session_id = client.post("/api/sessions", json=body).json()["id"]
        client.post(f"/api/sessions/{session_id}/start")
        time.sleep(0.05)
        assert client.delete(f"/api/sessions/{session_id}").status_code == 204
        snapshot = client.get(f"/api/sessions/{session_id}").json()
        assert snapshot["state"] == "failed"
        assert snapshot["failure"] == "CANCELED"

    def test_listing_contains_sessions(self, client):
        session_id = client.post("/api/sessions", json=session_body(GOOD_SCRIPT)).json()["id"]
        listing = client.get("/api/sessions").json()
        assert any(item["id"] == session_id for item in listing)


class TestRepairEndpoints:
    def test_repair_flow(self, client, room_repair_script):
        response = client.post(
            "/api/repairs",
            json={
                "task_prompt": "build a room",
                "budget": 3,
                "provider": {"kind": "mock", "mock_replies": room_repair_script},
            },
        )
        assert response.status_code == 201
        repair_id = response.json()["id"]
        snapshot = wait_for_state(client, f"/api/repairs/{repair_id}", ("converged", "exhausted"))
        assert snapshot["state"] == "converged"
        assert len(snapshot["attempts"]) == 2
        assert "UNDEFINED_REFERENCE" in snapshot["attempts"][0]["outcome"]["error"]

        mesh = client.get(f"/api/repairs/{repair_id}/model")
        assert mesh.status_code == 200
        assert mesh.json()["vertices"]

    def test_repair_model_409_before_convergence(self, client):
        response = client.post(
            "/api/repairs",
            json={
                "task_prompt": "build",
                "budget": 1,
                "provider": {"kind": "mock", "mock_replies": [{"reply": "bogus"}]},
            },
        )
        repair_id = response.json()["id"]
        wait_for_state(client, f"/api/repairs/{repair_id}", ("exhausted",))
        assert client.get(f"/api/repairs/{repair_id}/model").status_code == 409

    def test_unknown_repair_404(self, client):
        assert client.get("/api/repairs/nope").status_code == 404


class TestFixtureMode:
    def test_fixture_replay(self, tmp_path, decagon_session_script):
        from promptcad.service import dump_session_fixture

        config = SessionConfig(
            mode="coordinate_sections",
            sections_target=3,
            max_iterations=4,
            constraints=SectionConstraints(
                require_convex=True,
                forbid_self_intersection=True,
                inner_circle_radius=6.0,
                center_bound_radius=3.0,
            ),
        )
        session = DesignSession(config, MockProvider(decagon_session_script))
        events = []
        session.run_to_completion(
            on_tick=lambda s, o: events.append(
                {"event": "iteration", "data": dict(s.snapshot(), outcome=o.to_json())}
            )
        )
        events.append({"event": "complete", "data": session.snapshot()})
        dump_session_fixture(session, events, tmp_path / "demo")

        client = TestClient(create_app(fixture_dir=str(tmp_path)))
        listing = client.get("/api/sessions").json()
        assert any(item["id"] == "demo" for item in listing)

        snapshot = client.get("/api/sessions/demo").json()
        assert snapshot["state"] == "complete"

        replayed = sse_events(client, "/api/sessions/demo/events")
        assert [name for name, _ in replayed] == [
            "iteration", "iteration", "iteration", "iteration", "complete",
        ]
        obj_bytes = client.get("/api/sessions/demo/model.obj").content
        assert obj_bytes == export_obj(session.assemble_model())
        assert client.post("/api/sessions/demo/tick").status_code == 409


class TestTranscriptPersistence:
    def test_data_dir_receives_jsonl(self, tmp_path):
        client = TestClient(create_app(data_dir=str(tmp_path)))
        session_id = client.post("/api/sessions", json=session_body(GOOD_SCRIPT)).json()["id"]
        client.post(f"/api/sessions/{session_id}/start")
        wait_for_state(client, f"/api/sessions/{session_id}", ("complete",))
        sse_events(client, f"/api/sessions/{session_id}/events")
        files = list(tmp_path.glob("*.jsonl"))
        assert files and files[0].read_text("utf-8").strip()
