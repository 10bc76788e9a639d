"""HTTP service exposing generation and repair sessions to clients.

Sessions live in memory; every mutation serializes through the session's own
single-writer lock, and a server-sent event stream carries one event per
completed iteration (plus a terminal ``complete``/``failed`` event).
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse, Response, StreamingResponse
from pydantic import BaseModel, Field

from .gateway import GatewayError, ProviderConfig, provider_for, write_transcript
from .geometry import SectionConstraints, export_obj, mesh_from_json
from .scene import repair_loop, scene_to_mesh
from .session import DesignSession, SessionConfig


class ProviderSpec(BaseModel):
    kind: Literal["mock", "http"] = "mock"
    endpoint: Optional[str] = None
    model_name: Optional[str] = None
    api_key_env: str = "LLM_API_KEY"
    timeout: float = 30.0
    max_retries: int = Field(2, ge=0)
    mock_script: Optional[str] = None
    mock_replies: Optional[list] = None
    extra: dict = Field(default_factory=dict)

    def to_config(self) -> ProviderConfig:
        return ProviderConfig(
            kind=self.kind,
            endpoint=self.endpoint,
            model_name=self.model_name,
            api_key_env=self.api_key_env,
            timeout=self.timeout,
            max_retries=self.max_retries,
            script_path=self.mock_script,
            script=tuple(self.mock_replies) if self.mock_replies is not None else None,
            extra=dict(self.extra),
        )


class ConstraintsSpec(BaseModel):
    require_convex: bool = True
    forbid_self_intersection: bool = True
    inner_circle_radius: Optional[float] = Field(None, gt=0)
    center_bound_radius: Optional[float] = Field(None, gt=0)

    def to_constraints(self) -> SectionConstraints:
        return SectionConstraints(
            require_convex=self.require_convex,
            forbid_self_intersection=self.forbid_self_intersection,
            inner_circle_radius=self.inner_circle_radius,
            center_bound_radius=self.center_bound_radius,
        )


class SessionCreate(BaseModel):
    mode: Literal["coordinate_sections", "equation_profile"] = "coordinate_sections"
    sections_target: int = Field(3, ge=2)
    max_iterations: int = Field(10, ge=1)
    trigger_interval: float = Field(0.0, ge=0)
    section_spacing: float = Field(1.0, gt=0)
    degree: Literal[0, 3] = 0
    samples_per_span: int = Field(16, ge=1)
    points_per_section: Optional[int] = Field(None, ge=3)
    base_prompt: Optional[str] = None
    amplitude: float = Field(1.0, gt=0)
    constraints: ConstraintsSpec = Field(default_factory=ConstraintsSpec)
    provider: Optional[ProviderSpec] = None


class RepairCreate(BaseModel):
    task_prompt: str = Field(min_length=1)
    budget: int = Field(3, ge=1)
    provider: Optional[ProviderSpec] = None


class _SessionRuntime:
    def __init__(self, session: DesignSession):
        self.session = session
        self.events: list[dict] = []
        self.condition = threading.Condition()
        self.thread: threading.Thread | None = None
        self.terminal = False

    def emit(self, name: str, payload: dict):
        with self.condition:
            self.events.append({"event": name, "data": payload})
            if name in ("complete", "failed"):
                self.terminal = True
            self.condition.notify_all()

    def emit_iteration(self, outcome):
        snapshot = self.session.snapshot()
        snapshot["outcome"] = outcome.to_json()
        self.emit("iteration", snapshot)

    def emit_terminal(self):
        state = self.session.state
        if state in ("complete", "failed"):
            self.emit(state, self.session.snapshot())

    def links(self, base: str) -> dict:
        return {
            "model_url": f"{base}/model",
            "transcript_url": f"{base}/transcript",
            "events_url": f"{base}/events",
        }


class _FixtureRuntime:
    """Read-only replay of a recorded run, served over the same endpoints."""

    def __init__(self, directory: Path):
        self.directory = directory
        self.snapshot = json.loads((directory / "snapshot.json").read_text("utf-8"))
        self.events = json.loads((directory / "events.json").read_text("utf-8"))
        self.model = json.loads((directory / "model.json").read_text("utf-8"))
        self.obj_bytes = (directory / "model.obj").read_bytes()
        self.transcript = (directory / "transcript.jsonl").read_text("utf-8")
        self.terminal = True


def _sse_bytes(event: dict) -> bytes:
    return (f"event: {event['event']}\ndata: {json.dumps(event['data'])}\n\n").encode("utf-8")


def create_app(
    default_provider: ProviderConfig | None = None,
    data_dir: str | None = None,
    allow_origin: str | None = None,
    fixture_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="promptcad")
    if allow_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[allow_origin] if allow_origin != "*" else ["*"],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    sessions: dict[str, _SessionRuntime] = {}
    fixtures: dict[str, _FixtureRuntime] = {}
    repairs: dict[str, dict] = {}

    if fixture_dir:
        root = Path(fixture_dir)
        for candidate in sorted(root.iterdir()) if root.is_dir() else []:
            if (candidate / "snapshot.json").exists():
                fixtures[candidate.name] = _FixtureRuntime(candidate)

    def resolve_provider(spec: Optional[ProviderSpec]) -> ProviderConfig:
        if spec is not None:
            return spec.to_config()
        if default_provider is not None:
            return default_provider
        raise HTTPException(422, detail="no provider configured for this service")

    def runtime_or_404(session_id: str) -> _SessionRuntime:
        runtime = sessions.get(session_id)
        if runtime is None:
            raise HTTPException(404, detail=f"unknown session {session_id}")
        return runtime

    def persist_transcript(session: DesignSession):
        if data_dir:
            write_transcript(session.transcript, data_dir)

    # -- sessions ----------------------------------------------------------

    @app.get("/api/sessions")
    def list_sessions():
        listing = [runtime.session.snapshot() for runtime in sessions.values()]
        listing += [dict(fx.snapshot, id=name) for name, fx in fixtures.items()]
        return listing

    @app.post("/api/sessions", status_code=201)
    def create_session(body: SessionCreate):
        try:
            config = SessionConfig(
                mode=body.mode,
                sections_target=body.sections_target,
                max_iterations=body.max_iterations,
                trigger_interval=body.trigger_interval,
                section_spacing=body.section_spacing,
                degree=body.degree,
                constraints=body.constraints.to_constraints(),
                samples_per_span=body.samples_per_span,
                points_per_section=body.points_per_section,
                amplitude=body.amplitude,
                base_prompt=body.base_prompt,
            )
            provider = provider_for(resolve_provider(body.provider))
        except (ValueError, GatewayError) as exc:
            raise HTTPException(422, detail=str(exc)) from exc
        session = DesignSession(config, provider)
        sessions[session.id] = _SessionRuntime(session)
        return {"id": session.id}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        if session_id in fixtures:
            fx = fixtures[session_id]
            snapshot = dict(fx.snapshot, id=session_id)
        else:
            snapshot = runtime_or_404(session_id).session.snapshot()
        base = f"/api/sessions/{session_id}"
        snapshot["links"] = {
            "model_url": f"{base}/model",
            "transcript_url": f"{base}/transcript",
            "events_url": f"{base}/events",
        }
        return snapshot

    @app.post("/api/sessions/{session_id}/start", status_code=202)
    def start_session(session_id: str):
        if session_id in fixtures:
            return {"state": "complete"}
        runtime = runtime_or_404(session_id)
        session = runtime.session
        if session.state != "idle" or runtime.thread is not None:
            raise HTTPException(409, detail=f"session is {session.state}")

        def run():
            try:
                session.run_to_completion(
                    on_tick=lambda _session, outcome: runtime.emit_iteration(outcome)
                )
            except GatewayError as exc:
                session.state = "failed"
                session.failure = f"PROVIDER_ERROR: {exc}"
            finally:
                runtime.emit_terminal()
                persist_transcript(session)

        runtime.thread = threading.Thread(target=run, daemon=True)
        runtime.thread.start()
        return {"state": "running"}

    @app.post("/api/sessions/{session_id}/tick")
    def tick_session(session_id: str):
        if session_id in fixtures:
            raise HTTPException(409, detail="fixture sessions cannot be stepped")
        runtime = runtime_or_404(session_id)
        session = runtime.session
        if runtime.thread is not None:
            raise HTTPException(409, detail="session is running asynchronously")
        if session.state == "idle":
            session.state = "running"
        if session.state != "running":
            raise HTTPException(409, detail=f"session is {session.state}")
        try:
            outcome = session.tick()
        except GatewayError as exc:
            session.state = "failed"
            session.failure = f"PROVIDER_ERROR: {exc}"
            runtime.emit_terminal()
            raise HTTPException(502, detail=str(exc)) from exc
        runtime.emit_iteration(outcome)
        runtime.emit_terminal()
        if session.state in ("complete", "failed"):
            persist_transcript(session)
        return outcome.to_json()

    @app.get("/api/sessions/{session_id}/model")
    def session_model(session_id: str):
        if session_id in fixtures:
            return fixtures[session_id].model
        runtime = runtime_or_404(session_id)
        if runtime.session.state != "complete":
            raise HTTPException(409, detail="model not ready")
        return runtime.session.assemble_model().to_json_dict()

    @app.get("/api/sessions/{session_id}/model.obj")
    def session_model_obj(session_id: str):
        if session_id in fixtures:
            return Response(fixtures[session_id].obj_bytes, media_type="model/obj")
        runtime = runtime_or_404(session_id)
        if runtime.session.state != "complete":
            raise HTTPException(409, detail="model not ready")
        return Response(export_obj(runtime.session.assemble_model()), media_type="model/obj")

    @app.get("/api/sessions/{session_id}/transcript")
    def session_transcript(session_id: str):
        if session_id in fixtures:
            return PlainTextResponse(fixtures[session_id].transcript)
        runtime = runtime_or_404(session_id)
        return PlainTextResponse(runtime.session.transcript.to_jsonl())

    @app.get("/api/sessions/{session_id}/events")
    def session_events(session_id: str):
        if session_id in fixtures:
            fx = fixtures[session_id]

            def replay():
                for event in fx.events:
                    yield _sse_bytes(event)

            return StreamingResponse(replay(), media_type="text/event-stream")

        runtime = runtime_or_404(session_id)

        def stream():
            sent = 0
            while True:
                with runtime.condition:
                    while sent >= len(runtime.events) and not runtime.terminal:
                        runtime.condition.wait(timeout=0.5)
                    pending = runtime.events[sent:]
                    done = runtime.terminal and sent + len(pending) >= len(runtime.events)
                for event in pending:
                    yield _sse_bytes(event)
                sent += len(pending)
                if done and sent >= len(runtime.events):
                    return

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.delete("/api/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        if session_id in fixtures:
            raise HTTPException(409, detail="fixture sessions cannot be canceled")
        runtime = runtime_or_404(session_id)
        session = runtime.session
        session.cancel()
        if session.state in ("idle",):
            session.state = "failed"
            session.failure = "CANCELED"
            runtime.emit_terminal()
        if runtime.thread is not None:
            runtime.thread.join(timeout=30)
        return Response(status_code=204)

    # -- repairs -----------------------------------------------------------

    @app.post("/api/repairs", status_code=201)
    def create_repair(body: RepairCreate):
        try:
            provider = provider_for(resolve_provider(body.provider))
        except (ValueError, GatewayError) as exc:
            raise HTTPException(422, detail=str(exc)) from exc
        repair_id = uuid.uuid4().hex[:12]
        record = {"id": repair_id, "state": "running", "session": None}
        repairs[repair_id] = record

        def run():
            try:
                result = repair_loop(body.task_prompt, provider, body.budget, repair_id)
                record["session"] = result
                record["state"] = result.state
                if data_dir:
                    write_transcript(result.transcript, data_dir, f"{repair_id}.jsonl")
            except GatewayError as exc:
                record["state"] = "failed"
                record["error"] = str(exc)

        thread = threading.Thread(target=run, daemon=True)
        record["thread"] = thread
        thread.start()
        return {"id": repair_id}

    def repair_or_404(repair_id: str) -> dict:
        record = repairs.get(repair_id)
        if record is None:
            raise HTTPException(404, detail=f"unknown repair {repair_id}")
        return record

    @app.get("/api/repairs/{repair_id}")
    def get_repair(repair_id: str):
        record = repair_or_404(repair_id)
        payload = {"id": repair_id, "state": record["state"]}
        if record.get("error"):
            payload["error"] = record["error"]
        if record["session"] is not None:
            payload.update(record["session"].to_json())
            payload["state"] = record["session"].state
        return payload

    @app.get("/api/repairs/{repair_id}/model")
    def repair_model(repair_id: str):
        record = repair_or_404(repair_id)
        session = record["session"]
        if session is None or session.scene is None:
            raise HTTPException(409, detail="no converged scene")
        return scene_to_mesh(session.scene).to_json_dict()

    @app.get("/api/repairs/{repair_id}/transcript")
    def repair_transcript(repair_id: str):
        record = repair_or_404(repair_id)
        session = record["session"]
        if session is None:
            return PlainTextResponse("")
        return PlainTextResponse(session.transcript.to_jsonl())

    return app


def dump_session_fixture(session: DesignSession, events: list[dict], directory) -> Path:
    """Record a finished session as a replayable fixture bundle."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    (out / "snapshot.json").write_text(json.dumps(session.snapshot(), indent=2), "utf-8")
    (out / "events.json").write_text(json.dumps(events, indent=2), "utf-8")
    mesh = session.assemble_model()
    (out / "model.json").write_text(json.dumps(mesh.to_json_dict()), "utf-8")
    (out / "model.obj").write_bytes(export_obj(mesh))
    (out / "transcript.jsonl").write_text(session.transcript.to_jsonl(), "utf-8")
    return out
