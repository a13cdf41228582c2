"""HTTP service over a running session: state, events (poll + SSE), manual
function calls, task submission, the approval queue, recording, datasets,
evaluation and summaries. This is the only backend the operator console talks to."""

from __future__ import annotations

import json
import queue
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .agents.commands import FunctionCall
from .dataset.evaluate import annotate_plausibility, evaluate
from .dataset.io import export_tests, import_tests
from .dataset.record import dataset_from_suites, suite_oracle
from .errors import (
    AgentPlantError,
    BadCommandSyntaxError,
    ConfigError,
    DatasetError,
    InvalidStateError,
    RecordingError,
    SimError,
)
from .events import EventSource, SemanticLevel, Subscription, SubscriptionFilter
from .session import ProposalError, Session


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def _event_payload(session: Session, event) -> dict:
    data = event.to_dict()
    data["rendered"] = session.log.render(event)
    return data


def _subscription_from_params(scope: str | None, source: str | None, level: str | None) -> Subscription:
    return Subscription(
        filters=(
            SubscriptionFilter(
                scope=scope or "*",
                sources=frozenset({EventSource(source)}) if source else None,
                levels=frozenset({SemanticLevel(level)}) if level else None,
            ),
        )
    )


def create_app(session: Session, datasets_dir: str | Path | None = None, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="agentplant control plane")
    session.has_human_channel = True
    datasets_path = Path(datasets_dir) if datasets_dir else Path.cwd() / "datasets"

    @app.get("/state")
    def get_state():
        return session.snapshot_state()

    @app.get("/events")
    def get_events(from_seq: int = 0, scope: str | None = None, source: str | None = None, level: str | None = None):
        try:
            subscription = _subscription_from_params(scope, source, level)
        except ValueError as exc:
            return _error(422, str(exc))
        events = session.log.view(subscription, from_seq)
        return {"events": [_event_payload(session, e) for e in events]}

    @app.get("/events/stream")
    def stream_events(request: Request, from_seq: int = 0):
        # Per-connection buffered fan-out; a slow consumer overflows its queue,
        # gets disconnected, and falls back to polling /events.
        buffer: queue.Queue = queue.Queue(maxsize=1000)
        for event in session.log.events_after(from_seq):
            buffer.put(event)
        cancel = session.log.subscribe_listener(
            lambda e: buffer.put_nowait(e) if not buffer.full() else None
        )

        def generate():
            try:
                while True:
                    try:
                        event = buffer.get(timeout=1.0)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    payload = json.dumps(_event_payload(session, event), ensure_ascii=False)
                    yield f"data: {payload}\n\n"
            finally:
                cancel()

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.post("/functions/{module}/{name}")
    async def invoke_function(module: str, name: str, request: Request, note: str = ""):
        try:
            args = await request.json()
        except Exception:
            return _error(422, "request body must be a JSON array of arguments")
        if not isinstance(args, list):
            return _error(422, "request body must be a JSON array of arguments")
        module_names = session.config.layout.module_names()
        if module not in module_names:
            return _error(404, f"unknown module {module!r}")
        if session.config.layout.module(module).function(name) is None:
            return _error(404, f"unknown function {name!r} in module {module!r}")
        try:
            call = FunctionCall(name=name, args=tuple(args))
        except BadCommandSyntaxError as exc:
            return _error(422, str(exc))
        try:
            seqs = session.manual_invoke(module, call, note=note)
        except SimError as exc:
            return _error(422, str(exc))
        events = [e for e in session.log.events_after(0) if e.seq in set(seqs)]
        return {"events": [_event_payload(session, e) for e in events]}

    @app.post("/tasks", status_code=202)
    async def post_task(request: Request):
        body = await request.json()
        text = body.get("text") if isinstance(body, dict) else None
        if not text or not isinstance(text, str):
            return _error(422, "body must be {\"text\": \"...\"}")
        session.post_task(text)
        return {"status": "accepted"}

    @app.get("/proposals")
    def list_proposals():
        return {
            "proposals": [
                {
                    "id": p.id,
                    "agent_id": p.agent_id,
                    "reason": p.output.reason,
                    "command": p.output.command_text(),
                    "created_sim_time": p.created_sim_time,
                    "status": p.status,
                }
                for p in session.proposals.values()
            ]
        }

    def _transition(proposal_id: str, action: str):
        try:
            if action == "approve":
                proposal = session.approve_proposal(proposal_id)
            else:
                proposal = session.reject_proposal(proposal_id)
        except ProposalError as exc:
            if exc.unknown:
                return _error(404, str(exc))
            return _error(409, str(exc))
        return {"id": proposal.id, "status": proposal.status}

    @app.post("/proposals/{proposal_id}/approve")
    def approve(proposal_id: str):
        return _transition(proposal_id, "approve")

    @app.post("/proposals/{proposal_id}/reject")
    def reject(proposal_id: str):
        return _transition(proposal_id, "reject")

    @app.post("/recording/start")
    def recording_start():
        try:
            session.start_recording()
        except RecordingError as exc:
            return _error(409, str(exc))
        return {"recording": True}

    @app.post("/recording/stop")
    async def recording_stop(request: Request):
        try:
            body = await request.json()
        except Exception:
            body = {}
        description = body.get("task_description") if isinstance(body, dict) else None
        if not description or not isinstance(description, str):
            # The recording workflow requires the human's task description.
            return _error(422, "recording/stop needs a non-empty task_description")
        try:
            suite = session.stop_recording(description)
        except RecordingError as exc:
            return _error(409, str(exc))
        dataset = dataset_from_suites(
            suite.name, [suite], session.config,
            provenance=(f"recorded from session {session.config.name!r}",),
        )
        datasets_path.mkdir(parents=True, exist_ok=True)
        out = datasets_path / f"{suite.name}.dataset.jsonl"
        export_tests(dataset, out)
        return {"suite": suite.name, "cases": len(suite.cases), "path": str(out)}

    @app.get("/datasets")
    def list_datasets():
        if not datasets_path.exists():
            return {"datasets": []}
        return {
            "datasets": sorted(p.name for p in datasets_path.glob("*.dataset.jsonl"))
        }

    @app.post("/evaluate")
    async def evaluate_dataset(request: Request):
        body = await request.json()
        dataset_id = body.get("dataset")
        backend_id = body.get("backend", "oracle")
        path = datasets_path / dataset_id if dataset_id else None
        if path is None or not path.exists():
            return _error(404, f"unknown dataset {dataset_id!r}")
        try:
            dataset = import_tests(path)
        except DatasetError as exc:
            return _error(422, str(exc))
        if backend_id == "oracle":
            backend = suite_oracle(dataset)
        else:
            backend = session.config.backends.get(backend_id)
            if backend is None:
                return _error(404, f"unknown backend {backend_id!r}")
        report = evaluate(dataset, backend)
        annotations = body.get("annotations")
        if annotations:
            try:
                report = annotate_plausibility(report, annotations)
            except DatasetError as exc:
                return _error(422, str(exc))
        result = report.to_dict()
        result["table"] = report.format_table()
        return result

    @app.get("/summary")
    def get_summary():
        try:
            text = session.summarize_now()
        except (InvalidStateError, ConfigError) as exc:
            return _error(409, str(exc))
        except AgentPlantError as exc:
            return _error(502, str(exc))
        return {"summary": text}

    if ui_dir is not None and Path(ui_dir).exists():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
