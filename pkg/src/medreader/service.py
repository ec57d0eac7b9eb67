"""HTTP service for bundles and telemetry.

Endpoints:
  GET  /healthz                    liveness
  GET  /papers                     stored papers (id, title, status)
  POST /papers                     ingest an interchange document; starts
                                   assembly in the background, returns id
  GET  /papers/{id}/bundle         the stored bundle (503 while assembling)
  POST /sessions/{id}/events       append telemetry events
  GET  /sessions/{id}/stats        replayed session statistics

Bodies are parsed by hand so malformed input yields a 400 with a
machine-readable reason instead of framework-shaped errors.
"""

from __future__ import annotations

import datetime as _dt
import json
import threading
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .bundle import AssembleConfig, assemble_bundle
from .config import Settings, build_providers
from .document import Paper, parse_document
from .errors import (
    BundleIntegrityError,
    BundleNotFoundError,
    EmptyDocumentError,
    EventValidationError,
    ParseError,
    SchemaValidationError,
)
from .lexicon import Lexicon, load_lexicon
from .questions import load_questions
from .schemas import validate_document_dict, validate_event_batch
from .store import (
    STATUS_ASSEMBLING,
    STATUS_FAILED,
    STATUS_INGESTED,
    STATUS_READY,
    BundleStore,
)
from .telemetry import SessionLog, compute_stats, validate_event, validate_session_id


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _error(status: int, error: str, reason: str, **extra) -> JSONResponse:
    return JSONResponse({"error": error, "reason": reason, **extra}, status_code=status)


class _SessionLogs:
    """Session log registry; per-session appends stay serialized."""

    def __init__(self, store: BundleStore):
        self.store = store
        self._logs: dict[str, SessionLog] = {}
        self._lock = threading.Lock()

    def get(self, session_id: str) -> SessionLog:
        with self._lock:
            if session_id not in self._logs:
                self._logs[session_id] = SessionLog(
                    self.store.session_log_path(session_id)
                )
            return self._logs[session_id]


def create_app(
    settings: Settings,
    answer_provider=None,
    generation_provider=None,
    fallback_provider=None,
) -> FastAPI:
    """Build the app; providers may be injected (tests) or derived from
    settings."""
    store = BundleStore(settings.store)
    if answer_provider is None or generation_provider is None:
        built_answers, built_generation, built_fallback = build_providers(settings)
        answer_provider = answer_provider or built_answers
        generation_provider = generation_provider or built_generation
        fallback_provider = fallback_provider or built_fallback

    lexicon = _load_lexicon(settings.lexicon)
    questions = _load_questions(settings.questions)

    app = FastAPI(title="medreader bundle service", version="0.1.0")
    app.state.store = store
    sessions = _SessionLogs(store)
    in_flight: set[str] = set()
    flight_lock = threading.Lock()

    def assemble(paper: Paper):
        try:
            config = AssembleConfig(
                passages_per_question=settings.passages_per_question,
                max_workers=settings.max_workers,
                fallback_provider=fallback_provider,
                created_at=_now(),
            )
            bundle = assemble_bundle(
                paper, lexicon, questions, answer_provider, generation_provider, config
            )
            store.save_bundle(bundle)
        except Exception as exc:  # record, never crash the worker thread
            store.set_status(paper.id, STATUS_FAILED, error=str(exc))
        finally:
            with flight_lock:
                in_flight.discard(paper.id)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/papers")
    def list_papers():
        return {
            "papers": [
                {"id": m.paper_id, "title": m.title, "status": m.status}
                for m in store.list_papers()
            ]
        }

    @app.post("/papers")
    async def ingest(request: Request):
        body = await request.body()
        try:
            doc = json.loads(body)
        except json.JSONDecodeError as exc:
            return _error(400, "parse_error", f"body is not valid JSON: {exc.msg}", path="$")
        try:
            validate_document_dict(doc)
            paper = parse_document(body)
        except SchemaValidationError as exc:
            return _error(400, "parse_error", str(exc), path=exc.json_path)
        except ParseError as exc:
            return _error(400, "parse_error", exc.reason, path=exc.path)
        except EmptyDocumentError as exc:
            return _error(400, "empty_document", str(exc), path="$.sections")

        store.save_document(paper, created_at=_now())
        meta = store.meta(paper.id)
        if meta.status == STATUS_READY:
            return JSONResponse({"id": paper.id, "status": STATUS_READY})
        with flight_lock:
            already_running = paper.id in in_flight
            if not already_running:
                in_flight.add(paper.id)
        if not already_running:
            store.set_status(paper.id, STATUS_ASSEMBLING)
            threading.Thread(target=assemble, args=(paper,), daemon=True).start()
        return JSONResponse({"id": paper.id, "status": STATUS_ASSEMBLING}, status_code=202)

    @app.get("/papers/{paper_id}/bundle")
    def get_bundle(paper_id: str):
        try:
            meta = store.meta(paper_id)
        except BundleNotFoundError as exc:
            return _error(404, "not_found", str(exc))
        if meta.status == STATUS_ASSEMBLING:
            return JSONResponse(
                {"error": "assembly_in_progress", "reason": "bundle not ready"},
                status_code=503,
                headers={"Retry-After": "1"},
            )
        if meta.status == STATUS_FAILED:
            return _error(500, "assembly_failed", meta.error)
        if meta.status == STATUS_INGESTED:
            return _error(404, "not_assembled", "paper ingested but never augmented")
        try:
            payload = store.load_bundle_bytes(paper_id)
        except BundleNotFoundError as exc:
            return _error(404, "not_found", str(exc))
        except BundleIntegrityError as exc:
            return _error(500, "integrity_error", str(exc))
        return Response(content=payload, media_type="application/json")

    @app.post("/sessions/{session_id}/events")
    async def post_events(session_id: str, request: Request):
        try:
            validate_session_id(session_id)
        except EventValidationError as exc:
            return _error(400, "bad_session", exc.reason)
        body = await request.body()
        try:
            batch = json.loads(body)
        except json.JSONDecodeError as exc:
            return _error(400, "parse_error", f"body is not valid JSON: {exc.msg}")
        try:
            validate_event_batch(batch)
        except SchemaValidationError as exc:
            return _error(400, "invalid_batch", str(exc), path=exc.json_path)
        log = sessions.get(session_id)
        # all-or-nothing: validate every event before appending any
        for i, raw in enumerate(batch["events"]):
            try:
                validate_event(raw)
            except EventValidationError as exc:
                return _error(400, "invalid_event", exc.reason, index=i)
        accepted = 0
        duplicates = 0
        for raw in batch["events"]:
            if log.record_event(raw):
                accepted += 1
            else:
                duplicates += 1
        return {"accepted": accepted, "duplicates": duplicates}

    @app.get("/sessions/{session_id}/stats")
    def get_stats(session_id: str):
        try:
            validate_session_id(session_id)
        except EventValidationError as exc:
            return _error(400, "bad_session", exc.reason)
        log = sessions.get(session_id)
        return compute_stats(session_id, log.events()).to_dict()

    _mount_frontend(app, settings.frontend_dir)
    return app


def _load_lexicon(path: str) -> Lexicon:
    if not path:
        return Lexicon(entries={})
    return load_lexicon(Path(path).read_bytes())


def _load_questions(path: str):
    if not path:
        return load_questions()
    return load_questions(Path(path).read_bytes())


def _mount_frontend(app: FastAPI, frontend_dir: str):
    if not frontend_dir:
        return
    directory = Path(frontend_dir)
    if directory.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=directory, html=True), name="app")


def serve(settings: Settings):
    """Run the service under uvicorn (blocking)."""
    import uvicorn

    app = create_app(settings)
    uvicorn.run(app, host=settings.host, port=settings.port, log_level="info")
