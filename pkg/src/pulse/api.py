"""Versioned HTTP API (/v1) for the device emulator and the dashboard.

Bodies are JSON documents. Every error response carries a stable
machine-readable code:

    {"error": {"code": "...", "message": "...", "details": {...}}}

Codes: validation, empty_input, auth, forbidden, state, sequence,
not_found, configuration, provider, storage, integrity, internal.

The live channel is server-sent events; clients resume with
``Last-Event-ID`` (or ``?last_seq=``) and receive exactly the committed
events after that sequence number.
"""

from __future__ import annotations

import base64
import json

from fastapi import FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .errors import (
    AuthError,
    NotFoundError,
    PulseError,
    SequenceError,
    StateError,
    ValidationError,
)
from .ingest import AudioChunk, Speaker
from .service import SessionService

_STATUS = {
    "validation": 400,
    "empty_input": 400,
    "auth": 401,
    "forbidden": 403,
    "state": 409,
    "sequence": 409,
    "not_found": 404,
    "configuration": 500,
    "provider": 502,
    "storage": 500,
    "integrity": 500,
    "internal": 500,
}


def error_response(exc: PulseError, status: int | None = None) -> JSONResponse:
    return JSONResponse(
        status_code=status or _STATUS.get(exc.code, 500),
        content={
            "error": {
                "code": exc.code,
                "message": exc.message,
                "details": {k: v for k, v in exc.details.items()},
            }
        },
    )


def create_app(service: SessionService) -> FastAPI:
    app = FastAPI(title="pulse", version="1")

    @app.exception_handler(PulseError)
    async def handle_pulse_error(request: Request, exc: PulseError):
        return error_response(exc)

    def require_reader(key: str | None):
        if key != service.config.reader_key and key != service.config.admin_key:
            raise AuthError("reader credential required")

    def require_admin(key: str | None):
        if key != service.config.admin_key:
            raise AuthError("admin credential required")

    # -- session control ---------------------------------------------------

    @app.post("/v1/sessions", status_code=201)
    async def create_session(body: dict):
        uid = body.get("credential")
        if uid is None or not isinstance(uid, str) or not uid:
            raise ValidationError("body must carry a non-empty 'credential'")
        return service.create_session(
            uid, title=str(body.get("title", "")), at=body.get("at")
        )

    @app.post("/v1/sessions/{session_id}/transition")
    async def transition(
        session_id: str,
        body: dict,
        x_session_token: str | None = Header(default=None),
    ):
        service.check_token(session_id, x_session_token or "")
        event = body.get("event")
        if event not in ("start", "stop"):
            raise ValidationError("event must be 'start' or 'stop'")
        at = body.get("at")
        if not isinstance(at, int):
            raise ValidationError("body must carry integer 'at' (ms)")
        return {"state": service.transition(session_id, event, at)}

    # -- ingestion ---------------------------------------------------------

    @app.post("/v1/sessions/{session_id}/chunks")
    async def post_chunk(
        session_id: str,
        body: dict,
        x_session_token: str | None = Header(default=None),
    ):
        service.check_token(session_id, x_session_token or "")
        if not isinstance(body.get("seq"), int):
            raise ValidationError("chunk must carry integer 'seq'")
        payload = None
        if body.get("payload_b64"):
            payload = base64.b64decode(body["payload_b64"])
        chunk = AudioChunk(
            session_id=session_id,
            seq=body["seq"],
            payload=payload,
            text=body.get("text"),
            speaker=Speaker(body.get("speaker", "Unknown")),
            sample_rate=body.get("sample_rate", 16000),
            t_start=body.get("t_start", 0),
            t_end=body.get("t_end", body.get("t_start", 0)),
        )
        return service.ingest_chunk(session_id, chunk)

    # -- taps --------------------------------------------------------------

    @app.post("/v1/sessions/{session_id}/taps")
    async def post_tap(
        session_id: str,
        body: dict,
        x_session_token: str | None = Header(default=None),
    ):
        service.check_token(session_id, x_session_token or "")
        at = body.get("at")
        if not isinstance(at, int):
            raise ValidationError("tap must carry integer 'at' (ms)")
        return service.tap(session_id, at)

    # -- live stream -------------------------------------------------------

    @app.get("/v1/sessions/{session_id}/live")
    async def live(
        session_id: str,
        last_seq: int = Query(default=0),
        wait: bool = Query(default=True),
        last_event_id: str | None = Header(default=None),
        x_session_token: str | None = Header(default=None),
        x_reader_key: str | None = Header(default=None),
    ):
        live_session = service._live(session_id)  # 404 before auth check
        if (x_session_token or "") != live_session.token:
            require_reader(x_reader_key)
        resume = int(last_event_id) if last_event_id else last_seq

        def stream():
            source = (
                live_session.events.subscribe(resume)
                if wait
                else live_session.events.events_after(resume)
            )
            for event in source:
                data = json.dumps(
                    {"session_id": event.session_id, "kind": event.kind, "payload": event.payload},
                    sort_keys=True,
                )
                yield f"id: {event.seq}\nevent: {event.kind}\ndata: {data}\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    # -- analytics reads ---------------------------------------------------

    @app.get("/v1/sessions")
    async def list_sessions(
        state: str | None = Query(default=None),
        x_reader_key: str | None = Header(default=None),
    ):
        require_reader(x_reader_key)
        return {"sessions": service.list_sessions(state=state)}

    @app.get("/v1/sessions/{session_id}")
    async def session_detail(
        session_id: str,
        label: str | None = Query(default=None),
        x_reader_key: str | None = Header(default=None),
    ):
        require_reader(x_reader_key)
        return service.session_detail(session_id, label=label)

    # -- taxonomy ----------------------------------------------------------

    @app.get("/v1/taxonomy")
    async def get_taxonomy(x_reader_key: str | None = Header(default=None)):
        require_reader(x_reader_key)
        return service.get_taxonomy()

    @app.put("/v1/taxonomy")
    async def put_taxonomy(
        body: dict, x_admin_key: str | None = Header(default=None)
    ):
        require_admin(x_admin_key)
        labels = body.get("labels")
        if not isinstance(labels, list) or not labels:
            raise ValidationError("body must carry a non-empty 'labels' list")
        return {"version": service.update_taxonomy(labels)}

    return app
