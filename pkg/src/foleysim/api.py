"""HTTP API over a running session, consumed by the authoring panel and CLI.

Endpoints (JSON unless noted):
  GET  /session                     session metadata and scene summary
  GET  /events                      all unique event records
  GET  /events/{id}/candidates      per-method candidate assets
  POST /events/{id}/select          {asset_id}
  POST /events/{id}/transfer        {asset_id, prompt, mode?}
  GET  /events/{id}/alternatives    ?method=recommended|retrieved
  GET  /assets/{id}/audio           WAV bytes
  POST /actions                     inject a user action
  GET  /stream                      server-sent events (?last_seq= resumes)

All mutations are routed to the session owner; handlers never touch session
state directly.
"""

from __future__ import annotations

import json
import queue
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .audio import clip_to_wav_bytes
from .errors import FoleysimError, NotACandidate, NotFound, ParseError
from .session import SessionService

SSE_HEARTBEAT_S = 10.0


def create_app(
    service: SessionService,
    frontend_dir: str | None = None,
    heartbeat_s: float = SSE_HEARTBEAT_S,
) -> FastAPI:
    app = FastAPI(title="foleysim session", version="0.1.0")

    @app.exception_handler(FoleysimError)
    async def _handle_domain_error(request: Request, exc: FoleysimError):
        if isinstance(exc, NotFound):
            status = 404
        elif isinstance(exc, NotACandidate):
            status = 409
        elif isinstance(exc, ParseError):
            status = 400
        else:
            status = 400
        return JSONResponse(
            status_code=status, content={"error": type(exc).__name__, "detail": str(exc)}
        )

    @app.get("/session")
    def get_session() -> dict:
        def snap() -> dict:
            return {
                "session_id": service.session_id,
                "config": service.config.snapshot(),
                "scene": {
                    "objects": [
                        {
                            "id": o.id,
                            "name": o.name,
                            "description": o.description,
                            "position": list(service.state.positions.get(o.id, o.position)),
                            "animations": [a.animation_id for a in o.animations],
                        }
                        for o in service.scene.objects
                    ],
                    "planes": [
                        {
                            "id": p.id,
                            "anchor": list(p.anchor),
                            "extents": list(p.extents),
                            "material": service.materials[p.id].value,
                        }
                        for p in service.scene.planes
                    ],
                },
            }

        return service.call(snap)

    @app.get("/events")
    def get_events() -> list:
        return service.call(service.events_snapshot)

    @app.get("/events/{event_id}/candidates")
    def get_candidates(event_id: str) -> dict:
        return service.call(lambda: service.candidates_snapshot(event_id))

    @app.get("/events/{event_id}/alternatives")
    def get_alternatives(event_id: str, method: str) -> dict:
        assets = service.call(lambda: service.list_alternatives(event_id, method))
        return {"event_id": event_id, "method": method, "assets": [a.meta() for a in assets]}

    @app.post("/events/{event_id}/select")
    async def post_select(event_id: str, request: Request) -> dict:
        body = await request.json()
        asset_id = str(body.get("asset_id", ""))
        return service.call(lambda: service.select_sound(event_id, asset_id))

    @app.post("/events/{event_id}/transfer")
    async def post_transfer(event_id: str, request: Request) -> dict:
        body = await request.json()
        asset_id = str(body.get("asset_id", ""))
        prompt = str(body.get("prompt", "")).strip()
        mode = str(body.get("mode", "transfer"))
        if not prompt:
            raise ParseError("transfer requires a non-empty prompt")
        return service.call(lambda: service.request_transfer(event_id, asset_id, prompt, mode))

    @app.get("/assets/{asset_id}/audio")
    def get_audio(asset_id: str) -> Response:
        asset = service.call(lambda: service.assets.get(asset_id))
        if asset is None:
            return JSONResponse(status_code=404, content={"error": "UnknownAsset"})
        return Response(content=clip_to_wav_bytes(asset.audio), media_type="audio/wav")

    @app.post("/actions")
    async def post_action(request: Request) -> dict:
        body = await request.json()
        return service.call(lambda: service.inject_action(body))

    @app.get("/stream")
    def get_stream(request: Request, last_seq: int = 0) -> StreamingResponse:
        sub = service.subscribe(last_seq=last_seq)

        def sse():
            try:
                yield "retry: 1000\n\n"
                for msg in sub.backlog:
                    yield _sse_frame(msg)
                while True:
                    try:
                        msg = sub.q.get(timeout=heartbeat_s)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    yield _sse_frame(msg)
            finally:
                service.unsubscribe(sub)

        return StreamingResponse(sse(), media_type="text/event-stream")

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="frontend")

    return app


def _sse_frame(msg: dict) -> str:
    data = json.dumps({**msg["data"], "seq": msg["seq"]}, sort_keys=True)
    return f"id: {msg['seq']}\nevent: {msg['type']}\ndata: {data}\n\n"
