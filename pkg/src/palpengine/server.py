"""HTTP/WebSocket/TCP surface over the session hub.

HTTP endpoints (JSON unless noted):

    POST /sessions                      open a session
    GET  /sessions                      list sessions
    GET  /sessions/{id}                 state + current snapshot
    POST /sessions/{id}/frames          ingest wire bytes (octet-stream)
    POST /sessions/{id}/finalize        close and store the task recording
    POST /participants/{pid}/report     score three finalized tasks
    GET  /participants/{pid}/report     fetch a stored report
    GET  /reference-model               averaged expert model, if loaded

WS /ws streams every feedback message as one JSON text message and sends a
``{"kind": "heartbeat"}`` beat every five seconds.  Inbound device streams
connect to the TCP listener, send ``SESSION <id>\\n`` once, then raw wire
frames.
"""

from __future__ import annotations

import asyncio
import json
import time
from typing import Optional

from fastapi import FastAPI, HTTPException, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse
from starlette.concurrency import run_in_threadpool

from .assessment import AssessmentError, render_text
from .core import Cohort, SessionMeta, TaskKind
from .live import DuplicateSession, ServiceError, SessionHub, UnknownSession

HEARTBEAT_S = 5.0


def create_app(hub: SessionHub, heartbeat_s: float = HEARTBEAT_S) -> FastAPI:
    app = FastAPI(title="palpengine feedback service")

    @app.post("/sessions", status_code=201)
    def open_session(body: dict):
        try:
            meta = SessionMeta(
                session_id=body["session_id"],
                participant_id=body["participant_id"],
                cohort=Cohort(body.get("cohort", "CT")),
                task=TaskKind(body["task"]),
                patient_ref=body.get("patient_ref", ""),
                sample_rate_hz=body.get("sample_rate_hz", 50.0),
            )
        except (KeyError, ValueError) as e:
            raise HTTPException(422, f"bad session metadata: {e}")
        try:
            hub.open_session(meta)
        except DuplicateSession as e:
            raise HTTPException(409, str(e))
        return {"session_id": meta.session_id}

    @app.get("/sessions")
    def list_sessions():
        return hub.list_sessions()

    @app.get("/sessions/{session_id}")
    def session_state(session_id: str):
        try:
            return hub.session_state(session_id)
        except UnknownSession as e:
            raise HTTPException(404, str(e))

    @app.post("/sessions/{session_id}/frames")
    async def ingest_frames(session_id: str, request: Request):
        data = await request.body()
        try:
            accepted = hub.ingest(session_id, data)
        except (UnknownSession, ServiceError) as e:
            raise HTTPException(404 if isinstance(e, UnknownSession) else 409, str(e))
        return {"accepted": accepted}

    @app.post("/sessions/{session_id}/finalize")
    def finalize_task(session_id: str):
        try:
            path = hub.finalize_task(session_id)
        except UnknownSession as e:
            raise HTTPException(404, str(e))
        except ServiceError as e:
            raise HTTPException(409, str(e))
        return {"stored": str(path)}

    @app.post("/participants/{participant_id}/report")
    def finalize_participant(participant_id: str, body: Optional[dict] = None):
        session_ids = (body or {}).get("session_ids")
        try:
            report = hub.finalize_participant(participant_id, session_ids)
        except (ServiceError, AssessmentError) as e:
            raise HTTPException(422, str(e))
        return report.to_dict()

    @app.get("/participants/{participant_id}/report")
    def get_report(participant_id: str, format: str = "json"):
        try:
            report = hub.get_report(participant_id)
        except ServiceError as e:
            raise HTTPException(404, str(e))
        if format == "text":
            return PlainTextResponse(render_text(report))
        return report.to_dict()

    @app.get("/reference-model")
    def reference_model():
        if hub.reference is None:
            raise HTTPException(404, "no reference model loaded")
        return hub.reference.to_dict()

    @app.websocket("/ws")
    async def ws_feed(ws: WebSocket):
        await ws.accept()
        sub = hub.subscribe()
        last_beat = time.monotonic()

        async def pump_out():
            nonlocal last_beat
            while True:
                wait = max(0.02, min(0.5, heartbeat_s - (time.monotonic() - last_beat)))
                msg = await run_in_threadpool(sub.get, wait)
                if msg is not None:
                    await ws.send_text(msg.to_json())
                if time.monotonic() - last_beat >= heartbeat_s:
                    await ws.send_text(json.dumps({"kind": "heartbeat"}))
                    last_beat = time.monotonic()

        async def pump_in():
            # bidirectional contract: accept and ignore client text (pings)
            while True:
                await ws.receive_text()

        tasks = [asyncio.create_task(pump_out()), asyncio.create_task(pump_in())]
        try:
            done, pending = await asyncio.wait(
                tasks, return_when=asyncio.FIRST_EXCEPTION
            )
            for t in pending:
                t.cancel()
        except WebSocketDisconnect:
            pass
        finally:
            for t in tasks:
                t.cancel()
            hub.unsubscribe(sub)

    return app


async def run_tcp_ingest(
    hub: SessionHub, host: str, port: int
) -> asyncio.AbstractServer:
    """Start the device-facing TCP listener.

    Protocol: one ``SESSION <id>`` line, then a raw wire-frame byte stream.
    """

    async def handler(reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        peer = writer.get_extra_info("peername")
        try:
            header = await reader.readline()
            parts = header.decode("utf-8", "replace").split()
            if len(parts) != 2 or parts[0] != "SESSION":
                writer.write(b"ERR expected 'SESSION <id>' line\n")
                await writer.drain()
                return
            session_id = parts[1]
            writer.write(b"OK\n")
            await writer.drain()
            while True:
                chunk = await reader.read(4096)
                if not chunk:
                    break
                try:
                    await run_in_threadpool(hub.ingest, session_id, chunk)
                except (UnknownSession, ServiceError) as e:
                    writer.write(f"ERR {e}\n".encode())
                    await writer.drain()
                    return
        except (ConnectionResetError, asyncio.IncompleteReadError):
            pass
        finally:
            writer.close()
            try:
                await writer.wait_closed()
            except Exception:
                pass

    return await asyncio.start_server(handler, host, port)


async def serve_forever(
    hub: SessionHub,
    http_host: str,
    http_port: int,
    tcp_host: str,
    tcp_port: int,
    log_level: str = "info",
) -> None:
    """Run the HTTP app and the TCP ingest listener on one event loop."""
    import uvicorn

    tcp_server = await run_tcp_ingest(hub, tcp_host, tcp_port)
    config = uvicorn.Config(
        create_app(hub), host=http_host, port=http_port, log_level=log_level
    )
    server = uvicorn.Server(config)
    try:
        await server.serve()
    finally:
        tcp_server.close()
        await tcp_server.wait_closed()
