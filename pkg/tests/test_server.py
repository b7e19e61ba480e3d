import asyncio
import json
import socket
import threading
import time

import pytest
from fastapi.testclient import TestClient

from palpengine.live import SessionHub
from palpengine.reference import build_reference
from palpengine.segmentation import SegmentationConfig
from palpengine.server import create_app, run_tcp_ingest
from palpengine.simulator import Archetype, SimProfile, generate_session, stream_session
from palpengine.wire import encode_frame
from palpengine.assessment import segment_session


@pytest.fixture()
def hub(tmp_path):
    return SessionHub(data_dir=tmp_path / "data")


@pytest.fixture()
def client(hub):
    return TestClient(create_app(hub, heartbeat_s=0.2))


def open_body(session_id, task="superficial", participant="p1"):
    return {
        "session_id": session_id,
        "participant_id": participant,
        "cohort": "VT",
        "task": task,
    }


def wire_payload(arch, seed, session_id, participant):
    session = generate_session(
        SimProfile.for_archetype(arch, seed=seed),
        session_id=session_id,
        participant_id=participant,
    )
    return b"".join(encode_frame(f) for f in session.frames)


def test_session_lifecycle_over_http(client):
    r = client.post("/sessions", json=open_body("h1"))
    assert r.status_code == 201
    assert client.post("/sessions", json=open_body("h1")).status_code == 409
    assert client.get("/sessions").json()[0]["session_id"] == "h1"

    payload = wire_payload(Archetype.IDEAL_SUPERFICIAL, 2, "h1", "p1")
    r = client.post(
        "/sessions/h1/frames",
        content=payload,
        headers={"Content-Type": "application/octet-stream"},
    )
    assert r.status_code == 200
    assert r.json()["accepted"] > 0

    state = client.get("/sessions/h1").json()
    assert state["snapshot"]["sensors"]["T1"]["color"] in {"green", "amber", "red"}

    r = client.post("/sessions/h1/finalize")
    assert r.status_code == 200
    assert r.json()["stored"].endswith(".palp.jsonl")
    # double finalize conflicts
    assert client.post("/sessions/h1/finalize").status_code == 409


def test_unknown_session_404(client):
    assert client.get("/sessions/nope").status_code == 404
    assert client.post("/sessions/nope/frames", content=b"").status_code == 404


def test_bad_metadata_422(client):
    assert client.post("/sessions", json={"session_id": "x"}).status_code == 422
    body = open_body("x")
    body["task"] = "bogus"
    assert client.post("/sessions", json=body).status_code == 422


def test_report_flow_over_http(client):
    for sid, task, arch in [
        ("w1", "superficial", Archetype.IDEAL_SUPERFICIAL),
        ("w2", "deep", Archetype.IDEAL_DEEP),
        ("w3", "liver", Archetype.IDEAL_LIVER),
    ]:
        client.post("/sessions", json=open_body(sid, task, "part-1"))
        client.post("/sessions/" + sid + "/frames",
                    content=wire_payload(arch, 21, sid, "part-1"))
        client.post(f"/sessions/{sid}/finalize")
    r = client.post("/participants/part-1/report")
    assert r.status_code == 200
    doc = r.json()
    assert doc["total"] == 30.0
    assert doc["osce"] == "Excellent"

    assert client.get("/participants/part-1/report").json() == doc
    text = client.get("/participants/part-1/report", params={"format": "text"}).text
    assert "TOTAL: 30.00/30" in text
    assert client.get("/participants/ghost/report").status_code == 404


def test_report_errors_are_422(client):
    client.post("/sessions", json=open_body("only-one", "deep", "p-half"))
    client.post("/sessions/only-one/finalize")
    r = client.post("/participants/p-half/report")
    assert r.status_code == 422


def test_reference_model_endpoint(tmp_path):
    hub = SessionHub(data_dir=tmp_path / "d")
    client = TestClient(create_app(hub))
    assert client.get("/reference-model").status_code == 404

    dummy = generate_session(SimProfile.for_archetype(Archetype.TUTOR1_DEEP, 0))
    model = build_reference([(dummy, segment_session(dummy, SegmentationConfig()))])
    hub.reference = model
    doc = client.get("/reference-model").json()
    assert doc["safe_threshold_newtons"] == 1.65
    assert doc["schema"] == "palp.refmodel/1"


def test_websocket_stream_and_heartbeat(client):
    with client.websocket_connect("/ws") as ws:
        client.post("/sessions", json=open_body("ws1"))
        msg = json.loads(ws.receive_text())
        assert msg["kind"] == "task_started"
        assert msg["session_id"] == "ws1"
        client.post(
            "/sessions/ws1/frames",
            content=wire_payload(Archetype.IDEAL_SUPERFICIAL, 5, "ws1", "p1"),
        )
        kinds = set()
        deadline = time.monotonic() + 3.0
        while time.monotonic() < deadline and {"snapshot", "heartbeat"} - kinds:
            kinds.add(json.loads(ws.receive_text())["kind"])
        assert "snapshot" in kinds
        assert "heartbeat" in kinds  # beats at the configured interval


def _run_tcp(hub, started: threading.Event, stop: threading.Event, port_box: list):
    async def main():
        server = await run_tcp_ingest(hub, "127.0.0.1", 0)
        port_box.append(server.sockets[0].getsockname()[1])
        started.set()
        while not stop.is_set():
            await asyncio.sleep(0.02)
        server.close()
        await server.wait_closed()

    asyncio.run(main())


def test_tcp_ingest_streams_into_hub(tmp_path):
    hub = SessionHub(data_dir=tmp_path / "d")
    session = generate_session(
        SimProfile.for_archetype(Archetype.IDEAL_DEEP, 4),
        session_id="tcp-1",
        participant_id="pt",
    )
    hub.open_session(session.meta)

    started, stop, port_box = threading.Event(), threading.Event(), []
    thread = threading.Thread(
        target=_run_tcp, args=(hub, started, stop, port_box), daemon=True
    )
    thread.start()
    assert started.wait(5.0)
    try:
        with socket.create_connection(("127.0.0.1", port_box[0]), timeout=5) as sock:
            sock.sendall(b"SESSION tcp-1\n")
            assert sock.recv(16).startswith(b"OK")
            stream_session(session, 0, sock.sendall)
        deadline = time.monotonic() + 5.0
        while time.monotonic() < deadline:
            if hub.session_state("tcp-1")["frames"] == len(session.frames):
                break
            time.sleep(0.02)
        assert hub.session_state("tcp-1")["frames"] == len(session.frames)
    finally:
        stop.set()
        thread.join(timeout=5)


def test_tcp_rejects_bad_header(tmp_path):
    hub = SessionHub(data_dir=tmp_path / "d")
    started, stop, port_box = threading.Event(), threading.Event(), []
    thread = threading.Thread(
        target=_run_tcp, args=(hub, started, stop, port_box), daemon=True
    )
    thread.start()
    assert started.wait(5.0)
    try:
        with socket.create_connection(("127.0.0.1", port_box[0]), timeout=5) as sock:
            sock.sendall(b"HELLO\n")
            assert sock.recv(64).startswith(b"ERR")
        with socket.create_connection(("127.0.0.1", port_box[0]), timeout=5) as sock:
            sock.sendall(b"SESSION ghost\n")
            assert sock.recv(16).startswith(b"OK")
            sock.sendall(b"\xa5\x5a" + bytes(40))
            assert sock.recv(64).startswith(b"ERR")
    finally:
        stop.set()
        thread.join(timeout=5)
