"""Operator command line: simulate, assess, report, build-reference, serve, replay.

All subcommands are non-interactive.  Exit status 0 on success, 1 on data
errors (a JSON error object is written to stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import socket
import sys
import urllib.request
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from . import __version__
from .assessment import (
    AssessmentError,
    assess,
    render_text,
    report_from_dict,
    segment_session,
)
from .config import EngineConfig, load_config, split_addr
from .core import TaskKind
from .live import SessionHub
from .reference import (
    ReferenceError,
    ReferenceModel,
    build_reference,
    load_calibration,
)
from .segmentation import SegmentationError
from .simulator import Archetype, SimProfile, generate_session, stream_session
from .wire import WireError, read_session, write_session

DATA_ERRORS = (
    AssessmentError,
    SegmentationError,
    ReferenceError,
    WireError,
    FileNotFoundError,
    ValueError,
    ConnectionError,
)


def _fail(exc: Exception) -> int:
    sys.stderr.write(
        json.dumps({"error": type(exc).__name__, "detail": str(exc)}) + "\n"
    )
    return 1


def _add_config_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="engine config file (JSON)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="palpengine",
        description="Palpation training telemetry and assessment engine",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic session file")
    p.add_argument(
        "--archetype",
        required=True,
        choices=[a.value for a in Archetype if a is not Archetype.CUSTOM],
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--task", choices=[t.value for t in TaskKind])
    p.add_argument("--session-id")
    p.add_argument("--participant", default="sim")
    p.add_argument("-o", "--output", required=True, metavar="FILE")

    p = sub.add_parser("assess", help="score three session files into a report")
    p.add_argument("sessions", nargs=3, metavar="SESSION_FILE")
    p.add_argument("-o", "--output", metavar="FILE", help="report JSON (default stdout)")
    p.add_argument("--text", action="store_true", help="also print the text rendering")
    _add_config_arg(p)

    p = sub.add_parser("report", help="re-render a stored report as text")
    p.add_argument("report", metavar="REPORT_JSON")

    p = sub.add_parser("build-reference", help="average expert sessions into a model")
    p.add_argument("sessions", nargs="+", metavar="SESSION_FILE")
    p.add_argument("-o", "--output", required=True, metavar="FILE")
    p.add_argument("--calibration", metavar="FILE", help="calibration table (JSON)")
    p.add_argument(
        "--bound-cap",
        type=int,
        default=None,
        metavar="ARB",
        help="cap for the graded-force bound (default 600; 0 lifts the cap)",
    )
    _add_config_arg(p)

    p = sub.add_parser("serve", help="run the live feedback service")
    p.add_argument("--http", metavar="HOST:PORT", help="HTTP/WebSocket listen address")
    p.add_argument("--tcp", metavar="HOST:PORT", help="device stream listen address")
    p.add_argument("--data-dir", metavar="DIR")
    _add_config_arg(p)

    p = sub.add_parser("replay", help="stream a stored session to a TCP listener")
    p.add_argument("session", metavar="SESSION_FILE")
    p.add_argument("--to", required=True, metavar="HOST:PORT")
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument(
        "--open-via",
        metavar="HTTP_URL",
        help="open the session over HTTP first (e.g. http://127.0.0.1:8077)",
    )
    return parser


def _engine_config(args: argparse.Namespace) -> EngineConfig:
    cfg = load_config(getattr(args, "config", None))
    if getattr(args, "http", None):
        cfg = replace(cfg, http_addr=args.http)
    if getattr(args, "tcp", None):
        cfg = replace(cfg, tcp_addr=args.tcp)
    if getattr(args, "data_dir", None):
        cfg = replace(cfg, data_dir=args.data_dir)
    return cfg


def cmd_simulate(args: argparse.Namespace) -> int:
    profile = SimProfile.for_archetype(Archetype(args.archetype), seed=args.seed)
    session = generate_session(
        profile,
        task=TaskKind(args.task) if args.task else None,
        session_id=args.session_id,
        participant_id=args.participant,
    )
    write_session(session, args.output)
    print(f"wrote {len(session.frames)} frames to {args.output}")
    return 0


def cmd_assess(args: argparse.Namespace) -> int:
    cfg = _engine_config(args)
    sessions = [read_session(p) for p in args.sessions]
    report = assess(
        sessions,
        seg_config=cfg.segmentation,
        assess_config=cfg.assessment,
        quartet_bound=cfg.quartet_bound,
    )
    doc = json.dumps(report.to_dict(), indent=2)
    if args.output:
        Path(args.output).write_text(doc + "\n", "utf-8")
    else:
        print(doc)
    if args.text:
        print(render_text(report), end="")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    report = report_from_dict(json.loads(Path(args.report).read_text("utf-8")))
    print(render_text(report), end="")
    return 0


def cmd_build_reference(args: argparse.Namespace) -> int:
    cfg = _engine_config(args)
    calibration = load_calibration(args.calibration) if args.calibration else None
    pairs = []
    for path in args.sessions:
        session = read_session(path)
        events = segment_session(session, cfg.segmentation, cfg.quartet_bound)
        pairs.append((session, events))
    cap: Optional[int]
    if args.bound_cap is None:
        cap = cfg.quartet_bound
    elif args.bound_cap == 0:
        cap = None
    else:
        cap = args.bound_cap
    model = build_reference(pairs, calibration=calibration, quartet_bound_cap=cap)
    model.save(args.output)
    print(f"wrote reference model ({sum(model.session_counts.values())} sessions) to {args.output}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve_forever

    cfg = _engine_config(args)
    reference = (
        ReferenceModel.load(cfg.reference_model) if cfg.reference_model else None
    )
    calibration = load_calibration(cfg.calibration) if cfg.calibration else None
    hub = SessionHub(
        data_dir=Path(cfg.data_dir),
        seg_config=cfg.segmentation,
        assess_config=cfg.assessment,
        quartet_bound=cfg.quartet_bound,
        reference=reference,
        calibration=calibration,
    )
    http_host, http_port = split_addr(cfg.http_addr)
    tcp_host, tcp_port = split_addr(cfg.tcp_addr)
    try:
        asyncio.run(
            serve_forever(hub, http_host, http_port, tcp_host, tcp_port)
        )
    except KeyboardInterrupt:
        pass
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    session = read_session(args.session)
    if args.open_via:
        body = json.dumps(
            {
                "session_id": session.meta.session_id,
                "participant_id": session.meta.participant_id,
                "cohort": session.meta.cohort.value,
                "task": session.meta.task.value,
                "patient_ref": session.meta.patient_ref,
                "sample_rate_hz": session.meta.sample_rate_hz,
            }
        ).encode()
        req = urllib.request.Request(
            args.open_via.rstrip("/") + "/sessions",
            data=body,
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        urllib.request.urlopen(req).read()
    host, port = split_addr(args.to)
    with socket.create_connection((host, port)) as sock:
        sock.sendall(f"SESSION {session.meta.session_id}\n".encode())
        ack = sock.recv(64)
        if not ack.startswith(b"OK"):
            raise ConnectionError(f"listener refused stream: {ack!r}")
        sent = stream_session(session, args.speed, sock.sendall)
    print(f"streamed {sent} frames to {args.to}")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "assess": cmd_assess,
    "report": cmd_report,
    "build-reference": cmd_build_reference,
    "serve": cmd_serve,
    "replay": cmd_replay,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DATA_ERRORS as e:
        return _fail(e)


if __name__ == "__main__":
    sys.exit(main())
