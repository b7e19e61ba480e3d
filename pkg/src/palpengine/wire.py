"""Binary framing for live glove streams and the line-delimited session file.

Wire frame, little-endian, 42 bytes total:

    offset  size  field
    0       2     sync 0xA5 0x5A
    2       1     version (=1)
    3       2     seq, u16
    5       4     timestamp_ms, u32
    9       24    force, 12 x u16 (low 10 bits meaningful)
    33      6     roll, pitch, yaw, 3 x i16 centidegrees
    39      1     flags, u8
    40      2     CRC-16/CCITT-FALSE over bytes 0..39

The CRC is verified before anything else, so any corruption of a captured
frame surfaces as BadCrc regardless of which byte was hit.

Stored sessions use UTF-8 line-delimited JSON (extension ``.palp.jsonl``):
a header record followed by one record per frame with keys
``{seq, t_ms, f:[12], rpy:[3]}`` plus optional ``flags`` and ``markers``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator, List, Tuple, Union

from .core import (
    FORCE_CHANNELS,
    RAW_MAX,
    Cohort,
    SensorFrame,
    Session,
    SessionMeta,
    TaskKind,
)

SYNC = b"\xa5\x5a"
WIRE_VERSION = 1
FRAME_LEN = 42

_BODY = struct.Struct("<2sBHI12H3hB")  # everything but the trailing CRC
_CRC = struct.Struct("<H")
assert _BODY.size + _CRC.size == FRAME_LEN


class WireError(Exception):
    """Base for framing and session-file errors."""


class FieldOutOfRange(WireError):
    pass


class FrameDecodeError(WireError):
    """Base for the distinguishable decode failures."""


class BadLength(FrameDecodeError):
    pass


class BadCrc(FrameDecodeError):
    pass


class BadSync(FrameDecodeError):
    pass


class BadVersion(FrameDecodeError):
    pass


class SchemaVersionMismatch(WireError):
    pass


class ParseError(WireError):
    """Session-file record could not be parsed; carries the 1-based line."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def _crc16_table(poly: int = 0x1021) -> Tuple[int, ...]:
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ poly) if (crc & 0x8000) else (crc << 1)
        table.append(crc & 0xFFFF)
    return tuple(table)


_CRC16_TABLE = _crc16_table()


def crc16_ccitt_false(data: bytes, init: int = 0xFFFF) -> int:
    """CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection/xorout)."""
    crc = init
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC16_TABLE[((crc >> 8) ^ b) & 0xFF]
    return crc


_CDEG_MIN, _CDEG_MAX = -32768, 32767


def encode_frame(frame: SensorFrame) -> bytes:
    """Pack one frame into its 42-byte wire form.

    Orientation is quantized to centidegrees; marker positions never travel
    on the wire (they originate at the camera, not the glove).
    """
    if not 0 <= frame.seq <= 0xFFFF:
        raise FieldOutOfRange(f"seq {frame.seq} outside u16")
    if not 0 <= frame.timestamp_ms <= 0xFFFFFFFF:
        raise FieldOutOfRange(f"timestamp_ms {frame.timestamp_ms} outside u32")
    for v in frame.force_raw:
        if not 0 <= v <= RAW_MAX:
            raise FieldOutOfRange(f"force value {v} outside [0, {RAW_MAX}]")
    cdeg = []
    for axis, deg in zip(("roll", "pitch", "yaw"), frame.orientation):
        c = round(deg * 100)
        if not _CDEG_MIN <= c <= _CDEG_MAX:
            raise FieldOutOfRange(f"{axis} {deg} deg outside i16 centidegrees")
        cdeg.append(c)
    if not 0 <= frame.flags <= 0xFF:
        raise FieldOutOfRange(f"flags {frame.flags} outside u8")
    body = _BODY.pack(
        SYNC,
        WIRE_VERSION,
        frame.seq,
        frame.timestamp_ms,
        *[int(v) for v in frame.force_raw],
        *cdeg,
        frame.flags,
    )
    return body + _CRC.pack(crc16_ccitt_false(body))


def decode_frame(data: bytes) -> SensorFrame:
    """Unpack one 42-byte wire frame, raising a distinguishable error.

    Check order: length, CRC (over the whole frame including sync), sync
    pattern, version.
    """
    if len(data) != FRAME_LEN:
        raise BadLength(f"expected {FRAME_LEN} bytes, got {len(data)}")
    (crc_recv,) = _CRC.unpack_from(data, _BODY.size)
    crc_calc = crc16_ccitt_false(data[: _BODY.size])
    if crc_recv != crc_calc:
        raise BadCrc(f"crc 0x{crc_recv:04X} != computed 0x{crc_calc:04X}")
    fields = _BODY.unpack(data[: _BODY.size])
    sync, version, seq, t_ms = fields[0], fields[1], fields[2], fields[3]
    if sync != SYNC:
        raise BadSync(f"sync {sync!r}")
    if version != WIRE_VERSION:
        raise BadVersion(f"version {version}")
    force = tuple(v & 0x3FF for v in fields[4 : 4 + FORCE_CHANNELS])
    roll, pitch, yaw = fields[4 + FORCE_CHANNELS : 7 + FORCE_CHANNELS]
    flags = fields[7 + FORCE_CHANNELS]
    return SensorFrame(
        seq=seq,
        timestamp_ms=t_ms,
        force_raw=force,
        orientation=(roll / 100.0, pitch / 100.0, yaw / 100.0),
        flags=flags,
    )


@dataclass
class DecodeStats:
    frames: int = 0
    bad_crc: int = 0
    bad_version: int = 0
    discarded_bytes: int = 0

    @property
    def errors(self) -> int:
        return self.bad_crc + self.bad_version


class FrameStreamDecoder:
    """Incremental decoder for a byte stream of wire frames.

    Tolerates garbage between frames by scanning for the sync pattern; a
    frame that fails its CRC advances the scan by one byte so an embedded
    real frame is still found.  Single consumer per connection.
    """

    def __init__(self) -> None:
        self._buf = bytearray()
        self.stats = DecodeStats()

    def feed(self, data: bytes) -> List[SensorFrame]:
        """Append received bytes; return every complete frame now decodable."""
        self._buf.extend(data)
        frames: List[SensorFrame] = []
        pos = 0
        buf = self._buf
        while True:
            start = buf.find(SYNC, pos)
            if start < 0:
                # keep the last byte: it may be the first half of a sync pair
                self.stats.discarded_bytes += max(len(buf) - pos - 1, 0)
                pos = max(len(buf) - 1, pos)
                break
            self.stats.discarded_bytes += start - pos
            if len(buf) - start < FRAME_LEN:
                pos = start
                break
            try:
                frame = decode_frame(bytes(buf[start : start + FRAME_LEN]))
            except BadCrc:
                self.stats.bad_crc += 1
                self.stats.discarded_bytes += 1
                pos = start + 1
                continue
            except BadVersion:
                self.stats.bad_version += 1
                self.stats.discarded_bytes += 1
                pos = start + 1
                continue
            frames.append(frame)
            self.stats.frames += 1
            pos = start + FRAME_LEN
        del buf[:pos]
        return frames


SESSION_FORMAT = "palp.session"
SESSION_SCHEMA = 1
SESSION_EXT = ".palp.jsonl"

PathOrIO = Union[str, Path, IO[str]]


def _header_record(meta: SessionMeta) -> dict:
    return {
        "format": SESSION_FORMAT,
        "schema": SESSION_SCHEMA,
        "session_id": meta.session_id,
        "participant_id": meta.participant_id,
        "cohort": meta.cohort.value,
        "task": meta.task.value,
        "patient_ref": meta.patient_ref,
        "sample_rate_hz": meta.sample_rate_hz,
    }


def _frame_record(frame: SensorFrame) -> dict:
    rec = {
        "seq": frame.seq,
        "t_ms": frame.timestamp_ms,
        "f": list(frame.force_raw),
        "rpy": list(frame.orientation),
    }
    if frame.flags:
        rec["flags"] = frame.flags
    if frame.markers is not None:
        rec["markers"] = [list(m) for m in frame.markers]
    return rec


def write_session(session: Session, target: PathOrIO) -> None:
    """Write header plus one frame record per line; append-only layout."""
    if hasattr(target, "write"):
        _write_session_fp(session, target)  # type: ignore[arg-type]
    else:
        with open(target, "w", encoding="utf-8") as fp:
            _write_session_fp(session, fp)


def _write_session_fp(session: Session, fp: IO[str]) -> None:
    fp.write(json.dumps(_header_record(session.meta)) + "\n")
    for frame in session.frames:
        fp.write(json.dumps(_frame_record(frame)) + "\n")


def _parse_header(line: str) -> SessionMeta:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as e:
        raise ParseError(1, f"bad header: {e.msg}") from e
    if not isinstance(rec, dict) or rec.get("format") != SESSION_FORMAT:
        raise ParseError(1, "missing session header record")
    if rec.get("schema") != SESSION_SCHEMA:
        raise SchemaVersionMismatch(
            f"schema {rec.get('schema')!r}, expected {SESSION_SCHEMA}"
        )
    try:
        return SessionMeta(
            session_id=rec["session_id"],
            participant_id=rec["participant_id"],
            cohort=Cohort(rec["cohort"]),
            task=TaskKind(rec["task"]),
            patient_ref=rec.get("patient_ref", ""),
            sample_rate_hz=rec.get("sample_rate_hz", 50.0),
        )
    except (KeyError, ValueError) as e:
        raise ParseError(1, f"bad header field: {e}") from e


def _parse_frame(line: str, line_number: int) -> SensorFrame:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as e:
        raise ParseError(line_number, f"bad frame record: {e.msg}") from e
    try:
        markers = rec.get("markers")
        return SensorFrame(
            seq=rec["seq"],
            timestamp_ms=rec["t_ms"],
            force_raw=tuple(rec["f"]),
            orientation=tuple(rec["rpy"]),
            flags=rec.get("flags", 0),
            markers=tuple(tuple(m) for m in markers) if markers else None,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(line_number, f"bad frame field: {e}") from e


def read_session_stream(fp: IO[str]) -> Tuple[SessionMeta, Iterator[SensorFrame]]:
    """Parse the header, then yield frames lazily (no whole-file load)."""
    header_line = fp.readline()
    if not header_line.strip():
        raise ParseError(1, "empty file")
    meta = _parse_header(header_line)

    def frames() -> Iterator[SensorFrame]:
        for line_number, line in enumerate(fp, start=2):
            if not line.strip():
                continue
            yield _parse_frame(line, line_number)

    return meta, frames()


def read_session(source: PathOrIO) -> Session:
    if hasattr(source, "readline"):
        meta, frames = read_session_stream(source)  # type: ignore[arg-type]
        return Session(meta=meta, frames=list(frames))
    with open(source, "r", encoding="utf-8") as fp:
        meta, frames = read_session_stream(fp)
        return Session(meta=meta, frames=list(frames))
