import io
import random

import pytest

from palpengine.core import Cohort, SensorFrame, Session, SessionMeta, TaskKind
from palpengine.wire import (
    FRAME_LEN,
    SYNC,
    BadCrc,
    BadLength,
    BadSync,
    BadVersion,
    FieldOutOfRange,
    FrameStreamDecoder,
    ParseError,
    SchemaVersionMismatch,
    crc16_ccitt_false,
    decode_frame,
    encode_frame,
    read_session,
    write_session,
)


def crc16_reference(data: bytes) -> int:
    """Bitwise CRC-16/CCITT-FALSE, independent of the table-driven library."""
    crc = 0xFFFF
    for byte in data:
        crc ^= byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) if crc & 0x8000 else (crc << 1)
            crc &= 0xFFFF
    return crc


def random_frame(rng: random.Random, seq=None, t_ms=None) -> SensorFrame:
    # orientation quantized to centidegrees: the wire's native resolution
    return SensorFrame(
        seq=rng.randrange(0, 0x10000) if seq is None else seq,
        timestamp_ms=rng.randrange(0, 2**32) if t_ms is None else t_ms,
        force_raw=tuple(rng.randrange(0, 1024) for _ in range(12)),
        orientation=tuple(rng.randrange(-32768, 32768) / 100.0 for _ in range(3)),
        flags=rng.randrange(0, 256),
    )


def test_crc_check_value():
    assert crc16_ccitt_false(b"123456789") == 0x29B1
    assert crc16_reference(b"123456789") == 0x29B1


def test_crc_matches_reference_on_random_data():
    rng = random.Random(7)
    for _ in range(200):
        data = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 64)))
        assert crc16_ccitt_false(data) == crc16_reference(data)


def test_zero_frame_layout():
    frame = SensorFrame(seq=0, timestamp_ms=0, force_raw=(0,) * 12)
    data = encode_frame(frame)
    assert len(data) == FRAME_LEN == 42
    assert data[:2] == SYNC
    assert data[2] == 1  # version
    assert data[3:40] == bytes(37)
    assert int.from_bytes(data[40:], "little") == crc16_reference(data[:40])


def test_round_trip_random_frames():
    rng = random.Random(11)
    for _ in range(500):
        frame = random_frame(rng)
        assert decode_frame(encode_frame(frame)) == frame


def test_decode_rejects_bad_length():
    with pytest.raises(BadLength):
        decode_frame(b"\xa5\x5a\x01")


def test_single_bit_corruption_is_bad_crc():
    data = encode_frame(random_frame(random.Random(3)))
    for byte_idx in range(FRAME_LEN):
        for bit in range(8):
            corrupted = bytearray(data)
            corrupted[byte_idx] ^= 1 << bit
            with pytest.raises(BadCrc):
                decode_frame(bytes(corrupted))


def _with_fixed_crc(body: bytearray) -> bytes:
    crc = crc16_ccitt_false(bytes(body[:40]))
    body[40:] = crc.to_bytes(2, "little")
    return bytes(body)


def test_decode_distinguishes_sync_and_version():
    data = bytearray(encode_frame(random_frame(random.Random(4))))
    bad_sync = bytearray(data)
    bad_sync[0] = 0x00
    with pytest.raises(BadSync):
        decode_frame(_with_fixed_crc(bad_sync))
    bad_version = bytearray(data)
    bad_version[2] = 9
    with pytest.raises(BadVersion):
        decode_frame(_with_fixed_crc(bad_version))


def test_encode_field_range_checks():
    ok = random_frame(random.Random(5))
    with pytest.raises(FieldOutOfRange):
        encode_frame(
            SensorFrame(
                seq=0x10000, timestamp_ms=0, force_raw=ok.force_raw
            )
        )
    with pytest.raises(FieldOutOfRange):
        encode_frame(
            SensorFrame(seq=0, timestamp_ms=0, force_raw=(0,) * 12, orientation=(400.0, 0, 0))
        )


def test_stream_decoder_resyncs_after_garbage():
    rng = random.Random(6)
    frame = random_frame(rng)
    garbage = b"\x00\xa5\x13\x37" * 5
    dec = FrameStreamDecoder()
    frames = dec.feed(garbage + encode_frame(frame))
    assert frames == [frame]
    assert dec.stats.discarded_bytes >= len(garbage) - 1


def test_stream_decoder_handles_split_feeds():
    rng = random.Random(8)
    frames_in = [random_frame(rng) for _ in range(20)]
    stream = b"".join(encode_frame(f) for f in frames_in)
    dec = FrameStreamDecoder()
    out = []
    for i in range(0, len(stream), 7):  # deliberately frame-misaligned chunks
        out.extend(dec.feed(stream[i : i + 7]))
    assert out == frames_in
    assert dec.stats.errors == 0


def test_stream_decoder_counts_corruption_and_recovers():
    rng = random.Random(9)
    good = [random_frame(rng) for _ in range(3)]
    blobs = [bytearray(encode_frame(f)) for f in good]
    blobs[1][20] ^= 0xFF  # corrupt the middle frame's payload
    dec = FrameStreamDecoder()
    out = dec.feed(b"".join(bytes(b) for b in blobs))
    assert out == [good[0], good[2]]
    assert dec.stats.bad_crc >= 1


def test_stream_decoder_never_raises_on_fuzz():
    rng = random.Random(10)
    dec = FrameStreamDecoder()
    for _ in range(300):
        chunk = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 100)))
        dec.feed(chunk)  # no exception, any input


def _session(frames) -> Session:
    meta = SessionMeta(
        session_id="sess-1",
        participant_id="p-1",
        cohort=Cohort.VT,
        task=TaskKind.DEEP,
        patient_ref="actor-2",
        sample_rate_hz=50.0,
    )
    return Session(meta=meta, frames=frames)


def test_session_file_empty_round_trip(tmp_path):
    path = tmp_path / "empty.palp.jsonl"
    write_session(_session([]), path)
    assert len(path.read_text().splitlines()) == 1
    back = read_session(path)
    assert back.frames == []
    assert back.meta == _session([]).meta


def test_session_file_round_trip(tmp_path):
    rng = random.Random(12)
    frames = [
        random_frame(rng, seq=i, t_ms=i * 20) for i in range(3)
    ]
    session = _session(frames)
    path = tmp_path / "three.palp.jsonl"
    write_session(session, path)
    assert read_session(path) == session


def test_session_file_markers_extension(tmp_path):
    frame = SensorFrame(
        seq=0,
        timestamp_ms=0,
        force_raw=(0,) * 12,
        markers=((1.0, 2.0, 3.0), (4.0, 5.0, 6.0), (7.0, 8.0, 9.0), (0.0, 0.0, 0.5)),
    )
    path = tmp_path / "markers.palp.jsonl"
    write_session(_session([frame]), path)
    assert read_session(path).frames[0].markers == frame.markers


def test_truncated_last_line_names_the_line(tmp_path):
    session = _session(
        [random_frame(random.Random(13), seq=i, t_ms=i * 20) for i in range(3)]
    )
    buf = io.StringIO()
    write_session(session, buf)
    text = buf.getvalue()[:-20]  # chop the tail of the final record
    with pytest.raises(ParseError) as exc:
        read_session(io.StringIO(text))
    assert exc.value.line_number == 4


def test_schema_version_mismatch():
    bad = '{"format": "palp.session", "schema": 99, "session_id": "x"}\n'
    with pytest.raises(SchemaVersionMismatch):
        read_session(io.StringIO(bad))


def test_missing_header_is_parse_error():
    with pytest.raises(ParseError):
        read_session(io.StringIO('{"seq": 0}\n'))
