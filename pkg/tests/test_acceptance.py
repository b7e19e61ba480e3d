"""Acceptance suite: one test per release criterion, each at its stated bound.

Run with ``pytest tests/test_acceptance.py -v -s`` to get one explicit
PASS/FAIL line per criterion in addition to pytest's own verdicts.
"""

import random
import time
from contextlib import contextmanager

import pytest

from palpengine.assessment import (
    assess,
    assess_events,
    criterion_correct_use,
    criterion_force_transition,
    criterion_wrong_use,
    segment_session,
    sensor_contributions,
)
from palpengine.core import (
    ALL_SENSORS,
    ForceQuartet,
    Gender,
    HealthMetrics,
    OsceRating,
    SensorId,
    TaskKind,
    classify_health_metrics,
)
from palpengine.live import MSG_SNAPSHOT, SessionHub
from palpengine.reference import CalibrationTable, build_reference, calibrate, safe_threshold_check
from palpengine.segmentation import (
    PressEvent,
    SegmentationConfig,
    StreamSegmenter,
    press_stats,
    segment_presses,
)
from palpengine.simulator import Archetype, SimProfile, generate_session
from palpengine.wire import BadCrc, crc16_ccitt_false, decode_frame, encode_frame, read_session

TOL = 1e-9


@contextmanager
def criterion_check(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


def ideal_triplet(seed=40):
    return [
        generate_session(SimProfile.for_archetype(Archetype.IDEAL_SUPERFICIAL, seed)),
        generate_session(SimProfile.for_archetype(Archetype.IDEAL_DEEP, seed + 1)),
        generate_session(SimProfile.for_archetype(Archetype.IDEAL_LIVER, seed + 2)),
    ]


def test_rubric_exactness():
    with criterion_check("rubric exactness (ideal triplet = 30.0, Excellent, <1s)"):
        sessions = ideal_triplet()
        start = time.perf_counter()
        report = assess(sessions)
        elapsed = time.perf_counter() - start
        assert report.total == 30.0
        assert report.osce == OsceRating.EXCELLENT
        assert elapsed < 1.0


def _cmap(**shares):
    full = {s: 0.0 for s in ALL_SENSORS}
    for name, pct in shares.items():
        full[SensorId(name)] = float(pct)
    full[SensorId.B2] += 100.0 - sum(full.values())
    from palpengine.assessment import ContributionMap

    return ContributionMap(shares_pct=full, total_presses=100)


def _events(quartets, sensor=SensorId.T1):
    peaks = {1: 100, 2: 200, 3: 400, 4: 500}
    return [
        PressEvent(sensor, i * 400, i * 400 + 200, peaks[int(q)], q)
        for i, q in enumerate(quartets)
    ]


def test_criterion_fixtures():
    """The nine worked scoring examples, pass/boundary/fail per criterion."""
    with criterion_check("criterion fixtures (nine worked examples, 1e-9)"):
        # wrong use of hand
        s = criterion_wrong_use(_cmap(E1=15, E2=4, E3=0), TaskKind.SUPERFICIAL)
        assert abs(s.points - 10.0) <= TOL
        s = criterion_wrong_use(_cmap(E1=10, E2=10, E3=10), TaskKind.SUPERFICIAL)
        assert abs(s.points - 10.0) <= TOL  # bounds are inclusive
        s = criterion_wrong_use(_cmap(E1=20, E2=15, E3=0), TaskKind.SUPERFICIAL)
        assert abs(s.points - 0.0) <= TOL  # error 15 floors at zero

        # correct use of hand
        s = criterion_correct_use(_cmap(T1=40, T2=30, T3=20), TaskKind.SUPERFICIAL)
        assert abs(s.points - 10.0) <= TOL
        s = criterion_correct_use(_cmap(T1=60, T2=10, T3=10), TaskKind.SUPERFICIAL)
        assert abs(s.points - 0.0) <= TOL
        assert abs(s.violation.magnitude_pct - (100.0 / 3.0 - 20.0)) <= TOL
        s = criterion_correct_use(
            _cmap(S1=11, S2=11, S3=11, T1=11, B1=11), TaskKind.LIVER
        )
        assert abs(s.points - 10.0) <= TOL  # focus-set sum 55
        s = criterion_correct_use(
            _cmap(S1=9, S2=9, S3=9, T1=9, B1=9), TaskKind.LIVER
        )
        assert abs(s.points - 5.0) <= TOL  # focus-set sum 45

        # force magnitude transition
        s = criterion_force_transition(
            _events([ForceQuartet.Q1, ForceQuartet.Q2, ForceQuartet.Q1]),
            TaskKind.SUPERFICIAL,
        )
        assert abs(s.points - 10.0) <= TOL
        s = criterion_force_transition(
            _events([ForceQuartet.Q3] * 5 + [ForceQuartet.Q4] * 3 + [ForceQuartet.Q1] * 2),
            TaskKind.DEEP,
        )
        assert abs(s.points - 8.0) <= TOL
        s = criterion_force_transition(
            _events([ForceQuartet.Q4] * 4), TaskKind.SUPERFICIAL
        )
        assert abs(s.points - 0.0) <= TOL


def test_tutor_archetype_counts():
    with criterion_check("tutor archetypes (6 and 21 press events)"):
        cfg = SegmentationConfig()
        for seed in (0, 5, 99):
            t1 = generate_session(SimProfile.for_archetype(Archetype.TUTOR1_DEEP, seed))
            t2 = generate_session(SimProfile.for_archetype(Archetype.TUTOR2_DEEP, seed))
            assert len(segment_session(t1, cfg)) == 6
            assert len(segment_session(t2, cfg)) == 21


def test_batch_stream_equivalence_1000_traces():
    with criterion_check("batch/stream segmentation equivalence (1000 traces)"):
        rng = random.Random(2026)
        mismatches = 0
        for _ in range(1000):
            n = rng.randint(1, 120)
            t, trace = 0, []
            for _ in range(n):
                t += rng.randint(1, 40)
                trace.append((t, rng.randint(0, 250)))
            cfg = SegmentationConfig(
                onset_threshold=rng.choice([30, 40, 60]),
                release_threshold=rng.choice([10, 20, 25]),
                min_press_ms=rng.choice([20, 50, 100]),
                min_gap_ms=rng.choice([0, 30, 50, 80]),
                median_window=rng.choice([1, 3, 5, 7]),
            )
            batch = segment_presses(trace, cfg, SensorId.T1)
            seg = StreamSegmenter(SensorId.T1, cfg)
            stream = []
            for ts, v in trace:
                stream.extend(seg.push(ts, v))
            stream.extend(seg.finalize())
            if batch != stream:
                mismatches += 1
        assert mismatches == 0


def test_codec_round_trips_and_corruption():
    with criterion_check("codec (10k round-trips, 336 bit flips, 0x29B1)"):
        assert crc16_ccitt_false(b"123456789") == 0x29B1
        rng = random.Random(77)
        for _ in range(10_000):
            frame_in = _random_frame(rng)
            assert decode_frame(encode_frame(frame_in)) == frame_in
        reference = encode_frame(_random_frame(random.Random(78)))
        flips = 0
        for byte_idx in range(len(reference)):
            for bit in range(8):
                corrupted = bytearray(reference)
                corrupted[byte_idx] ^= 1 << bit
                with pytest.raises(BadCrc):
                    decode_frame(bytes(corrupted))
                flips += 1
        assert flips == 336


def _random_frame(rng):
    from palpengine.core import SensorFrame

    return SensorFrame(
        seq=rng.randrange(0, 0x10000),
        timestamp_ms=rng.randrange(0, 2**32),
        force_raw=tuple(rng.randrange(0, 1024) for _ in range(12)),
        orientation=tuple(rng.randrange(-32768, 32768) / 100.0 for _ in range(3)),
        flags=rng.randrange(0, 256),
    )


def test_record_replay_equivalence(tmp_path):
    with criterion_check("record/replay equivalence (field-by-field)"):
        hub = SessionHub(data_dir=tmp_path / "data")
        specs = [
            (Archetype.IDEAL_SUPERFICIAL, "a1"),
            (Archetype.IDEAL_DEEP, "a2"),
            (Archetype.IDEAL_LIVER, "a3"),
        ]
        for arch, sid in specs:
            session = generate_session(
                SimProfile.for_archetype(arch, seed=31),
                session_id=sid,
                participant_id="acc",
            )
            hub.open_session(session.meta)
            stream = b"".join(encode_frame(f) for f in session.frames)
            for i in range(0, len(stream), 997):  # socket-like odd chunking
                hub.ingest(sid, stream[i : i + 997])
            hub.finalize_task(sid)
        live = hub.finalize_participant("acc")
        recorded = [
            read_session(tmp_path / "data" / f"{sid}.palp.jsonl")
            for _, sid in specs
        ]
        batch = assess(recorded)
        assert live.to_dict() == batch.to_dict()


def _seeded_triplet_events(rng):
    """Balanced sessions: near-equal fingertips, light legal error usage,
    a mix of correct and wrong peak quartets (so totals sit below 30)."""
    correct = {
        TaskKind.SUPERFICIAL: (ForceQuartet.Q1, ForceQuartet.Q2),
        TaskKind.DEEP: (ForceQuartet.Q3, ForceQuartet.Q4),
    }
    wrong = {
        TaskKind.SUPERFICIAL: (ForceQuartet.Q3, ForceQuartet.Q4),
        TaskKind.DEEP: (ForceQuartet.Q1, ForceQuartet.Q2),
    }
    peaks = {1: 100, 2: 200, 3: 400, 4: 500}
    events = {}
    for task in TaskKind:
        evs, onset = [], 0

        def add(sensor, quartet):
            nonlocal onset
            evs.append(
                PressEvent(sensor, onset, onset + 200, peaks[int(quartet)], quartet)
            )
            onset += 400

        if task is TaskKind.LIVER:
            for s in (SensorId.S1, SensorId.S2, SensorId.S3, SensorId.T1, SensorId.B1):
                for _ in range(rng.randint(2, 5)):
                    add(s, ForceQuartet.Q2)
        else:
            base = rng.randint(4, 8)
            for s in (SensorId.T1, SensorId.T2, SensorId.T3):
                for _ in range(base + rng.randint(0, 1)):
                    pool = correct[task] if rng.random() > 0.3 else wrong[task]
                    add(s, rng.choice(pool))
        if rng.random() < 0.5:
            add(rng.choice((SensorId.E1, SensorId.E2, SensorId.E3)), ForceQuartet.Q1)
        events[task] = evs
    return events


def test_monotonicity_suite():
    """Injecting extra error-sensor presses into balanced sessions (all of
    which pass the wrong-use criterion before injection) never raises the
    total score."""
    with criterion_check("monotonicity (100 seeded sessions, E-injection)"):
        rng = random.Random(4096)
        strict_drops = 0
        for _ in range(100):
            events = _seeded_triplet_events(rng)
            kwargs = dict(
                participant_id="m",
                session_ids={t: t.value for t in TaskKind},
                seg_config=SegmentationConfig(),
            )
            before = assess_events(events, **kwargs)
            injected = {t: list(evs) for t, evs in events.items()}
            tasks = rng.sample(list(TaskKind), rng.randint(1, 3))
            for task in tasks:
                onset = max(e.release_ms for e in injected[task]) + 400
                for i in range(rng.randint(1, 6)):
                    sensor = rng.choice((SensorId.E1, SensorId.E2, SensorId.E3))
                    injected[task].append(
                        PressEvent(sensor, onset, onset + 200, 120, ForceQuartet.Q1)
                    )
                    onset += 400
            after = assess_events(injected, **kwargs)
            assert after.total <= before.total + TOL
            if after.total < before.total - TOL:
                strict_drops += 1
        assert strict_drops >= 30  # the suite has teeth, not just <= 30 slack


def test_safe_threshold_flags():
    with criterion_check("safe-threshold flags (2.37 N yes, 1.25 N no)"):
        table = CalibrationTable(default=[(0.0, 0.0), (600.0, 3.0)])
        session = generate_session(SimProfile.for_archetype(Archetype.TUTOR1_DEEP, 0))
        model = build_reference([(session, segment_session(session, SegmentationConfig()))])
        deep_equiv = calibrate(474, table, SensorId.T1)
        sup_equiv = calibrate(250, table, SensorId.T1)
        assert deep_equiv == pytest.approx(2.37)
        assert sup_equiv == pytest.approx(1.25)
        assert safe_threshold_check(deep_equiv, model)
        assert not safe_threshold_check(sup_equiv, model)


def test_health_metric_categories():
    with criterion_check("health metrics (BMI/WHR categories)"):
        male_large = classify_health_metrics(
            HealthMetrics(bmi=29.5, bai_percent=25.6, whr=1.01), Gender.MALE
        )
        assert male_large.bmi_category == "overweight"
        assert male_large.whr_at_risk
        female_small = classify_health_metrics(
            HealthMetrics(bmi=16.2, bai_percent=22.7, whr=0.85), Gender.FEMALE
        )
        assert female_small.bmi_category == "underweight"
        assert not female_small.whr_at_risk


def _five_minute_session():
    counts = {
        SensorId.T1: 30,
        SensorId.T2: 30,
        SensorId.T3: 30,
        SensorId.S1: 8,
        SensorId.B1: 8,
        SensorId.E1: 4,
    }
    profile = SimProfile(
        archetype=Archetype.CUSTOM,
        task=TaskKind.DEEP,
        press_counts=counts,
        quartet_targets={s: (ForceQuartet.Q3, ForceQuartet.Q4) for s in counts},
        press_ms_range=(240, 400),
        gap_ms_range=(240, 480),
        duration_s=300.0,
        seed=0,
    )
    return generate_session(profile)


def test_performance_batch_assessment():
    with criterion_check("performance: 15k-frame batch assessment < 200 ms"):
        session = _five_minute_session()
        assert len(session.frames) >= 15_000
        cfg = SegmentationConfig()
        best = float("inf")
        for _ in range(3):
            start = time.perf_counter()
            events = segment_session(session, cfg)
            stats = press_stats(events)
            contributions = sensor_contributions(stats)
            criterion_wrong_use(contributions, session.task)
            criterion_correct_use(contributions, session.task)
            criterion_force_transition(events, session.task)
            best = min(best, time.perf_counter() - start)
        print(f"  batch assessment of {len(session.frames)} frames: {best * 1e3:.1f} ms")
        assert best < 0.2


def test_performance_live_snapshot_latency(tmp_path):
    """Feed frames at 50 Hz; every snapshot must reach a subscriber within
    50 ms of the ingest call for the frame it reflects."""
    with criterion_check("performance: live frame->snapshot latency < 50 ms"):
        import threading

        hub = SessionHub(data_dir=tmp_path / "data")
        sub = hub.subscribe()
        session = generate_session(
            SimProfile.for_archetype(Archetype.IDEAL_DEEP, 13),
            session_id="lat",
            participant_id="p",
        )
        hub.open_session(session.meta)

        recv_times = {}
        stop = threading.Event()

        def reader():
            while not stop.is_set():
                msg = sub.get(timeout=0.05)
                if msg is not None and msg.kind == MSG_SNAPSHOT:
                    recv_times.setdefault(msg.payload["t_ms"], time.perf_counter())

        thread = threading.Thread(target=reader, daemon=True)
        thread.start()
        send_times = {}
        frames = session.frames[:100]
        start = time.monotonic()
        for i, frame in enumerate(frames):
            deadline = start + i * 0.02
            delay = deadline - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            send_times[frame.timestamp_ms] = time.perf_counter()
            hub.ingest("lat", encode_frame(frame))
        time.sleep(0.1)
        stop.set()
        thread.join(timeout=2)

        latencies = sorted(
            recv_times[t] - send_times[t] for t in recv_times if t in send_times
        )
        assert len(latencies) >= 10  # throttled to <= 20/s over ~2 s
        p95 = latencies[int(len(latencies) * 0.95) - 1]
        print(f"  live snapshot latency p95: {p95 * 1e3:.2f} ms over {len(latencies)} snapshots")
        assert p95 < 0.05
        # fan-out respects the snapshot throttle
        duration = frames[-1].timestamp_ms / 1000.0
        assert len(latencies) <= duration * 20 + 2
