"""Deterministic synthetic session generator and paced wire-frame streamer.

Presses are half-sine envelopes scheduled on the 20 ms sample grid with the
apex always on a sample, so the detected peak equals the scheduled peak and
quartet targeting is exact.  Durations and gaps stay far enough from the
segmentation defaults that every scheduled press is detected as exactly one
event: counts and quartets are known by construction, which makes generated
sessions usable as ground truth in tests.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Dict, Optional, Tuple

from .core import (
    Cohort,
    ForceQuartet,
    SensorFrame,
    SensorId,
    Session,
    SessionMeta,
    TaskKind,
    ALL_SENSORS,
)
from .wire import encode_frame

SAMPLE_RATE_HZ = 50.0
SAMPLE_MS = 20

# Peak placement bands per target quartet, kept inside the nominal
# [0,150/300/450/600) bins with margin so rounding never crosses a boundary.
_QUARTET_PEAK_BANDS = {
    ForceQuartet.Q1: (70, 140),
    ForceQuartet.Q2: (160, 290),
    ForceQuartet.Q3: (310, 440),
    ForceQuartet.Q4: (460, 590),
}


class SimulatorError(Exception):
    pass


class InfeasibleProfile(SimulatorError):
    pass


class Archetype(str, Enum):
    IDEAL_SUPERFICIAL = "ideal-superficial"
    IDEAL_DEEP = "ideal-deep"
    IDEAL_LIVER = "ideal-liver"
    TUTOR1_DEEP = "tutor1-deep"
    TUTOR2_DEEP = "tutor2-deep"
    TUTOR3_DEEP = "tutor3-deep"
    TUTOR4_DEEP = "tutor4-deep"
    ERROR_HEAVY = "error-heavy"
    CUSTOM = "custom"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SimProfile:
    """Fully determines a synthetic session together with the seed."""

    archetype: Archetype
    task: TaskKind
    press_counts: Dict[SensorId, int]
    quartet_targets: Dict[SensorId, Tuple[ForceQuartet, ...]]
    press_ms_range: Tuple[int, int] = (240, 400)
    gap_ms_range: Tuple[int, int] = (240, 480)
    duration_s: Optional[float] = None  # None = auto-size to fit the schedule
    seed: int = 0
    cohort: Cohort = Cohort.EXPERT

    @classmethod
    def for_archetype(cls, archetype: Archetype, seed: int = 0) -> "SimProfile":
        if archetype is Archetype.CUSTOM:
            raise SimulatorError("custom profiles must be built explicitly")
        return replace(_PROFILE_TABLE[archetype], seed=seed)


def _tips(n: int, targets: Tuple[ForceQuartet, ...]) -> dict:
    return {
        "press_counts": {SensorId.T1: n, SensorId.T2: n, SensorId.T3: n},
        "quartet_targets": {
            SensorId.T1: targets,
            SensorId.T2: targets,
            SensorId.T3: targets,
        },
    }


_PROFILE_TABLE: Dict[Archetype, SimProfile] = {
    Archetype.IDEAL_SUPERFICIAL: SimProfile(
        archetype=Archetype.IDEAL_SUPERFICIAL,
        task=TaskKind.SUPERFICIAL,
        **_tips(6, (ForceQuartet.Q1, ForceQuartet.Q2)),
    ),
    Archetype.IDEAL_DEEP: SimProfile(
        archetype=Archetype.IDEAL_DEEP,
        task=TaskKind.DEEP,
        **_tips(6, (ForceQuartet.Q3, ForceQuartet.Q4)),
    ),
    Archetype.IDEAL_LIVER: SimProfile(
        archetype=Archetype.IDEAL_LIVER,
        task=TaskKind.LIVER,
        press_counts={
            SensorId.S1: 4,
            SensorId.S2: 4,
            SensorId.S3: 4,
            SensorId.T1: 4,
            SensorId.B1: 4,
        },
        quartet_targets={
            s: (ForceQuartet.Q2,)
            for s in (SensorId.S1, SensorId.S2, SensorId.S3, SensorId.T1, SensorId.B1)
        },
    ),
    # Four expert styles for the deep task: few long hard presses; many
    # moderate, evenly forced presses; a brisk middle ground; and the light
    # touch of a specialist pressing close to superficial levels.
    Archetype.TUTOR1_DEEP: SimProfile(
        archetype=Archetype.TUTOR1_DEEP,
        task=TaskKind.DEEP,
        press_counts={SensorId.T1: 6},
        quartet_targets={SensorId.T1: (ForceQuartet.Q4,)},
        press_ms_range=(800, 1200),
        gap_ms_range=(400, 700),
    ),
    Archetype.TUTOR2_DEEP: SimProfile(
        archetype=Archetype.TUTOR2_DEEP,
        task=TaskKind.DEEP,
        press_counts={SensorId.T1: 21},
        quartet_targets={SensorId.T1: (ForceQuartet.Q3,)},
        press_ms_range=(280, 400),
        gap_ms_range=(240, 360),
    ),
    Archetype.TUTOR3_DEEP: SimProfile(
        archetype=Archetype.TUTOR3_DEEP,
        task=TaskKind.DEEP,
        press_counts={SensorId.T1: 12},
        quartet_targets={SensorId.T1: (ForceQuartet.Q3, ForceQuartet.Q4)},
        press_ms_range=(240, 320),
        gap_ms_range=(240, 360),
    ),
    Archetype.TUTOR4_DEEP: SimProfile(
        archetype=Archetype.TUTOR4_DEEP,
        task=TaskKind.DEEP,
        press_counts={SensorId.T1: 10},
        quartet_targets={SensorId.T1: (ForceQuartet.Q2,)},
        press_ms_range=(240, 320),
        gap_ms_range=(240, 360),
    ),
    Archetype.ERROR_HEAVY: SimProfile(
        archetype=Archetype.ERROR_HEAVY,
        task=TaskKind.SUPERFICIAL,
        press_counts={
            SensorId.T1: 2,
            SensorId.T2: 2,
            SensorId.T3: 2,
            SensorId.E1: 3,
            SensorId.E2: 2,
            SensorId.E3: 1,
        },
        quartet_targets={
            s: (ForceQuartet.Q1, ForceQuartet.Q2)
            for s in (
                SensorId.T1,
                SensorId.T2,
                SensorId.T3,
                SensorId.E1,
                SensorId.E2,
                SensorId.E3,
            )
        },
        cohort=Cohort.CT,
    ),
}


def _grid(rng: random.Random, lo: int, hi: int, step: int) -> int:
    """Uniform value in [lo, hi] snapped to the given grid step."""
    return rng.randrange(lo // step, hi // step + 1) * step


@dataclass(frozen=True)
class _Press:
    start_ms: int
    duration_ms: int
    peak: int


def _schedule(
    profile: SimProfile, rng: random.Random
) -> Tuple[Dict[SensorId, list], int]:
    """Lay out presses per sensor; returns schedules and total length in ms."""
    schedules: Dict[SensorId, list] = {}
    end_ms = 0
    for sensor in ALL_SENSORS:
        count = profile.press_counts.get(sensor, 0)
        if count == 0:
            continue
        targets = profile.quartet_targets.get(sensor, (ForceQuartet.Q2,))
        t = _grid(rng, 0, 600, SAMPLE_MS)
        presses = []
        for i in range(count):
            # duration on a 40 ms grid keeps the half-sine apex on a sample
            dur = _grid(rng, *profile.press_ms_range, 40)
            band = _QUARTET_PEAK_BANDS[targets[i % len(targets)]]
            peak = rng.randint(*band)
            presses.append(_Press(start_ms=t, duration_ms=dur, peak=peak))
            t += dur + _grid(rng, *profile.gap_ms_range, SAMPLE_MS)
        schedules[sensor] = presses
        end_ms = max(end_ms, presses[-1].start_ms + presses[-1].duration_ms)
    total_ms = end_ms + 500  # quiet tail so the last release is observed
    if profile.duration_s is not None:
        wanted = int(profile.duration_s * 1000)
        if total_ms > wanted:
            raise InfeasibleProfile(
                f"schedule needs {total_ms} ms but profile allows {wanted} ms"
            )
        total_ms = wanted
    return schedules, total_ms


def generate_session(
    profile: SimProfile,
    task: Optional[TaskKind] = None,
    seed: Optional[int] = None,
    session_id: Optional[str] = None,
    participant_id: str = "sim",
) -> Session:
    """Render a profile into frames; identical inputs yield identical output."""
    task = task or profile.task
    seed = profile.seed if seed is None else seed
    rng = random.Random(seed)
    schedules, total_ms = _schedule(profile, rng)

    n_samples = total_ms // SAMPLE_MS + 1
    channels = {s: [0] * n_samples for s in ALL_SENSORS}
    for sensor, presses in schedules.items():
        values = channels[sensor]
        for press in presses:
            steps = press.duration_ms // SAMPLE_MS
            for j in range(steps + 1):
                idx = press.start_ms // SAMPLE_MS + j
                if idx < n_samples:
                    level = round(press.peak * math.sin(math.pi * j / steps))
                    values[idx] = max(values[idx], level)

    # slow wrist wobble inside the range-of-motion box, quantized to the
    # wire's centidegree resolution
    frames = []
    for i in range(n_samples):
        t = i * SAMPLE_MS
        pitch = round(12.0 * math.sin(2 * math.pi * t / 8000.0), 2)
        yaw = round(5.0 * math.sin(2 * math.pi * t / 6400.0), 2)
        roll = round(8.0 * math.sin(2 * math.pi * t / 11200.0), 2)
        frames.append(
            SensorFrame(
                seq=i,
                timestamp_ms=t,
                force_raw=tuple(channels[s][i] for s in ALL_SENSORS),
                orientation=(roll, pitch, yaw),
            )
        )

    meta = SessionMeta(
        session_id=session_id or f"{profile.archetype.value}-s{seed}",
        participant_id=participant_id,
        cohort=profile.cohort,
        task=task,
        patient_ref="sim-patient",
        sample_rate_hz=SAMPLE_RATE_HZ,
    )
    return Session(meta=meta, frames=frames)


def stream_session(
    session: Session,
    speed_factor: float,
    sink: Callable[[bytes], None],
) -> int:
    """Emit encoded wire frames paced by frame timestamps times speed_factor.

    A factor of 1.0 replays in real time, 0 streams as fast as possible
    (factor 0.5 plays back at double speed).  Pacing uses absolute deadlines
    so the total duration does not drift.  Returns the frame count.
    """
    if not session.frames:
        return 0
    t0 = session.frames[0].timestamp_ms
    start = time.monotonic()
    count = 0
    for frame in session.frames:
        if speed_factor > 0:
            deadline = start + (frame.timestamp_ms - t0) / 1000.0 * speed_factor
            delay = deadline - time.monotonic()
            if delay > 0:
                time.sleep(delay)
        sink(encode_frame(frame))
        count += 1
    return count
