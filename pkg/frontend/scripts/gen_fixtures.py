"""Regenerate the frontend test fixtures from the engine.

Run from the repo root with the palpengine package installed:

    python3 frontend/scripts/gen_fixtures.py

Outputs under frontend/tests/fixtures/:
  wire_frames.json   frames plus their exact wire encoding (hex) for
                     byte-for-byte checks of the TS encoder
  reports.json       20 engine-produced competency reports of varied shape
  session_deep.json / session_liver.json
                     frame lists the closed-loop test feeds through the TS
                     encoder into a live engine
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from palpengine.assessment import AssessmentConfig, assess
from palpengine.core import ForceQuartet, SensorFrame, SensorId, TaskKind
from palpengine.simulator import Archetype, SimProfile, generate_session
from palpengine.wire import encode_frame

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def frame_doc(frame: SensorFrame) -> dict:
    return {
        "seq": frame.seq,
        "t_ms": frame.timestamp_ms,
        "f": list(frame.force_raw),
        "rpy": list(frame.orientation),
        "flags": frame.flags,
    }


def wire_fixtures() -> list:
    rng = random.Random(123)
    frames = [
        SensorFrame(seq=0, timestamp_ms=0, force_raw=(0,) * 12),
        SensorFrame(
            seq=0xFFFF,
            timestamp_ms=0xFFFFFFFF,
            force_raw=(1023,) * 12,
            orientation=(-180.0, 78.0, -28.0),
            flags=0xFF,
        ),
        SensorFrame(
            seq=7,
            timestamp_ms=140,
            force_raw=(0, 150, 299, 300, 449, 450, 599, 600, 601, 1023, 40, 25),
            orientation=(1.25, -4.5, 3.07),
            flags=2,
        ),
    ]
    for _ in range(9):
        frames.append(
            SensorFrame(
                seq=rng.randrange(0x10000),
                timestamp_ms=rng.randrange(2**32),
                force_raw=tuple(rng.randrange(1024) for _ in range(12)),
                orientation=tuple(rng.randrange(-32768, 32768) / 100.0 for _ in range(3)),
                flags=rng.randrange(256),
            )
        )
    return [
        {"frame": frame_doc(f), "hex": encode_frame(f).hex()} for f in frames
    ]


def _triplet(sup_arch, deep_arch, liver_arch, seed):
    return [
        generate_session(SimProfile.for_archetype(sup_arch, seed)),
        generate_session(SimProfile.for_archetype(deep_arch, seed + 1)),
        generate_session(SimProfile.for_archetype(liver_arch, seed + 2)),
    ]


def _unfocused_liver(seed):
    return generate_session(
        SimProfile(
            archetype=Archetype.CUSTOM,
            task=TaskKind.LIVER,
            press_counts={SensorId.T2: 4, SensorId.T3: 4},
            quartet_targets={
                SensorId.T2: (ForceQuartet.Q2,),
                SensorId.T3: (ForceQuartet.Q2,),
            },
            seed=seed,
        )
    )


def report_fixtures() -> list:
    reports = []
    for seed in range(6):  # clean full-marks triplets
        reports.append(
            assess(
                _triplet(
                    Archetype.IDEAL_SUPERFICIAL,
                    Archetype.IDEAL_DEEP,
                    Archetype.IDEAL_LIVER,
                    seed * 10,
                )
            )
        )
    for seed in range(4):  # thenar-heavy novices
        reports.append(
            assess(
                _triplet(
                    Archetype.ERROR_HEAVY, Archetype.IDEAL_DEEP, Archetype.IDEAL_LIVER, seed
                )
            )
        )
    for arch in (
        Archetype.TUTOR1_DEEP,
        Archetype.TUTOR2_DEEP,
        Archetype.TUTOR3_DEEP,
        Archetype.TUTOR4_DEEP,
    ):  # single-finger expert styles fail fingertip balance
        reports.append(
            assess(_triplet(Archetype.IDEAL_SUPERFICIAL, arch, Archetype.IDEAL_LIVER, 3))
        )
    for seed in range(3):  # liver sessions that miss the focus set entirely
        sup, deep, _ = _triplet(
            Archetype.IDEAL_SUPERFICIAL, Archetype.IDEAL_DEEP, Archetype.IDEAL_LIVER, seed
        )
        reports.append(assess([sup, deep, _unfocused_liver(seed)]))
    for slope in (0.5, 2.0, 3.0):  # recalibrated penalty slopes
        reports.append(
            assess(
                _triplet(Archetype.ERROR_HEAVY, Archetype.IDEAL_DEEP, Archetype.IDEAL_LIVER, 7),
                assess_config=AssessmentConfig(penalty_slope=slope),
            )
        )
    assert len(reports) == 20
    return [r.to_dict() for r in reports]


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "wire_frames.json").write_text(
        json.dumps(wire_fixtures(), indent=1) + "\n"
    )
    (OUT / "reports.json").write_text(json.dumps(report_fixtures(), indent=1) + "\n")
    deep = generate_session(SimProfile.for_archetype(Archetype.IDEAL_DEEP, 50))
    liver = generate_session(SimProfile.for_archetype(Archetype.IDEAL_LIVER, 51))
    (OUT / "session_deep.json").write_text(
        json.dumps([frame_doc(f) for f in deep.frames]) + "\n"
    )
    (OUT / "session_liver.json").write_text(
        json.dumps([frame_doc(f) for f in liver.frames]) + "\n"
    )
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
