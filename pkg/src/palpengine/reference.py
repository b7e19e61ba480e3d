"""Expert reference model and optional force calibration.

The model averages expert sessions in two levels (per-press peaks averaged
within a session, then session means averaged across sessions) so a
long-winded expert does not outweigh a terse one.  The rubric itself runs in
arb units; Newton values are advisory annotations available only when a
calibration table is supplied, since the glove's conversion curve is not
published.  Published force anchors ship with the model: index-fingertip
means of 1.25 N (superficial) and 2.37 N (deep), and a 1.65 N highest safe
threshold for a small-female patient.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .core import QUARTET_BOUND, SensorId, Session, TaskKind
from .segmentation import PressEvent

SUPERFICIAL_INDEX_TIP_N = 1.25
DEEP_INDEX_TIP_N = 2.37
SAFE_THRESHOLD_N = 1.65  # lowest deep maximum observed: small-female ceiling


class ReferenceError(Exception):
    pass


class NoExpertData(ReferenceError):
    def __init__(self, task: Optional[TaskKind]):
        self.task = task
        super().__init__(
            f"no expert sessions for task {task.value}" if task else "no expert sessions"
        )


class NoTableForSensor(ReferenceError):
    pass


Knots = List[Tuple[float, float]]


@dataclass
class CalibrationTable:
    """Piecewise-linear arb-to-Newton maps, as ordered (arb, N) knot pairs.

    ``default`` applies to any sensor without an entry in ``sensors``.
    Every knot list starts at (0, 0) and is monotone in both coordinates.
    """

    default: Optional[Knots] = None
    sensors: Dict[SensorId, Knots] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.default is not None:
            self.default = _check_knots(self.default)
        self.sensors = {s: _check_knots(k) for s, k in self.sensors.items()}

    def knots_for(self, sensor: SensorId) -> Knots:
        if sensor in self.sensors:
            return self.sensors[sensor]
        if self.default is not None:
            return self.default
        raise NoTableForSensor(f"no calibration knots for {sensor}")

    def to_dict(self) -> dict:
        d: dict = {"schema": CALIBRATION_SCHEMA}
        if self.default is not None:
            d["default"] = [list(k) for k in self.default]
        if self.sensors:
            d["sensors"] = {s.value: [list(k) for k in ks] for s, ks in self.sensors.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationTable":
        if d.get("schema") != CALIBRATION_SCHEMA:
            raise ReferenceError(f"unknown calibration schema {d.get('schema')!r}")
        return cls(
            default=[tuple(k) for k in d["default"]] if "default" in d else None,
            sensors={
                SensorId(s): [tuple(k) for k in ks]
                for s, ks in d.get("sensors", {}).items()
            },
        )


def _check_knots(knots: Sequence[Tuple[float, float]]) -> Knots:
    knots = [(float(a), float(n)) for a, n in knots]
    if len(knots) < 2:
        raise ValueError("calibration needs at least two knots")
    if knots[0] != (0.0, 0.0):
        raise ValueError("calibration must anchor at the (0, 0) knot")
    for (a0, n0), (a1, n1) in zip(knots, knots[1:]):
        if a1 <= a0:
            raise ValueError("calibration knots must strictly increase in arb")
        if n1 < n0:
            raise ValueError("calibration map must be monotone nondecreasing")
    return knots


def calibrate(raw: float, table: CalibrationTable, sensor: SensorId) -> float:
    """Convert an arb reading to Newtons by linear interpolation.

    Readings above the top knot extrapolate along the last segment.
    """
    knots = table.knots_for(sensor)
    if raw <= 0:
        return 0.0
    for (a0, n0), (a1, n1) in zip(knots, knots[1:]):
        if raw <= a1:
            return n0 + (raw - a0) * (n1 - n0) / (a1 - a0)
    a0, n0 = knots[-2]
    a1, n1 = knots[-1]
    return n1 + (raw - a1) * (n1 - n0) / (a1 - a0)


REFMODEL_SCHEMA = "palp.refmodel/1"
CALIBRATION_SCHEMA = "palp.calibration/1"


@dataclass
class ReferenceModel:
    """Averaged expert statistics backing thresholds and report context.

    mean_peak_arb feeds reports; mean_engaged_arb is the alternative
    engagement-conditioned sample mean, kept for comparison.
    """

    mean_peak_arb: Dict[TaskKind, Dict[SensorId, float]]
    mean_engaged_arb: Dict[TaskKind, Dict[SensorId, float]]
    press_count_range: Dict[TaskKind, Tuple[int, int]]
    session_counts: Dict[TaskKind, int]
    quartet_bound: int = QUARTET_BOUND
    safe_threshold_newtons: float = SAFE_THRESHOLD_N
    superficial_index_tip_newtons: float = SUPERFICIAL_INDEX_TIP_N
    deep_index_tip_newtons: float = DEEP_INDEX_TIP_N
    mean_peak_newtons: Optional[Dict[TaskKind, Dict[SensorId, float]]] = None

    def __post_init__(self) -> None:
        if self.safe_threshold_newtons > self.deep_index_tip_newtons:
            raise ValueError("safe threshold cannot exceed the deep-task mean")
        if sum(self.session_counts.values()) < 1:
            raise ValueError("reference model needs at least one session")

    def to_dict(self) -> dict:
        def bytask(m: Dict[TaskKind, Dict[SensorId, float]]) -> dict:
            return {
                t.value: {s.value: v for s, v in sensors.items()}
                for t, sensors in m.items()
            }

        d = {
            "schema": REFMODEL_SCHEMA,
            "mean_peak_arb": bytask(self.mean_peak_arb),
            "mean_engaged_arb": bytask(self.mean_engaged_arb),
            "press_count_range": {
                t.value: list(r) for t, r in self.press_count_range.items()
            },
            "session_counts": {t.value: c for t, c in self.session_counts.items()},
            "quartet_bound": self.quartet_bound,
            "safe_threshold_newtons": self.safe_threshold_newtons,
            "superficial_index_tip_newtons": self.superficial_index_tip_newtons,
            "deep_index_tip_newtons": self.deep_index_tip_newtons,
        }
        if self.mean_peak_newtons is not None:
            d["mean_peak_newtons"] = bytask(self.mean_peak_newtons)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ReferenceModel":
        if d.get("schema") != REFMODEL_SCHEMA:
            raise ReferenceError(f"unknown model schema {d.get('schema')!r}")

        def bytask(m: dict) -> Dict[TaskKind, Dict[SensorId, float]]:
            return {
                TaskKind(t): {SensorId(s): float(v) for s, v in sensors.items()}
                for t, sensors in m.items()
            }

        return cls(
            mean_peak_arb=bytask(d["mean_peak_arb"]),
            mean_engaged_arb=bytask(d["mean_engaged_arb"]),
            press_count_range={
                TaskKind(t): (int(r[0]), int(r[1]))
                for t, r in d["press_count_range"].items()
            },
            session_counts={
                TaskKind(t): int(c) for t, c in d["session_counts"].items()
            },
            quartet_bound=d.get("quartet_bound", QUARTET_BOUND),
            safe_threshold_newtons=d.get("safe_threshold_newtons", SAFE_THRESHOLD_N),
            superficial_index_tip_newtons=d.get(
                "superficial_index_tip_newtons", SUPERFICIAL_INDEX_TIP_N
            ),
            deep_index_tip_newtons=d.get("deep_index_tip_newtons", DEEP_INDEX_TIP_N),
            mean_peak_newtons=bytask(d["mean_peak_newtons"])
            if "mean_peak_newtons" in d
            else None,
        )

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", "utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ReferenceModel":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def _engaged_sample_means(
    session: Session, events: Sequence[PressEvent]
) -> Dict[SensorId, float]:
    """Per-sensor mean of raw samples inside that sensor's press windows."""
    windows: Dict[SensorId, List[Tuple[int, int]]] = {}
    for ev in events:
        windows.setdefault(ev.sensor, []).append((ev.onset_ms, ev.release_ms))
    out: Dict[SensorId, float] = {}
    for sensor, spans in windows.items():
        trace = session.sensor_trace(sensor)
        engaged = [v for t, v in trace if any(a <= t <= b for a, b in spans)]
        if engaged:
            out[sensor] = _mean(engaged)
    return out


def build_reference(
    expert_sessions: Iterable[Tuple[Session, Sequence[PressEvent]]],
    required_tasks: Optional[Sequence[TaskKind]] = None,
    calibration: Optional[CalibrationTable] = None,
    quartet_bound_cap: Optional[int] = QUARTET_BOUND,
) -> ReferenceModel:
    """Average expert (session, events) pairs into a reference model.

    Averaging is per session first, then unweighted across sessions.  The
    graded-force bound is the largest deep-task peak rounded up to the next
    50 arb units, capped at quartet_bound_cap (pass None to lift the cap).
    """
    expert_sessions = list(expert_sessions)
    if not expert_sessions:
        raise NoExpertData(None)
    by_task: Dict[TaskKind, List[Tuple[Session, Sequence[PressEvent]]]] = {}
    for session, events in expert_sessions:
        by_task.setdefault(session.task, []).append((session, events))
    for task in required_tasks or ():
        if task not in by_task:
            raise NoExpertData(task)

    mean_peak: Dict[TaskKind, Dict[SensorId, float]] = {}
    mean_peak_n: Dict[TaskKind, Dict[SensorId, float]] = {}
    mean_engaged: Dict[TaskKind, Dict[SensorId, float]] = {}
    count_range: Dict[TaskKind, Tuple[int, int]] = {}
    session_counts: Dict[TaskKind, int] = {}
    max_deep_peak = 0

    for task, pairs in by_task.items():
        session_counts[task] = len(pairs)
        peak_sessions: Dict[SensorId, List[float]] = {}
        peak_n_sessions: Dict[SensorId, List[float]] = {}
        engaged_sessions: Dict[SensorId, List[float]] = {}
        totals: List[int] = []
        for session, events in pairs:
            totals.append(len(events))
            per_sensor: Dict[SensorId, List[int]] = {}
            for ev in events:
                per_sensor.setdefault(ev.sensor, []).append(ev.peak_raw)
                if task is TaskKind.DEEP:
                    max_deep_peak = max(max_deep_peak, ev.peak_raw)
            for sensor, peaks in per_sensor.items():
                peak_sessions.setdefault(sensor, []).append(_mean(peaks))
                if calibration is not None:
                    peak_n_sessions.setdefault(sensor, []).append(
                        _mean([calibrate(p, calibration, sensor) for p in peaks])
                    )
            for sensor, value in _engaged_sample_means(session, events).items():
                engaged_sessions.setdefault(sensor, []).append(value)
        mean_peak[task] = {s: _mean(v) for s, v in peak_sessions.items()}
        mean_engaged[task] = {s: _mean(v) for s, v in engaged_sessions.items()}
        if calibration is not None:
            mean_peak_n[task] = {s: _mean(v) for s, v in peak_n_sessions.items()}
        count_range[task] = (min(totals), max(totals)) if totals else (0, 0)

    if max_deep_peak > 0:
        bound = -((-max_deep_peak) // 50) * 50  # round up to the next 50
        if quartet_bound_cap is not None:
            bound = min(bound, quartet_bound_cap)
    else:
        bound = quartet_bound_cap if quartet_bound_cap is not None else QUARTET_BOUND

    return ReferenceModel(
        mean_peak_arb=mean_peak,
        mean_engaged_arb=mean_engaged,
        press_count_range=count_range,
        session_counts=session_counts,
        quartet_bound=bound,
        mean_peak_newtons=mean_peak_n if calibration is not None else None,
    )


def safe_threshold_check(peak_newtons: float, model: ReferenceModel) -> bool:
    """True when a calibrated peak exceeds the safe threshold (inclusive ok)."""
    return peak_newtons > model.safe_threshold_newtons


def load_calibration(path: Union[str, Path]) -> CalibrationTable:
    return CalibrationTable.from_dict(json.loads(Path(path).read_text("utf-8")))


def save_calibration(table: CalibrationTable, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(table.to_dict(), indent=2) + "\n", "utf-8")
