"""Live session hub: ingestion, per-sensor state, fan-out and recording.

One writer (the frame stream) and any number of subscribers per hub.
Subscribers receive immutable messages through bounded queues; when a queue
fills up, snapshots are dropped first and other message kinds evict the
oldest queued snapshot, so press and report messages survive a slow reader.
Recorded frames never pass through these queues and are never dropped.

Corrupted frames are counted and skipped, never fatal: a training session
must survive radio glitches.  Session start and stop are explicit commands,
mirroring the verbal start/stop protocol used at the bedside.
"""

from __future__ import annotations

import json
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional

from .assessment import (
    AssessmentConfig,
    AssessmentError,
    CompetencyReport,
    assess_events,
)
from .core import (
    ALL_SENSORS,
    QUARTET_BOUND,
    FeedbackColor,
    ForceQuartet,
    SensorFrame,
    SensorId,
    SessionMeta,
    Session,
    TaskKind,
    classify_force_level,
    quartet_to_color,
)
from .reference import CalibrationTable, ReferenceModel, calibrate, safe_threshold_check
from .segmentation import PressEvent, SegmentationConfig, StreamSegmenter
from .wire import SESSION_EXT, FrameStreamDecoder, write_session

MSG_SNAPSHOT = "snapshot"
MSG_PRESS_COMPLETED = "press_completed"
MSG_TASK_STARTED = "task_started"
MSG_TASK_FINALIZED = "task_finalized"
MSG_REPORT = "report"


class ServiceError(Exception):
    pass


class DuplicateSession(ServiceError):
    pass


class UnknownSession(ServiceError):
    pass


class SessionFinalized(ServiceError):
    pass


@dataclass(frozen=True)
class FeedbackMessage:
    kind: str
    session_id: str
    payload: dict

    def to_dict(self) -> dict:
        return {"kind": self.kind, "session_id": self.session_id, **self.payload}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class Subscription:
    """Bounded message queue with the snapshot-first drop policy."""

    def __init__(self, maxsize: int = 256):
        self.maxsize = maxsize
        self._items: deque = deque()
        self._cond = threading.Condition()
        self.dropped_snapshots = 0

    def put(self, msg: FeedbackMessage) -> None:
        with self._cond:
            if len(self._items) >= self.maxsize:
                if msg.kind == MSG_SNAPSHOT:
                    self.dropped_snapshots += 1
                    return
                for i, queued in enumerate(self._items):
                    if queued.kind == MSG_SNAPSHOT:
                        del self._items[i]
                        self.dropped_snapshots += 1
                        break
                else:
                    self._items.popleft()
            self._items.append(msg)
            self._cond.notify()

    def get(self, timeout: Optional[float] = None) -> Optional[FeedbackMessage]:
        with self._cond:
            if not self._items:
                self._cond.wait(timeout)
            if not self._items:
                return None
            return self._items.popleft()

    def drain(self) -> List[FeedbackMessage]:
        with self._cond:
            items = list(self._items)
            self._items.clear()
            return items


@dataclass
class _SensorState:
    raw: int = 0
    quartet: ForceQuartet = ForceQuartet.Q1
    color: FeedbackColor = FeedbackColor.GREEN
    press_count: int = 0
    last_peak: int = 0


class LiveSession:
    """Mutable state for one open session; owned by the hub."""

    def __init__(
        self,
        meta: SessionMeta,
        seg_config: SegmentationConfig,
        quartet_bound: int,
    ):
        self.meta = meta
        self.decoder = FrameStreamDecoder()
        self.segmenters = {
            s: StreamSegmenter(s, seg_config, quartet_bound) for s in ALL_SENSORS
        }
        self.sensors: Dict[SensorId, _SensorState] = {
            s: _SensorState() for s in ALL_SENSORS
        }
        self.frames: List[SensorFrame] = []
        self.events: List[PressEvent] = []
        self.clock_ms = 0
        self.order_errors = 0
        self.finalized = False
        self.stored_path: Optional[Path] = None

    def snapshot_payload(self) -> dict:
        return {
            "t_ms": self.clock_ms,
            "task": self.meta.task.value,
            "press_total": len(self.events),
            "sensors": {
                s.value: {
                    "raw": st.raw,
                    "quartet": st.quartet.name,
                    "color": st.color.name.lower(),
                    "press_count": st.press_count,
                    "last_peak": st.last_peak,
                }
                for s, st in self.sensors.items()
            },
        }

    def state_summary(self) -> dict:
        return {
            "session_id": self.meta.session_id,
            "participant_id": self.meta.participant_id,
            "task": self.meta.task.value,
            "cohort": self.meta.cohort.value,
            "frames": len(self.frames),
            "press_total": len(self.events),
            "codec_errors": self.decoder.stats.errors,
            "finalized": self.finalized,
        }


class SessionHub:
    """Coordinates open sessions, live feedback fan-out and finalization."""

    def __init__(
        self,
        data_dir: Path = Path("palp-data"),
        seg_config: SegmentationConfig = SegmentationConfig(),
        assess_config: AssessmentConfig = AssessmentConfig(),
        quartet_bound: int = QUARTET_BOUND,
        reference: Optional[ReferenceModel] = None,
        calibration: Optional[CalibrationTable] = None,
        snapshot_hz: float = 20.0,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.data_dir = Path(data_dir)
        self.seg_config = seg_config
        self.assess_config = assess_config
        self.quartet_bound = quartet_bound
        self.reference = reference
        self.calibration = calibration
        self._snapshot_period = 1.0 / snapshot_hz if snapshot_hz > 0 else 0.0
        self._clock = clock
        self._sessions: Dict[str, LiveSession] = {}
        self._reports: Dict[str, CompetencyReport] = {}
        self._next_snapshot: Dict[str, float] = {}
        self._subs: List[Subscription] = []
        self._lock = threading.RLock()

    # -- subscriptions ----------------------------------------------------

    def subscribe(self, maxsize: int = 256) -> Subscription:
        sub = Subscription(maxsize)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)

    def _broadcast(self, msg: FeedbackMessage) -> None:
        for sub in list(self._subs):
            sub.put(msg)

    # -- session lifecycle -------------------------------------------------

    def open_session(self, meta: SessionMeta) -> str:
        with self._lock:
            if meta.session_id in self._sessions:
                raise DuplicateSession(f"session {meta.session_id} already open")
            self._sessions[meta.session_id] = LiveSession(
                meta, self.seg_config, self.quartet_bound
            )
            self._next_snapshot[meta.session_id] = self._clock()
        self._broadcast(
            FeedbackMessage(
                MSG_TASK_STARTED,
                meta.session_id,
                {"task": meta.task.value, "participant_id": meta.participant_id},
            )
        )
        return meta.session_id

    def _get(self, session_id: str) -> LiveSession:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSession(f"no open session {session_id}") from None

    def ingest(self, session_id: str, data: bytes) -> int:
        """Feed raw wire bytes; returns the number of frames accepted."""
        with self._lock:
            live = self._get(session_id)
            if live.finalized:
                raise SessionFinalized(f"session {session_id} is finalized")
            frames = live.decoder.feed(data)
            accepted = 0
            for frame in frames:
                if live.frames and frame.timestamp_ms <= live.frames[-1].timestamp_ms:
                    live.order_errors += 1
                    continue
                accepted += 1
                live.frames.append(frame)
                live.clock_ms = frame.timestamp_ms
                for idx, sensor in enumerate(ALL_SENSORS):
                    raw = frame.force_raw[idx]
                    st = live.sensors[sensor]
                    st.raw = raw
                    st.quartet = classify_force_level(raw, self.quartet_bound)
                    st.color = quartet_to_color(st.quartet)
                    completed = live.segmenters[sensor].push(frame.timestamp_ms, raw)
                    for ev in completed:
                        self._press_completed(live, ev)
            if accepted and self._clock() >= self._next_snapshot[session_id]:
                self._next_snapshot[session_id] = self._clock() + self._snapshot_period
                self._broadcast(
                    FeedbackMessage(MSG_SNAPSHOT, session_id, live.snapshot_payload())
                )
            return accepted

    def _press_completed(self, live: LiveSession, ev: PressEvent) -> None:
        live.events.append(ev)
        st = live.sensors[ev.sensor]
        st.press_count += 1
        st.last_peak = ev.peak_raw
        payload = dict(ev.to_dict())
        if self.calibration is not None:
            newtons = calibrate(ev.peak_raw, self.calibration, ev.sensor)
            payload["peak_newtons"] = round(newtons, 3)
            if self.reference is not None:
                payload["exceeds_safe_threshold"] = safe_threshold_check(
                    newtons, self.reference
                )
        self._broadcast(
            FeedbackMessage(MSG_PRESS_COMPLETED, live.meta.session_id, payload)
        )

    def finalize_task(self, session_id: str) -> Path:
        """Close segmentation, persist the recording, keep events for scoring."""
        with self._lock:
            live = self._get(session_id)
            if live.finalized:
                raise SessionFinalized(f"session {session_id} already finalized")
            for sensor in ALL_SENSORS:
                for ev in live.segmenters[sensor].finalize():
                    self._press_completed(live, ev)
            live.events.sort(key=lambda ev: (ev.onset_ms, ev.sensor.value))
            live.finalized = True
            self.data_dir.mkdir(parents=True, exist_ok=True)
            safe_id = session_id.replace("/", "_")
            path = self.data_dir / f"{safe_id}{SESSION_EXT}"
            write_session(Session(meta=live.meta, frames=live.frames), path)
            live.stored_path = path
        self._broadcast(
            FeedbackMessage(
                MSG_TASK_FINALIZED,
                session_id,
                {
                    "task": live.meta.task.value,
                    "press_total": len(live.events),
                    "frames": len(live.frames),
                    "codec_errors": live.decoder.stats.errors,
                    "stored": str(path),
                },
            )
        )
        return path

    def finalize_participant(
        self,
        participant_id: str,
        session_ids: Optional[List[str]] = None,
    ) -> CompetencyReport:
        """Score the participant's three finalized tasks and broadcast it."""
        with self._lock:
            if session_ids is None:
                candidates = [
                    s
                    for s in self._sessions.values()
                    if s.meta.participant_id == participant_id and s.finalized
                ]
            else:
                candidates = [self._get(sid) for sid in session_ids]
            events_by_task: Dict[TaskKind, List[PressEvent]] = {}
            ids_by_task: Dict[TaskKind, str] = {}
            codec_errors = 0
            for live in candidates:
                if not live.finalized:
                    raise ServiceError(
                        f"session {live.meta.session_id} is not finalized"
                    )
                if live.meta.task in events_by_task:
                    raise ServiceError(
                        f"two finalized sessions for task {live.meta.task.value}"
                    )
                events_by_task[live.meta.task] = live.events
                ids_by_task[live.meta.task] = live.meta.session_id
                codec_errors += live.decoder.stats.errors
            try:
                report = assess_events(
                    events_by_task,
                    participant_id=participant_id,
                    session_ids=ids_by_task,
                    seg_config=self.seg_config,
                    assess_config=self.assess_config,
                    quartet_bound=self.quartet_bound,
                    codec_errors=codec_errors,
                )
            except AssessmentError as e:
                self._broadcast(
                    FeedbackMessage(
                        MSG_REPORT, "", {"participant_id": participant_id, "error": str(e)}
                    )
                )
                raise
            self._reports[participant_id] = report
            self.data_dir.mkdir(parents=True, exist_ok=True)
            report_path = self.data_dir / f"report-{participant_id}.json"
            report_path.write_text(
                json.dumps(report.to_dict(), indent=2) + "\n", "utf-8"
            )
        self._broadcast(FeedbackMessage(MSG_REPORT, "", report.to_dict()))
        return report

    # -- queries -----------------------------------------------------------

    def session_state(self, session_id: str) -> dict:
        with self._lock:
            live = self._get(session_id)
            return {**live.state_summary(), "snapshot": live.snapshot_payload()}

    def list_sessions(self) -> List[dict]:
        with self._lock:
            return [live.state_summary() for live in self._sessions.values()]

    def get_report(self, participant_id: str) -> CompetencyReport:
        with self._lock:
            try:
                return self._reports[participant_id]
            except KeyError:
                raise ServiceError(f"no report for {participant_id}") from None
