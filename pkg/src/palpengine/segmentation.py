"""Press-release event segmentation for per-sensor force traces.

Pipeline per sensor: median prefilter (edge-replicated, centered window),
two-threshold hysteresis (enter at onset_threshold, leave below
release_threshold), merge events separated by less than min_gap_ms, then
drop events shorter than min_press_ms.  Event peaks are taken from the raw,
unfiltered samples over the closed [onset, release] interval, so the highest
recorded pressure per press is reported verbatim.

Two implementations share the exact same rules: ``segment_presses`` for
stored traces (vectorized) and ``StreamSegmenter`` for the live path.  A
finalized stream must emit byte-for-byte the events the batch path finds.
"""

from __future__ import annotations

import statistics
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    ALL_SENSORS,
    QUARTET_BOUND,
    ForceQuartet,
    SensorId,
    classify_force_level,
)


class SegmentationError(Exception):
    pass


class EmptyTrace(SegmentationError):
    pass


class NonMonotonicTimestamps(SegmentationError):
    pass


class OutOfOrderSample(SegmentationError):
    pass


@dataclass(frozen=True)
class SegmentationConfig:
    """Detector tuning; defaults sit well above resistive-sensor noise."""

    onset_threshold: float = 40.0
    release_threshold: float = 25.0
    min_press_ms: float = 100.0
    min_gap_ms: float = 50.0
    median_window: int = 5

    def __post_init__(self) -> None:
        if self.release_threshold >= self.onset_threshold:
            raise ValueError("release_threshold must be < onset_threshold")
        if self.min_press_ms <= 0:
            raise ValueError("min_press_ms must be > 0")
        if self.min_gap_ms < 0:
            raise ValueError("min_gap_ms must be >= 0")
        if self.median_window < 1 or self.median_window % 2 == 0:
            raise ValueError("median_window must be odd and >= 1")

    def to_dict(self) -> dict:
        return {
            "onset_threshold": self.onset_threshold,
            "release_threshold": self.release_threshold,
            "min_press_ms": self.min_press_ms,
            "min_gap_ms": self.min_gap_ms,
            "median_window": self.median_window,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SegmentationConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass(frozen=True)
class PressEvent:
    """One contiguous press-release action on one sensor."""

    sensor: SensorId
    onset_ms: int
    release_ms: int
    peak_raw: int
    peak_quartet: ForceQuartet

    @property
    def duration_ms(self) -> int:
        return self.release_ms - self.onset_ms

    def to_dict(self) -> dict:
        return {
            "sensor": self.sensor.value,
            "onset_ms": self.onset_ms,
            "release_ms": self.release_ms,
            "peak_raw": self.peak_raw,
            "peak_quartet": self.peak_quartet.name,
            "duration_ms": self.duration_ms,
        }


@dataclass
class PressStats:
    """Per-sensor press counts, peaks and durations for one session."""

    counts: Dict[SensorId, int]
    peaks: Dict[SensorId, List[int]]
    durations_ms: Dict[SensorId, List[int]]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def press_stats(events: Iterable[PressEvent]) -> PressStats:
    """Aggregate events per sensor; sensors without events report 0."""
    counts = {s: 0 for s in ALL_SENSORS}
    peaks: Dict[SensorId, List[int]] = {s: [] for s in ALL_SENSORS}
    durations: Dict[SensorId, List[int]] = {s: [] for s in ALL_SENSORS}
    for ev in events:
        counts[ev.sensor] += 1
        peaks[ev.sensor].append(ev.peak_raw)
        durations[ev.sensor].append(ev.duration_ms)
    return PressStats(counts=counts, peaks=peaks, durations_ms=durations)


def _dedupe(samples: Sequence[Tuple[float, float]]) -> List[Tuple[float, float]]:
    """Collapse runs of equal timestamps, keeping the latest sample."""
    out: List[Tuple[float, float]] = []
    for t, v in samples:
        if out and out[-1][0] == t:
            out[-1] = (t, v)
        else:
            out.append((t, v))
    return out


def _median_filter(values: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return values
    k = window // 2
    padded = np.pad(values, k, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, window)
    return np.median(windows, axis=1)


def _raw_intervals(
    filtered: np.ndarray, cfg: SegmentationConfig
) -> List[Tuple[int, int]]:
    """Hysteresis pass: (onset_idx, release_idx) pairs, release inclusive.

    The release index is the first sample below release_threshold after the
    onset; a press still open at the end of the trace closes on the last
    sample.
    """
    on_idx = np.flatnonzero(filtered >= cfg.onset_threshold)
    off_idx = np.flatnonzero(filtered < cfg.release_threshold)
    intervals: List[Tuple[int, int]] = []
    n = len(filtered)
    pos = 0
    while True:
        j = np.searchsorted(on_idx, pos)
        if j == len(on_idx):
            break
        onset = int(on_idx[j])
        m = np.searchsorted(off_idx, onset + 1)
        if m == len(off_idx):
            intervals.append((onset, n - 1))
            break
        release = int(off_idx[m])
        intervals.append((onset, release))
        pos = release + 1
    return intervals


def segment_presses(
    samples: Sequence[Tuple[float, float]],
    cfg: SegmentationConfig,
    sensor: SensorId,
    quartet_bound: int = QUARTET_BOUND,
) -> List[PressEvent]:
    """Segment one sensor's (timestamp_ms, raw) trace into press events."""
    if len(samples) == 0:
        raise EmptyTrace(f"no samples for {sensor}")
    samples = _dedupe(samples)
    times = np.asarray([t for t, _ in samples], dtype=np.int64)
    raw = np.asarray([v for _, v in samples], dtype=np.float64)
    if np.any(np.diff(times) <= 0):
        raise NonMonotonicTimestamps(f"timestamps not increasing for {sensor}")

    filtered = _median_filter(raw, cfg.median_window)
    intervals = _raw_intervals(filtered, cfg)

    # merge across short gaps, then enforce the minimum press duration
    merged: List[Tuple[int, int]] = []
    for onset, release in intervals:
        if merged and times[onset] - times[merged[-1][1]] < cfg.min_gap_ms:
            merged[-1] = (merged[-1][0], release)
        else:
            merged.append((onset, release))

    events: List[PressEvent] = []
    for onset, release in merged:
        if times[release] - times[onset] < cfg.min_press_ms:
            continue
        peak = int(np.max(raw[onset : release + 1]))
        events.append(
            PressEvent(
                sensor=sensor,
                onset_ms=int(times[onset]),
                release_ms=int(times[release]),
                peak_raw=peak,
                peak_quartet=classify_force_level(peak, quartet_bound),
            )
        )
    return events


class StreamSegmenter:
    """Incremental per-sensor segmenter for the live feedback path.

    push() accepts samples in strictly increasing timestamp order and emits
    press events as soon as the merge window rules them final; finalize()
    flushes the filter tail and closes any press still in progress at the
    last timestamp.  The emitted events equal segment_presses on the full
    trace.
    """

    def __init__(
        self,
        sensor: SensorId,
        cfg: Optional[SegmentationConfig] = None,
        quartet_bound: int = QUARTET_BOUND,
    ) -> None:
        self.sensor = sensor
        self.cfg = cfg or SegmentationConfig()
        self.quartet_bound = quartet_bound
        self._k = self.cfg.median_window // 2
        self._values: deque = deque(maxlen=self.cfg.median_window)
        self._lag: deque = deque()  # (t, raw) not yet consumed by the automaton
        self._count = 0
        self._first_value: Optional[float] = None
        self._last_t: Optional[float] = None
        # automaton state
        self._in_press = False
        self._onset_ms = 0
        self._peak = 0.0
        self._pending: Optional[Tuple[float, float, float]] = None  # onset, release, peak
        self._gap_max = 0.0
        self._finalized = False

    def push(self, t_ms: float, raw: float) -> List[PressEvent]:
        if self._finalized:
            raise SegmentationError("segmenter already finalized")
        if self._last_t is not None and t_ms <= self._last_t:
            raise OutOfOrderSample(
                f"{self.sensor}: sample at {t_ms} after {self._last_t}"
            )
        self._last_t = t_ms
        if self._first_value is None:
            self._first_value = raw
        self._values.append(raw)
        self._lag.append((t_ms, raw))
        self._count += 1
        out: List[PressEvent] = []
        # sample i becomes filterable once sample i+k has arrived
        if self._count > self._k:
            t_i, raw_i = self._lag.popleft()
            out.extend(self._step(t_i, self._filtered_at_tail(), raw_i))
        return out

    def _filtered_at_tail(self) -> float:
        """Median for the oldest lagged sample, replicating the left edge."""
        window = list(self._values)
        missing = self.cfg.median_window - len(window)
        if missing > 0:
            window = [self._first_value] * missing + window
        return statistics.median(window)

    def _step(self, t: float, filt: float, raw: float) -> List[PressEvent]:
        out: List[PressEvent] = []
        cfg = self.cfg
        if self._in_press:
            self._peak = max(self._peak, raw)
            if filt < cfg.release_threshold:
                self._in_press = False
                self._pending = (self._onset_ms, t, self._peak)
                self._gap_max = raw
        elif filt >= cfg.onset_threshold:
            if self._pending is not None and t - self._pending[1] < cfg.min_gap_ms:
                # short gap: the new press continues the pending event
                self._onset_ms = self._pending[0]
                self._peak = max(self._pending[2], self._gap_max, raw)
                self._pending = None
            else:
                ev = self._flush_pending()
                if ev is not None:
                    out.append(ev)
                self._onset_ms = t
                self._peak = raw
            self._in_press = True
        elif self._pending is not None:
            if t - self._pending[1] >= cfg.min_gap_ms:
                ev = self._flush_pending()
                if ev is not None:
                    out.append(ev)
            else:
                self._gap_max = max(self._gap_max, raw)
        return out

    def _flush_pending(self) -> Optional[PressEvent]:
        if self._pending is None:
            return None
        onset, release, peak = self._pending
        self._pending = None
        if release - onset < self.cfg.min_press_ms:
            return None
        peak = int(peak)
        return PressEvent(
            sensor=self.sensor,
            onset_ms=int(onset),
            release_ms=int(release),
            peak_raw=peak,
            peak_quartet=classify_force_level(peak, self.quartet_bound),
        )

    def finalize(self) -> List[PressEvent]:
        """Flush the filter tail; a press still open closes at the last sample."""
        if self._finalized:
            raise SegmentationError("segmenter already finalized")
        self._finalized = True
        out: List[PressEvent] = []
        if self._count == 0:
            return out
        values = list(self._values)
        n = self._count
        first_abs = n - len(values)  # absolute index of values[0]
        for offset, (t_i, raw_i) in enumerate(list(self._lag)):
            i = n - len(self._lag) + offset
            # clamping indices into [0, n-1] replicates both edges
            window = [
                values[min(max(j, 0), n - 1) - first_abs]
                for j in range(i - self._k, i + self._k + 1)
            ]
            out.extend(self._step(t_i, statistics.median(window), raw_i))
        self._lag.clear()
        if self._in_press:
            self._in_press = False
            self._pending = (self._onset_ms, self._last_t, self._peak)
        ev = self._flush_pending()
        if ev is not None:
            out.append(ev)
        return out
