"""Session scoring: contributions, the three criteria, totals and OSCE rating.

Each criterion is worth ten points.  A criterion that misses its bound loses
points in proportion to the absolute error, in percentage points:
``points = max(0, 10 - slope * error)`` with a default slope of one point
per percentage point.  Wrong-use and correct-use apply to all three tasks;
the force-transition criterion applies to superficial and deep only, so its
average divides by two.  The slope and the OSCE cut points are configuration,
recorded into every report so tutors can recalibrate.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .core import (
    ALL_SENSORS,
    FINGERTIP_SENSORS,
    LIVER_FOCUS_SENSORS,
    PERMITTED_SENSORS,
    QUARTET_BOUND,
    ForceQuartet,
    OsceRating,
    SensorId,
    Session,
    TaskKind,
)
from .segmentation import (
    PressEvent,
    PressStats,
    SegmentationConfig,
    press_stats,
    segment_presses,
)

POINTS_PER_CRITERION = 10.0
MAX_TOTAL = 30.0

# Rubric bounds, in percent of total press count.
THENAR_LIMIT_PCT = 20.0
HYPOTHENAR_LIMIT_PCT = 10.0
FINGERTIP_DELTA_LIMIT_PCT = 20.0
LIVER_FOCUS_MIN_PCT = 50.0

# Correct peak quartets for the force-transition criterion.
TRANSITION_TARGETS = {
    TaskKind.SUPERFICIAL: frozenset({ForceQuartet.Q1, ForceQuartet.Q2}),
    TaskKind.DEEP: frozenset({ForceQuartet.Q3, ForceQuartet.Q4}),
}


class AssessmentError(Exception):
    pass


class EmptySession(AssessmentError):
    """No press events recorded; the session is unassessable (not a zero)."""

    def __init__(self, task: Optional[TaskKind] = None, detail: str = ""):
        self.task = task
        label = f"{task.value} task: " if task else ""
        super().__init__(f"{label}no press events recorded{detail}")


class MissingTask(AssessmentError):
    def __init__(self, tasks: Sequence[TaskKind]):
        self.tasks = tuple(tasks)
        super().__init__(
            "missing session for task(s): " + ", ".join(t.value for t in tasks)
        )


class NotApplicable(AssessmentError):
    pass


class OutOfRange(AssessmentError):
    pass


class Criterion(str, Enum):
    WRONG_USE = "wrong_use"
    CORRECT_USE = "correct_use"
    FORCE_TRANSITION = "force_transition"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class AssessmentConfig:
    """Scoring knobs that are deliberately not rubric constants."""

    penalty_slope: float = 1.0  # points lost per percentage point of error
    osce_cuts: Tuple[float, float, float, float] = (15.0, 18.0, 22.0, 26.0)

    def __post_init__(self) -> None:
        if self.penalty_slope <= 0:
            raise ValueError("penalty_slope must be > 0")
        if list(self.osce_cuts) != sorted(self.osce_cuts) or len(self.osce_cuts) != 4:
            raise ValueError("osce_cuts must be 4 nondecreasing totals")

    def to_dict(self) -> dict:
        return {"penalty_slope": self.penalty_slope, "osce_cuts": list(self.osce_cuts)}

    @classmethod
    def from_dict(cls, d: dict) -> "AssessmentConfig":
        cuts = d.get("osce_cuts")
        return cls(
            penalty_slope=d.get("penalty_slope", 1.0),
            osce_cuts=tuple(cuts) if cuts else (15.0, 18.0, 22.0, 26.0),
        )


@dataclass(frozen=True)
class Violation:
    """How far a criterion missed its bound, in percentage points."""

    magnitude_pct: float
    description: str

    def to_dict(self) -> dict:
        return {"magnitude_pct": self.magnitude_pct, "description": self.description}


@dataclass(frozen=True)
class CriterionScore:
    criterion: Criterion
    task: TaskKind
    points: float
    violation: Optional[Violation] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.points <= POINTS_PER_CRITERION:
            raise ValueError(f"points {self.points} outside [0, 10]")
        if (self.violation is None) != (self.points == POINTS_PER_CRITERION):
            raise ValueError("violation must be present exactly when points < 10")

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion.value,
            "task": self.task.value,
            "points": self.points,
            "violation": self.violation.to_dict() if self.violation else None,
        }


@dataclass(frozen=True)
class ContributionMap:
    """Per-sensor share of the session's total press count, in percent."""

    shares_pct: Dict[SensorId, float]
    total_presses: int

    def pct(self, *sensors: SensorId) -> float:
        return sum(self.shares_pct[s] for s in sensors)

    def to_dict(self) -> dict:
        return {s.value: self.shares_pct[s] for s in ALL_SENSORS}


def sensor_contributions(stats: PressStats) -> ContributionMap:
    """Percentage share of presses per sensor; requires at least one press."""
    total = stats.total
    if total == 0:
        raise EmptySession()
    shares = {s: stats.counts[s] / total * 100.0 for s in ALL_SENSORS}
    return ContributionMap(shares_pct=shares, total_presses=total)


def _scored(
    criterion: Criterion,
    task: TaskKind,
    error_pct: float,
    description: str,
    cfg: AssessmentConfig,
) -> CriterionScore:
    points = max(0.0, POINTS_PER_CRITERION - cfg.penalty_slope * error_pct)
    if error_pct <= 0 or points == POINTS_PER_CRITERION:
        return CriterionScore(criterion, task, POINTS_PER_CRITERION)
    return CriterionScore(criterion, task, points, Violation(error_pct, description))


def criterion_wrong_use(
    c: ContributionMap,
    task: TaskKind,
    cfg: AssessmentConfig = AssessmentConfig(),
) -> CriterionScore:
    """Penalize leaning on the heel of the hand.

    Passes when the thenar pair's combined share stays within 20% and the
    hypothenar share within 10% (both bounds inclusive); overshoots add up.
    """
    thenar = c.pct(SensorId.E1, SensorId.E2)
    hypothenar = c.pct(SensorId.E3)
    over_thenar = max(thenar - THENAR_LIMIT_PCT, 0.0)
    over_hypo = max(hypothenar - HYPOTHENAR_LIMIT_PCT, 0.0)
    parts = []
    if over_thenar > 0:
        parts.append(f"thenar share {thenar:.1f}% exceeds {THENAR_LIMIT_PCT:.0f}%")
    if over_hypo > 0:
        parts.append(
            f"hypothenar share {hypothenar:.1f}% exceeds {HYPOTHENAR_LIMIT_PCT:.0f}%"
        )
    return _scored(
        Criterion.WRONG_USE, task, over_thenar + over_hypo, "; ".join(parts), cfg
    )


def criterion_correct_use(
    c: ContributionMap,
    task: TaskKind,
    cfg: AssessmentConfig = AssessmentConfig(),
) -> CriterionScore:
    """Fingertip balance for superficial/deep; index-border focus for liver.

    Superficial and deep pass when every fingertip's share sits within 20
    percentage points of the fingertip mean.  Liver passes when the radial
    border, index fingertip and index base carry at least half of all
    presses.
    """
    if task is TaskKind.LIVER:
        focus = c.pct(*sorted(LIVER_FOCUS_SENSORS, key=lambda s: s.value))
        shortfall = max(LIVER_FOCUS_MIN_PCT - focus, 0.0)
        return _scored(
            Criterion.CORRECT_USE,
            task,
            shortfall,
            f"focus-set share {focus:.1f}% below {LIVER_FOCUS_MIN_PCT:.0f}%",
            cfg,
        )
    tips = sorted(FINGERTIP_SENSORS, key=lambda s: s.value)
    mean = sum(c.pct(t) for t in tips) / len(tips)
    deltas = {t: c.pct(t) - mean for t in tips}
    worst = max(tips, key=lambda t: abs(deltas[t]))
    excess = abs(deltas[worst]) - FINGERTIP_DELTA_LIMIT_PCT
    return _scored(
        Criterion.CORRECT_USE,
        task,
        excess,
        f"fingertip {worst} is {deltas[worst]:+.1f}pp from the fingertip mean "
        f"(limit ±{FINGERTIP_DELTA_LIMIT_PCT:.0f}pp)",
        cfg,
    )


def criterion_force_transition(
    events: Iterable[PressEvent],
    task: TaskKind,
    cfg: AssessmentConfig = AssessmentConfig(),
) -> CriterionScore:
    """Score press-peak quartets: light presses superficially, hard ones deep.

    Only permitted-sensor presses count; error-sensor presses are already
    penalized by the wrong-use criterion.  Points scale with the fraction of
    presses whose peak lands in the task's target quartets.
    """
    if task is TaskKind.LIVER:
        raise NotApplicable("force transition is not assessed for the liver task")
    targets = TRANSITION_TARGETS[task]
    peaks = [ev.peak_quartet for ev in events if ev.sensor in PERMITTED_SENSORS]
    if not peaks:
        raise EmptySession(task, " on permitted sensors")
    correct = sum(1 for q in peaks if q in targets)
    frac_correct = correct / len(peaks)
    if frac_correct == 1.0:
        return CriterionScore(Criterion.FORCE_TRANSITION, task, POINTS_PER_CRITERION)
    wrong = len(peaks) - correct
    names = "/".join(q.name for q in sorted(targets))
    return CriterionScore(
        Criterion.FORCE_TRANSITION,
        task,
        POINTS_PER_CRITERION * frac_correct,
        Violation(
            (1.0 - frac_correct) * 100.0,
            f"{wrong} of {len(peaks)} press peaks outside {names}",
        ),
    )


def osce_rating(
    total: float, cfg: AssessmentConfig = AssessmentConfig()
) -> OsceRating:
    """Map a 30-point total onto the categorical clinical-exam scale."""
    if not 0.0 <= total <= MAX_TOTAL:
        raise OutOfRange(f"total {total} outside [0, {MAX_TOTAL}]")
    for rating, cut in zip(
        (OsceRating.FAIL, OsceRating.BORDERLINE, OsceRating.PASS, OsceRating.GOOD),
        cfg.osce_cuts,
    ):
        if total < cut:
            return rating
    return OsceRating.EXCELLENT


@dataclass
class TaskAssessment:
    """Everything the report shows for one task."""

    task: TaskKind
    session_id: str
    stats: PressStats
    contributions: ContributionMap
    criteria: Dict[Criterion, CriterionScore]

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "session_id": self.session_id,
            "press_total": self.stats.total,
            "press_counts": {s.value: self.stats.counts[s] for s in ALL_SENSORS},
            "peaks": {s.value: self.stats.peaks[s] for s in ALL_SENSORS},
            "durations_ms": {
                s.value: self.stats.durations_ms[s] for s in ALL_SENSORS
            },
            "contributions_pct": self.contributions.to_dict(),
            "criteria": {c.value: sc.to_dict() for c, sc in self.criteria.items()},
        }


REPORT_SCHEMA = "palp.report/1"


@dataclass
class CompetencyReport:
    """Per-task criterion scores, 30-point total and OSCE rating."""

    participant_id: str
    tasks: Dict[TaskKind, TaskAssessment]
    criterion_averages: Dict[Criterion, float]
    total: float
    osce: OsceRating
    seg_config: SegmentationConfig
    assess_config: AssessmentConfig
    quartet_bound: int
    engine_version: str
    codec_errors: int = 0

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "engine_version": self.engine_version,
            "participant_id": self.participant_id,
            "tasks": {t.value: ta.to_dict() for t, ta in self.tasks.items()},
            "criterion_averages": {
                c.value: v for c, v in self.criterion_averages.items()
            },
            "total": self.total,
            "osce": self.osce.label(),
            "config": {
                "segmentation": self.seg_config.to_dict(),
                "assessment": self.assess_config.to_dict(),
                "quartet_bound": self.quartet_bound,
            },
            "provenance": {"codec_errors": self.codec_errors},
        }


def _applicable_criteria(task: TaskKind) -> Tuple[Criterion, ...]:
    if task is TaskKind.LIVER:
        return (Criterion.WRONG_USE, Criterion.CORRECT_USE)
    return (Criterion.WRONG_USE, Criterion.CORRECT_USE, Criterion.FORCE_TRANSITION)


def _assess_task(
    task: TaskKind,
    session_id: str,
    events: List[PressEvent],
    cfg: AssessmentConfig,
) -> TaskAssessment:
    stats = press_stats(events)
    if stats.total == 0:
        raise EmptySession(task)
    contributions = sensor_contributions(stats)
    criteria: Dict[Criterion, CriterionScore] = {
        Criterion.WRONG_USE: criterion_wrong_use(contributions, task, cfg),
        Criterion.CORRECT_USE: criterion_correct_use(contributions, task, cfg),
    }
    if Criterion.FORCE_TRANSITION in _applicable_criteria(task):
        criteria[Criterion.FORCE_TRANSITION] = criterion_force_transition(
            events, task, cfg
        )
    return TaskAssessment(
        task=task,
        session_id=session_id,
        stats=stats,
        contributions=contributions,
        criteria=criteria,
    )


def assess_events(
    events_by_task: Mapping[TaskKind, List[PressEvent]],
    *,
    participant_id: str,
    session_ids: Mapping[TaskKind, str],
    seg_config: SegmentationConfig,
    assess_config: AssessmentConfig = AssessmentConfig(),
    quartet_bound: int = QUARTET_BOUND,
    codec_errors: int = 0,
) -> CompetencyReport:
    """Score already-segmented sessions, one event list per task."""
    missing = [t for t in TaskKind if t not in events_by_task]
    if missing:
        raise MissingTask(missing)

    from . import __version__

    tasks = {
        t: _assess_task(t, session_ids.get(t, ""), events_by_task[t], assess_config)
        for t in TaskKind
    }
    averages: Dict[Criterion, float] = {}
    for criterion in Criterion:
        scores = [
            ta.criteria[criterion].points
            for ta in tasks.values()
            if criterion in ta.criteria
        ]
        averages[criterion] = sum(scores) / len(scores)
    total = sum(averages.values())
    return CompetencyReport(
        participant_id=participant_id,
        tasks=tasks,
        criterion_averages=averages,
        total=total,
        osce=osce_rating(total, assess_config),
        seg_config=seg_config,
        assess_config=assess_config,
        quartet_bound=quartet_bound,
        engine_version=__version__,
        codec_errors=codec_errors,
    )


def segment_session(
    session: Session,
    seg_config: SegmentationConfig,
    quartet_bound: int = QUARTET_BOUND,
) -> List[PressEvent]:
    """Segment all 12 channels of a session, events ordered by onset."""
    if not session.frames:
        raise EmptySession(session.task)
    events: List[PressEvent] = []
    for sensor in ALL_SENSORS:
        events.extend(
            segment_presses(
                session.sensor_trace(sensor), seg_config, sensor, quartet_bound
            )
        )
    events.sort(key=lambda ev: (ev.onset_ms, ev.sensor.value))
    return events


def assess(
    sessions: Iterable[Session],
    seg_config: SegmentationConfig = SegmentationConfig(),
    assess_config: AssessmentConfig = AssessmentConfig(),
    quartet_bound: int = QUARTET_BOUND,
) -> CompetencyReport:
    """Segment and score one session per task into a competency report."""
    by_task: Dict[TaskKind, Session] = {}
    for s in sessions:
        if s.task in by_task:
            raise AssessmentError(f"more than one session for task {s.task.value}")
        by_task[s.task] = s
    missing = [t for t in TaskKind if t not in by_task]
    if missing:
        raise MissingTask(missing)

    participants = {s.meta.participant_id for s in by_task.values()}
    events_by_task = {
        t: segment_session(s, seg_config, quartet_bound) for t, s in by_task.items()
    }
    return assess_events(
        events_by_task,
        participant_id=sorted(participants)[0] if len(participants) == 1 else "mixed",
        session_ids={t: s.meta.session_id for t, s in by_task.items()},
        seg_config=seg_config,
        assess_config=assess_config,
        quartet_bound=quartet_bound,
    )


def report_from_dict(d: dict) -> CompetencyReport:
    """Rebuild a report from its stored JSON form."""
    if d.get("schema") != REPORT_SCHEMA:
        raise AssessmentError(f"unknown report schema {d.get('schema')!r}")
    tasks: Dict[TaskKind, TaskAssessment] = {}
    for task_name, td in d["tasks"].items():
        task = TaskKind(task_name)
        stats = PressStats(
            counts={s: td["press_counts"][s.value] for s in ALL_SENSORS},
            peaks={s: list(td["peaks"][s.value]) for s in ALL_SENSORS},
            durations_ms={s: list(td["durations_ms"][s.value]) for s in ALL_SENSORS},
        )
        contributions = ContributionMap(
            shares_pct={s: td["contributions_pct"][s.value] for s in ALL_SENSORS},
            total_presses=td["press_total"],
        )
        criteria = {}
        for cname, cd in td["criteria"].items():
            violation = (
                Violation(cd["violation"]["magnitude_pct"], cd["violation"]["description"])
                if cd.get("violation")
                else None
            )
            criteria[Criterion(cname)] = CriterionScore(
                Criterion(cname), task, cd["points"], violation
            )
        tasks[task] = TaskAssessment(
            task=task,
            session_id=td["session_id"],
            stats=stats,
            contributions=contributions,
            criteria=criteria,
        )
    return CompetencyReport(
        participant_id=d["participant_id"],
        tasks=tasks,
        criterion_averages={
            Criterion(c): v for c, v in d["criterion_averages"].items()
        },
        total=d["total"],
        osce=OsceRating[d["osce"].upper()],
        seg_config=SegmentationConfig.from_dict(d["config"]["segmentation"]),
        assess_config=AssessmentConfig.from_dict(d["config"]["assessment"]),
        quartet_bound=d["config"]["quartet_bound"],
        engine_version=d["engine_version"],
        codec_errors=d["provenance"].get("codec_errors", 0),
    )


def render_text(report: CompetencyReport) -> str:
    """Tutor-readable rendering of a report."""
    lines: List[str] = []
    lines.append(f"Palpation competency report -- participant {report.participant_id}")
    lines.append(f"engine {report.engine_version}")
    lines.append("")
    for task in TaskKind:
        ta = report.tasks[task]
        lines.append(f"[{task.value}]  session {ta.session_id}")
        lines.append(f"  presses: {ta.stats.total}")
        shares = ", ".join(
            f"{s.value} {ta.contributions.shares_pct[s]:.1f}%"
            for s in ALL_SENSORS
            if ta.stats.counts[s]
        )
        lines.append(f"  contributions: {shares or 'none'}")
        for criterion in _applicable_criteria(task):
            sc = ta.criteria[criterion]
            note = f"  ({sc.violation.description})" if sc.violation else ""
            lines.append(f"  {criterion.value:<16} {sc.points:5.2f}/10{note}")
        lines.append("")
    lines.append("criterion averages:")
    for criterion in Criterion:
        lines.append(
            f"  {criterion.value:<16} {report.criterion_averages[criterion]:5.2f}/10"
        )
    lines.append(f"TOTAL: {report.total:.2f}/30  OSCE: {report.osce.label()}")
    if report.codec_errors:
        lines.append(f"note: {report.codec_errors} corrupted frames were discarded")
    return "\n".join(lines) + "\n"
