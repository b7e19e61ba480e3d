"""Core domain types for glove-based palpation telemetry.

Twelve force sensors sit on the palmar surface and the radial border of the
right hand.  Raw force readings are 10-bit arbitrary units (0-1023); the
scoring rubric partitions [0, 600] into four force quartets which map onto
the three feedback colors shown to the trainee.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Optional, Sequence, Tuple


class SensorId(str, Enum):
    """The 12 contact-point sensors on the palpating (right) hand."""

    T1 = "T1"  # index fingertip
    T2 = "T2"  # middle fingertip
    T3 = "T3"  # ring fingertip
    S1 = "S1"  # radial border of index finger, distal
    S2 = "S2"  # radial border, middle
    S3 = "S3"  # radial border, proximal
    B1 = "B1"  # index finger base
    B2 = "B2"  # middle finger base
    B3 = "B3"  # ring finger base
    E1 = "E1"  # thenar eminence, upper
    E2 = "E2"  # thenar eminence, lower
    E3 = "E3"  # hypothenar eminence

    def __str__(self) -> str:  # "T1" rather than "SensorId.T1" in messages
        return self.value


ALL_SENSORS: Tuple[SensorId, ...] = tuple(SensorId)

# Leaning on the heel of the hand is penalized; these are the "error" sensors.
ERROR_SENSORS = frozenset({SensorId.E1, SensorId.E2, SensorId.E3})
PERMITTED_SENSORS = frozenset(set(SensorId) - ERROR_SENSORS)

# Liver-edge palpation should concentrate on the index finger's radial
# border, tip and base.
LIVER_FOCUS_SENSORS = frozenset(
    {SensorId.S1, SensorId.S2, SensorId.S3, SensorId.T1, SensorId.B1}
)
FINGERTIP_SENSORS = frozenset({SensorId.T1, SensorId.T2, SensorId.T3})


class TaskKind(str, Enum):
    SUPERFICIAL = "superficial"
    DEEP = "deep"
    LIVER = "liver"

    def __str__(self) -> str:
        return self.value


class Cohort(str, Enum):
    """Training-study cohorts plus the expert reference group."""

    CT = "CT"
    SVT = "SVT"
    VT = "VT"
    EXPERT = "Expert"


class ForceQuartet(IntEnum):
    """Force bands over the rubric's 0-600 arb-unit range (150 units each)."""

    Q1 = 1  # very light
    Q2 = 2  # light
    Q3 = 3  # medium
    Q4 = 4  # hard


QUARTET_BOUND = 600  # arb units; upper bound of the graded force range
QUARTET_COUNT = 4


class FeedbackColor(IntEnum):
    """Trainee-facing color tiers, ordered by force magnitude."""

    GREEN = 0
    AMBER = 1
    RED = 2


class Gender(str, Enum):
    MALE = "male"
    FEMALE = "female"


class BodyCategory(str, Enum):
    SMALL = "Small"
    MEDIUM = "Medium"
    LARGE = "Large"


class OsceRating(IntEnum):
    """Categorical clinical-exam outcome, ordered worst to best."""

    FAIL = 0
    BORDERLINE = 1
    PASS = 2
    GOOD = 3
    EXCELLENT = 4

    def label(self) -> str:
        return self.name.capitalize()


RAW_MAX = 1023  # 10-bit sensor ceiling

FORCE_CHANNELS = 12


class NonPositiveAnthropometric(ValueError):
    """A patient-profile measurement was zero or negative."""


@dataclass(frozen=True)
class SensorFrame:
    """One timestamped sample of all 12 force channels plus hand orientation.

    force_raw holds arb units in [0, 1023], indexed in ALL_SENSORS order.
    orientation is (roll, pitch, yaw) in degrees.  markers is a reserved
    camera-side extension (4 positions in mm) never produced by the glove.
    """

    seq: int
    timestamp_ms: int
    force_raw: Tuple[int, ...]
    orientation: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    flags: int = 0
    markers: Optional[Tuple[Tuple[float, float, float], ...]] = None

    def __post_init__(self) -> None:
        if len(self.force_raw) != FORCE_CHANNELS:
            raise ValueError(
                f"expected {FORCE_CHANNELS} force channels, got {len(self.force_raw)}"
            )
        for v in self.force_raw:
            if not 0 <= v <= RAW_MAX:
                raise ValueError(f"force value {v} outside [0, {RAW_MAX}]")
        if len(self.orientation) != 3:
            raise ValueError("orientation must be (roll, pitch, yaw)")
        if self.markers is not None and len(self.markers) != 4:
            raise ValueError("markers must hold exactly 4 positions")

    def force(self, sensor: SensorId) -> int:
        return self.force_raw[ALL_SENSORS.index(sensor)]


@dataclass(frozen=True)
class SessionMeta:
    """Identification and recording metadata for one palpation task session."""

    session_id: str
    participant_id: str
    cohort: Cohort
    task: TaskKind
    patient_ref: str = ""
    sample_rate_hz: float = 50.0


@dataclass
class Session:
    """An ordered frame recording of one participant performing one task."""

    meta: SessionMeta
    frames: list  # list[SensorFrame]

    def __post_init__(self) -> None:
        last = None
        for f in self.frames:
            if last is not None and f.timestamp_ms < last:
                raise ValueError("frame timestamps must be nondecreasing")
            last = f.timestamp_ms

    @property
    def task(self) -> TaskKind:
        return self.meta.task

    def duration_ms(self) -> int:
        if not self.frames:
            return 0
        return self.frames[-1].timestamp_ms - self.frames[0].timestamp_ms

    def sensor_trace(self, sensor: SensorId) -> list:
        """(timestamp_ms, raw) pairs for one channel, in frame order."""
        idx = ALL_SENSORS.index(sensor)
        return [(f.timestamp_ms, f.force_raw[idx]) for f in self.frames]


@dataclass(frozen=True)
class PatientProfile:
    """Anthropometrics of an actor patient."""

    gender: Gender
    height_m: float
    weight_kg: float
    waist_cm: float
    hip_cm: float
    body_category: BodyCategory = BodyCategory.MEDIUM


@dataclass(frozen=True)
class HealthMetrics:
    bmi: float
    bai_percent: float
    whr: float


@dataclass(frozen=True)
class HealthCategoryReport:
    """Categorical reading of the three health indices."""

    bmi_category: str  # underweight | healthy | overweight
    bai_category: str  # below | healthy | above
    whr_at_risk: bool


def classify_force_level(raw: float, bound: int = QUARTET_BOUND) -> ForceQuartet:
    """Map a raw arb-unit reading onto its force quartet.

    The graded range [0, bound) splits into four equal bands; readings at or
    above the bound clamp to Q4 (the sensor can read past the rubric range).
    """
    if raw < 0:
        raise ValueError(f"raw force must be >= 0, got {raw}")
    width = bound / QUARTET_COUNT
    band = int(raw // width)
    if band >= QUARTET_COUNT:
        band = QUARTET_COUNT - 1
    return ForceQuartet(band + 1)


def quartet_to_color(q: ForceQuartet) -> FeedbackColor:
    """Fixed quartet-to-color mapping: Q1/Q2 green, Q3 amber, Q4 red."""
    if q is ForceQuartet.Q3:
        return FeedbackColor.AMBER
    if q is ForceQuartet.Q4:
        return FeedbackColor.RED
    return FeedbackColor.GREEN


# Wrist range-of-motion box, degrees.  Pitch: dorsal flexion positive, volar
# negative.  Yaw: radial flexion positive, ulnar negative.
PITCH_RANGE = (-44.0, 78.0)
YAW_RANGE = (-28.0, 17.0)
ROLL_RANGE = (-180.0, 180.0)


@dataclass(frozen=True)
class PlausibilityFlag:
    """Advisory orientation check; an implausible pose never rejects a frame."""

    plausible: bool
    issues: Tuple[str, ...] = ()


def validate_orientation(orientation: Sequence[float]) -> PlausibilityFlag:
    """Check (roll, pitch, yaw) against the wrist's range-of-motion box.

    The box is closed: boundary values are plausible.
    """
    roll, pitch, yaw = orientation
    issues = []
    if not ROLL_RANGE[0] <= roll <= ROLL_RANGE[1]:
        issues.append("roll")
    if not PITCH_RANGE[0] <= pitch <= PITCH_RANGE[1]:
        issues.append("pitch")
    if not YAW_RANGE[0] <= yaw <= YAW_RANGE[1]:
        issues.append("yaw")
    return PlausibilityFlag(plausible=not issues, issues=tuple(issues))


def compute_health_metrics(profile: PatientProfile) -> HealthMetrics:
    """BMI, body adiposity index (percent) and waist-to-hip ratio."""
    values = (profile.height_m, profile.weight_kg, profile.waist_cm, profile.hip_cm)
    if any(v <= 0 for v in values):
        raise NonPositiveAnthropometric(
            f"anthropometrics must be strictly positive, got {values}"
        )
    bmi = profile.weight_kg / (profile.height_m**2)
    bai = profile.hip_cm / (profile.height_m**1.5) - 18.0
    whr = profile.waist_cm / profile.hip_cm
    return HealthMetrics(bmi=bmi, bai_percent=bai, whr=whr)


# Healthy bands: BMI 18.5-25 for everyone; BAI 21-33% female / 8-21% male;
# WHR flags abdominal-obesity risk above 0.85 female / 1.0 male.
BMI_HEALTHY = (18.5, 25.0)
BAI_HEALTHY = {Gender.FEMALE: (21.0, 33.0), Gender.MALE: (8.0, 21.0)}
WHR_RISK_ABOVE = {Gender.FEMALE: 0.85, Gender.MALE: 1.0}


def classify_health_metrics(m: HealthMetrics, gender: Gender) -> HealthCategoryReport:
    """Band each health index; boundaries count as healthy / not at risk."""
    if m.bmi < BMI_HEALTHY[0]:
        bmi_cat = "underweight"
    elif m.bmi > BMI_HEALTHY[1]:
        bmi_cat = "overweight"
    else:
        bmi_cat = "healthy"

    lo, hi = BAI_HEALTHY[gender]
    if m.bai_percent < lo:
        bai_cat = "below"
    elif m.bai_percent > hi:
        bai_cat = "above"
    else:
        bai_cat = "healthy"

    return HealthCategoryReport(
        bmi_category=bmi_cat,
        bai_category=bai_cat,
        whr_at_risk=m.whr > WHR_RISK_ABOVE[gender],
    )
