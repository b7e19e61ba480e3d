"""palpengine: telemetry and competency assessment for palpation training.

Ingests 12-channel force/orientation frames from a sensor glove (or its
simulator), segments press-release actions, scores sessions against a
three-criterion rubric, and drives a live color-coded feedback panel.
"""

__version__ = "0.1.0"

from .core import (
    ALL_SENSORS,
    ERROR_SENSORS,
    FINGERTIP_SENSORS,
    LIVER_FOCUS_SENSORS,
    PERMITTED_SENSORS,
    Cohort,
    FeedbackColor,
    ForceQuartet,
    OsceRating,
    SensorFrame,
    SensorId,
    Session,
    SessionMeta,
    TaskKind,
    classify_force_level,
    quartet_to_color,
)

__all__ = [
    "__version__",
    "ALL_SENSORS",
    "ERROR_SENSORS",
    "FINGERTIP_SENSORS",
    "LIVER_FOCUS_SENSORS",
    "PERMITTED_SENSORS",
    "Cohort",
    "FeedbackColor",
    "ForceQuartet",
    "OsceRating",
    "SensorFrame",
    "SensorId",
    "Session",
    "SessionMeta",
    "TaskKind",
    "classify_force_level",
    "quartet_to_color",
]
