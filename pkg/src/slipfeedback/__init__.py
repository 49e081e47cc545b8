"""Friction-scaled vibrotactile slip feedback: detector, simulator and tools."""

from .core import (
    Cause,
    DerivedSeries,
    DetectorConfig,
    ForceSample,
    ForceTrace,
    GroundTruth,
    InvalidConfig,
    Phase,
    SessionLog,
    SlipEvent,
    SlipFeedbackError,
    Source,
    VibrationCommand,
)
from .detector import SlipDetector, detect, new_detector
from .friction import FrictionLevel, classify_friction, detect_macro_slip_onset, measure_static_cof
from .simulate import LiftScenario, simulate_lift, surface_preset

__version__ = "0.1.0"
