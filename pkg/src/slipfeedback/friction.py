"""Offline friction measurement from a recorded lift.

The static coefficient of friction is the tangential/normal force ratio at
the moment the whole contact breaks away, which shows up in the trace as
the first sustained drop of tangential force after its maximum.
"""

from __future__ import annotations

import enum
from typing import Optional

import numpy as np

from .core import DerivedSeries, ForceTrace, SlipFeedbackError
from .signal import derive, friction_ratio


class NoSlipFound(SlipFeedbackError, ValueError):
    pass


class NonPositiveMu(SlipFeedbackError, ValueError):
    pass


class FrictionLevel(enum.Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"

    @property
    def mu(self) -> float:
        return _NOMINAL_MU[self]

    @property
    def short(self) -> str:
        return self.name[0]

    @classmethod
    def parse(cls, text: str) -> "FrictionLevel":
        text = text.strip().lower()
        for level in cls:
            if text in (level.value, level.short.lower()):
                return level
        raise ValueError(f"unknown friction level {text!r}")


_NOMINAL_MU = {FrictionLevel.LOW: 0.25, FrictionLevel.MEDIUM: 0.55, FrictionLevel.HIGH: 0.95}
LOW_MEDIUM_BOUNDARY = 0.40
MEDIUM_HIGH_BOUNDARY = 0.75

ONSET_WINDOW = 5
ONSET_RUN = 5


def _onset_index(trace: ForceTrace, derived: Optional[DerivedSeries],
                 run_length: int, window: int) -> int:
    if run_length < 1:
        raise ValueError("run_length must be >= 1")
    if derived is None:
        derived = derive(trace, window)
    ft = derived.ft_smooth
    peak = int(np.argmax(ft))
    falling = derived.dft[peak:] < 0
    if falling.size < run_length:
        raise NoSlipFound("tangential force peaks at the end of the trace")
    # runs[i] counts falling samples in falling[i:i+run_length]
    c = np.concatenate(([0], np.cumsum(falling)))
    runs = c[run_length:] - c[:-run_length]
    hits = np.flatnonzero(runs == run_length)
    if hits.size == 0:
        raise NoSlipFound("tangential force never decreases after its peak")
    return peak + int(hits[0])


def detect_macro_slip_onset(trace: ForceTrace, derived: Optional[DerivedSeries] = None,
                            run_length: int = ONSET_RUN, window: int = ONSET_WINDOW) -> float:
    """Time of the first sustained decrease of smoothed f_t after its maximum."""
    return float(trace.t[_onset_index(trace, derived, run_length, window)])


def measure_static_cof(trace: ForceTrace, run_length: int = ONSET_RUN,
                       window: int = ONSET_WINDOW) -> float:
    i = _onset_index(trace, None, run_length, window)
    return friction_ratio(trace.f_n[i], trace.f_t[i])


def classify_friction(mu: float) -> FrictionLevel:
    if not mu > 0:
        raise NonPositiveMu(f"mu must be > 0, got {mu}")
    if mu < LOW_MEDIUM_BOUNDARY:
        return FrictionLevel.LOW
    if mu < MEDIUM_HIGH_BOUNDARY:
        return FrictionLevel.MEDIUM
    return FrictionLevel.HIGH
