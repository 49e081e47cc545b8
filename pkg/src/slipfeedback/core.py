"""Domain types shared by the slip-feedback pipeline.

Forces are in newtons, time in seconds, drive intensity in the raw 0-255
units of an ERM motor driver.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping, Optional

import numpy as np


class SlipFeedbackError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfig(SlipFeedbackError, ValueError):
    def __init__(self, field: str, reason: str, violations=None):
        self.field = field
        self.reason = reason
        self.violations = list(violations or [(field, reason)])
        super().__init__(f"{field}: {reason}")


class InvalidSample(SlipFeedbackError, ValueError):
    pass


class InvalidTrace(SlipFeedbackError, ValueError):
    pass


class Phase(enum.IntEnum):
    IDLE = 0
    APPROACH = 1
    CONTACT = 2
    GRIPPING = 3
    HOLD = 4
    ARMED = 5
    SLIPPING = 6
    RELEASED = 7

    @property
    def label(self) -> str:
        return self.name.lower()


class Cause(str, enum.Enum):
    CONTACT_CUE = "contact_cue"
    ACCEL = "accel"
    SLIP_RATIO = "slip_ratio"
    SILENT = "silent"


class Source(str, enum.Enum):
    RECORDED = "recorded"
    SIMULATED = "simulated"


@dataclass(frozen=True)
class ForceSample:
    t: float
    f_n: float
    f_t: float

    def __post_init__(self):
        for name in ("t", "f_n", "f_t"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidSample(f"{name} is not finite: {v!r}")
        if self.f_n < 0 or self.f_t < 0:
            raise InvalidSample(f"negative force magnitude at t={self.t}")


@dataclass(frozen=True)
class GroundTruth:
    """What the simulator knows about a trace.

    ``slip_onset_t`` marks the start of incipient creep and ``macro_slip_t``
    the whole-contact breakaway; both are ``None`` when nothing slips.
    """

    mu_s: float
    mu_k: float
    slip_onset_t: Optional[float]
    macro_slip_t: Optional[float]
    mass_kg: float
    load_N: float = 0.0
    release_start_t: Optional[float] = None
    lift_t: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.mu_k <= self.mu_s):
            raise InvalidTrace("ground truth needs 0 < mu_k <= mu_s")
        if (self.slip_onset_t is None) != (self.macro_slip_t is None):
            raise InvalidTrace("slip_onset_t and macro_slip_t must both be set or both None")
        if self.slip_onset_t is not None and self.slip_onset_t > self.macro_slip_t:
            raise InvalidTrace("slip_onset_t must not follow macro_slip_t")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "GroundTruth":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass(frozen=True, eq=False)
class ForceTrace:
    """A uniformly sampled normal/tangential force recording.

    Stored column-wise; iterate to get :class:`ForceSample` objects.
    """

    t: np.ndarray
    f_n: np.ndarray
    f_t: np.ndarray
    sample_rate_hz: float
    source: Source = Source.RECORDED
    ground_truth: Optional[GroundTruth] = None

    def __post_init__(self):
        t = np.ascontiguousarray(self.t, dtype=float)
        f_n = np.ascontiguousarray(self.f_n, dtype=float)
        f_t = np.ascontiguousarray(self.f_t, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "f_n", f_n)
        object.__setattr__(self, "f_t", f_t)
        object.__setattr__(self, "source", Source(self.source))
        if t.ndim != 1 or t.size == 0:
            raise InvalidTrace("trace must be a non-empty 1-D series")
        if f_n.shape != t.shape or f_t.shape != t.shape:
            raise InvalidTrace("t, f_n and f_t must have equal length")
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise InvalidTrace("sample_rate_hz must be positive")
        if not (np.isfinite(t).all() and np.isfinite(f_n).all() and np.isfinite(f_t).all()):
            raise InvalidTrace("trace contains NaN or Inf")
        if (f_n < 0).any() or (f_t < 0).any():
            raise InvalidTrace("force magnitudes must be >= 0")
        if t.size > 1:
            steps = np.diff(t)
            if (steps <= 0).any():
                raise InvalidTrace("timestamps must be strictly increasing")
            nominal = 1.0 / self.sample_rate_hz
            if np.abs(steps - nominal).max() > 0.01 * nominal:
                raise InvalidTrace("sample spacing deviates more than 1% from 1/sample_rate_hz")
        for arr in (t, f_n, f_t):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return self.t.size

    def __iter__(self):
        for t, fn, ft in zip(self.t.tolist(), self.f_n.tolist(), self.f_t.tolist()):
            yield ForceSample(t, fn, ft)

    @property
    def samples(self) -> list:
        return list(self)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz

    def window(self, t0: float, t1: float) -> np.ndarray:
        """Boolean mask of samples with t0 <= t <= t1."""
        return (self.t >= t0) & (self.t <= t1)


@dataclass(frozen=True)
class DetectorConfig:
    contact_threshold_N: float = 0.5
    grip_target_N: float = 3.5
    accel_threshold: float = 0.3
    arming_delay_s: float = 10.0
    sr_diff_threshold: float = 0.5
    u_min: float = 30.0
    u_max: float = 255.0
    f_peak: float = 255.0
    k_const: float = 1.0
    K_gain: float = 1.0
    gain_backoff: float = 0.5
    ft_floor_N: float = 0.05
    smooth_window: int = 11
    # cascaded moving-average passes before differentiation
    smooth_passes: int = 1
    contact_cue_duration_s: float = 0.1
    contact_cue_intensity: float = 200.0

    @property
    def half_window(self) -> int:
        return (self.smooth_window - 1) // 2

    @property
    def accel_delay_samples(self) -> int:
        """Samples between a raw sample and the d2 estimate centred on it."""
        return self.smooth_passes * self.half_window + 2

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_mapping(cls, d: Mapping[str, Any]) -> "DetectorConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in d.items():
            if key not in known:
                raise InvalidConfig(key, "unknown configuration key")
            kwargs[key] = int(value) if key in ("smooth_window", "smooth_passes") else float(value)
        return validate_config(cls(**kwargs))

    def with_overrides(self, **kw) -> "DetectorConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return validate_config(replace(self, **kw))


def validate_config(cfg: DetectorConfig) -> DetectorConfig:
    """Return ``cfg`` unchanged if every bound holds, else raise InvalidConfig."""
    bad = []

    def check(ok, name, reason):
        if not ok:
            bad.append((name, reason))

    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, float) and not math.isfinite(v):
            bad.append((f.name, "must be finite"))
    if bad:
        raise InvalidConfig(*bad[0], violations=bad)

    check(cfg.u_min > 0, "u_min", "must be > 0")
    check(cfg.u_min < cfg.u_max, "u_min", "must be < u_max")
    check(cfg.u_max <= cfg.f_peak, "u_max", "must be <= f_peak")
    check(cfg.accel_threshold > 0, "accel_threshold", "must be > 0")
    check(cfg.arming_delay_s >= 0, "arming_delay_s", "must be >= 0")
    check(cfg.sr_diff_threshold > 0, "sr_diff_threshold", "must be > 0")
    check(cfg.smooth_window >= 3, "smooth_window", "must be >= 3")
    check(cfg.smooth_window % 2 == 1, "smooth_window", "must be odd")
    check(cfg.smooth_passes >= 1, "smooth_passes", "must be >= 1")
    check(0 < cfg.gain_backoff < 1, "gain_backoff", "must lie in (0, 1)")
    check(cfg.K_gain > 0, "K_gain", "must be > 0")
    check(cfg.k_const > 0, "k_const", "must be > 0")
    check(cfg.ft_floor_N > 0, "ft_floor_N", "must be > 0")
    check(cfg.contact_threshold_N > 0, "contact_threshold_N", "must be > 0")
    check(cfg.grip_target_N > cfg.contact_threshold_N, "grip_target_N",
          "must exceed contact_threshold_N")
    check(cfg.contact_cue_duration_s >= 0, "contact_cue_duration_s", "must be >= 0")
    check(cfg.u_min <= cfg.contact_cue_intensity <= cfg.u_max, "contact_cue_intensity",
          "must lie in [u_min, u_max]")
    if bad:
        raise InvalidConfig(*bad[0], violations=bad)
    return cfg


@dataclass(frozen=True)
class VibrationCommand:
    t: float
    u: float
    cause: Cause

    def __post_init__(self):
        object.__setattr__(self, "cause", Cause(self.cause))
        if not math.isfinite(self.u) or self.u < 0:
            raise InvalidSample(f"drive intensity must be finite and >= 0, got {self.u!r}")
        if (self.cause is Cause.SILENT) != (self.u == 0):
            raise InvalidSample("u == 0 exactly when the command is Silent")


@dataclass(frozen=True)
class SlipEvent:
    t: float
    trigger: Cause
    delta_a: float
    delta_sr: float
    sr_peak: float
    intensity: float

    def __post_init__(self):
        object.__setattr__(self, "trigger", Cause(self.trigger))
        if self.trigger not in (Cause.ACCEL, Cause.SLIP_RATIO):
            raise InvalidSample("slip events are triggered by accel or slip_ratio only")


@dataclass(frozen=True, eq=False)
class DerivedSeries:
    """Smoothed tangential force, its first two derivatives and the slip ratio."""

    t: np.ndarray
    ft_smooth: np.ndarray
    dft: np.ndarray
    d2ft: np.ndarray
    sr: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def __eq__(self, other):
        if not isinstance(other, DerivedSeries):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, n), getattr(other, n))
            for n in ("t", "ft_smooth", "dft", "d2ft", "sr")
        )

    @classmethod
    def empty(cls) -> "DerivedSeries":
        z = np.zeros(0)
        return cls(z, z, z, z, z)


@dataclass(frozen=True)
class SessionLog:
    phases: tuple = ()
    events: tuple = ()
    commands: tuple = ()
    derived: DerivedSeries = field(default_factory=DerivedSeries.empty)

    def first_event(self, trigger: Optional[Cause] = None) -> Optional[SlipEvent]:
        for ev in self.events:
            if trigger is None or ev.trigger is trigger:
                return ev
        return None

    @property
    def phase_sequence(self) -> list:
        return [p for _, p in self.phases]

    def without_derived(self) -> "SessionLog":
        return replace(self, derived=DerivedSeries.empty())
