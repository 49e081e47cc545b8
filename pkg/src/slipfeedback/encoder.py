"""Friction-scaled drive intensity.

``eq1_low``/``eq2_high``/``eq3_combined`` map the tangential-force
acceleration margin to an intensity, ``eq4_slip_ratio`` maps the slip-ratio
change. All outputs are clamped to [u_min, u_max] except the 0 returned
below the slip-ratio threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .core import SlipFeedbackError


class WrongBranch(SlipFeedbackError, ValueError):
    pass


class ZeroDelta(SlipFeedbackError, ValueError):
    pass


@dataclass(frozen=True)
class IntensityInputs:
    delta_a: float  # accel_threshold - d2f_t/dt2, N/s^2
    sr_peak: float
    f_peak: float = 255.0
    k_const: float = 1.0
    u_min: float = 30.0
    u_max: float = 255.0

    def __post_init__(self):
        if not self.sr_peak > 0:
            raise ValueError("sr_peak must be > 0")
        if not self.u_min < self.u_max:
            raise ValueError("u_min must be < u_max")


def clamp(x: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, x))


def eq1_low(inp: IntensityInputs) -> float:
    if not inp.delta_a < 0:
        raise WrongBranch(f"low branch needs delta_a < 0, got {inp.delta_a}")
    return clamp((inp.f_peak / inp.sr_peak) / -inp.delta_a, inp.u_min, inp.u_max)


def eq2_high(inp: IntensityInputs) -> float:
    if not inp.delta_a > 0:
        raise WrongBranch(f"high branch needs delta_a > 0, got {inp.delta_a}")
    return clamp(inp.f_peak / inp.sr_peak * inp.delta_a, inp.u_min, inp.u_max)


def eq3_combined(inp: IntensityInputs) -> float:
    """Smaller of the two branches, each fed |delta_a| with its own sign."""
    if inp.delta_a == 0:
        raise ZeroDelta("delta_a must be non-zero")
    mag = abs(inp.delta_a)
    return min(eq1_low(replace(inp, delta_a=-mag)), eq2_high(replace(inp, delta_a=mag)))


def eq4_slip_ratio(inp: IntensityInputs, delta_sr: float, threshold: float = 0.5,
                   literal: bool = False) -> float:
    """Slip-ratio cue intensity.

    ``literal=True`` evaluates ``min(u_min, max(u_max, x))`` as printed, which
    is the constant u_min; kept only to document that reading.
    """
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    if delta_sr < threshold:
        return 0.0
    x = inp.f_peak * inp.k_const / inp.sr_peak
    if literal:
        return min(inp.u_min, max(inp.u_max, x))
    return clamp(x, inp.u_min, inp.u_max)
