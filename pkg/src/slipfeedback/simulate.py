"""Coulomb grip-lift-release force simulator with ground truth.

Timeline of a trial:

1. pre-contact: both forces zero;
2. grip: f_n ramps 0 -> 0.5 N -> grip target (two smoothstep ramps);
3. lift/hold: the tangential load rises to ``load`` (smoothstep), the
   grip holds at the target;
4. release: f_n decays linearly at ``release_rate_Nps``. Over the last
   ``creep_span_N`` of normal-force decline before breakaway the
   tangential force creeps up by at most ``creep_rise_N`` (incipient slip);
   breakaway happens on the first sample where load + creep_rise_N
   exceeds mu_s * f_n, after which f_t = mu_k * f_n;
5. ``post_slip_s`` after breakaway the object is let go and both forces
   fall to zero over 0.1 s.

Gaussian noise is added to both channels and the result rectified so that
magnitudes stay non-negative.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import ForceTrace, GroundTruth, SlipFeedbackError, Source

G = 9.81
LET_GO_S = 0.1
TAIL_S = 0.3

# (mu_s, tangential load in N) matched to the measured peak forces per surface
PRESETS = {
    "low": (0.25, 0.61),
    "medium": (0.55, 1.26),
    "high": (0.95, 1.47),
}


class InvalidScenario(SlipFeedbackError, ValueError):
    pass


@dataclass(frozen=True)
class LiftScenario:
    mu_s: float
    mu_k: Optional[float] = None  # defaults to 0.8 * mu_s
    mass_kg: float = 0.280
    grip_target_N: float = 3.5
    contact_t: float = 0.2
    lift_t: float = 1.4
    release_start_t: float = 2.5
    release_rate_Nps: float = 1.0
    support_fraction: float = 0.5
    load_N: Optional[float] = None  # overrides the support model when set
    noise_sigma_N: float = 0.003
    sample_rate_hz: float = 1000.0
    seed: int = 0
    ramp_s: float = 0.5
    creep_span_N: float = 0.3
    creep_rise_N: float = 0.08
    post_slip_s: float = 0.5

    def __post_init__(self):
        if self.mu_k is None:
            object.__setattr__(self, "mu_k", 0.8 * self.mu_s)
        if not self.mu_s > 0:
            raise InvalidScenario("mu_s must be > 0")
        if not 0 < self.mu_k <= self.mu_s:
            raise InvalidScenario("need 0 < mu_k <= mu_s")
        if not 0 <= self.support_fraction <= 1:
            raise InvalidScenario("support_fraction must lie in [0, 1]")
        if not self.contact_t < self.lift_t < self.release_start_t:
            raise InvalidScenario("need contact_t < lift_t < release_start_t")
        if self.contact_t < 0:
            raise InvalidScenario("contact_t must be >= 0")
        if self.load_N is not None and self.load_N < 0:
            raise InvalidScenario("load_N must be >= 0")
        for name in ("mass_kg", "grip_target_N", "release_rate_Nps", "sample_rate_hz",
                     "ramp_s", "creep_span_N", "post_slip_s"):
            if not getattr(self, name) > 0:
                raise InvalidScenario(f"{name} must be > 0")
        if self.grip_target_N <= 0.5:
            raise InvalidScenario("grip_target_N must exceed the 0.5 N contact level")
        if self.noise_sigma_N < 0 or self.creep_rise_N < 0:
            raise InvalidScenario("noise_sigma_N and creep_rise_N must be >= 0")

    @property
    def load(self) -> float:
        """Tangential force needed to hold the object up."""
        if self.load_N is not None:
            return self.load_N
        return (1 - self.support_fraction) * self.mass_kg * G

    def with_overrides(self, **kw) -> "LiftScenario":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "mu_s" in kw and "mu_k" not in kw:
            kw["mu_k"] = 0.8 * kw["mu_s"]
        if "support_fraction" in kw and "load_N" not in kw:
            # switch back to the support model
            kw["load_N"] = None
        return replace(self, **kw)


def surface_preset(level) -> LiftScenario:
    """Calibrated scenario for a FrictionLevel (or its name)."""
    name = getattr(level, "name", level)
    mu, load = PRESETS[str(name).lower()]
    return LiftScenario(mu_s=mu, load_N=load)


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3 - 2 * x)


def simulate_lift(sc: LiftScenario) -> ForceTrace:
    fs = sc.sample_rate_hz
    grip, r = sc.grip_target_N, sc.release_rate_Nps
    load = sc.load
    horizon = sc.release_start_t + grip / r + sc.post_slip_s + LET_GO_S + TAIL_S
    t = np.arange(int(np.ceil(horizon * fs)) + 1) / fs

    f_n = (0.5 * _smoothstep((t - sc.contact_t) / sc.ramp_s)
           + (grip - 0.5) * _smoothstep((t - sc.contact_t - sc.ramp_s) / sc.ramp_s))
    f_n = np.where(t > sc.release_start_t,
                   np.maximum(grip - r * (t - sc.release_start_t), 0.0), f_n)
    required = load * _smoothstep((t - sc.lift_t) / sc.ramp_s)
    f_t = required.copy()

    onset = macro = None
    end_t = sc.release_start_t + grip / r + TAIL_S
    if load > 0:
        viol = (required + sc.creep_rise_N > sc.mu_s * f_n) & (t >= sc.lift_t)
        i_m = int(np.argmax(viol))
        macro = float(t[i_m])
        onset = max(macro - sc.creep_span_N / r, sc.lift_t)
        creep = (t >= onset) & (t < macro)
        if macro > onset:
            f_t[creep] += sc.creep_rise_N * ((t[creep] - onset) / (macro - onset)) ** 2
        f_t = np.where(t >= macro, sc.mu_k * f_n, f_t)
        let_go = macro + sc.post_slip_s
        keep = 1 - _smoothstep((t - let_go) / LET_GO_S)
        f_n = f_n * keep
        f_t = f_t * keep
        end_t = let_go + LET_GO_S + TAIL_S

    mask = t <= end_t
    t, f_n, f_t = t[mask], f_n[mask], f_t[mask]
    if sc.noise_sigma_N > 0:
        rng = np.random.default_rng(sc.seed)
        f_n = np.abs(f_n + rng.normal(0.0, sc.noise_sigma_N, t.size))
        f_t = np.abs(f_t + rng.normal(0.0, sc.noise_sigma_N, t.size))

    truth = GroundTruth(
        mu_s=sc.mu_s,
        mu_k=sc.mu_k,
        slip_onset_t=onset,
        macro_slip_t=macro,
        mass_kg=sc.mass_kg,
        load_N=load,
        release_start_t=sc.release_start_t,
        lift_t=sc.lift_t,
    )
    return ForceTrace(t, f_n, f_t, fs, Source.SIMULATED, truth)
