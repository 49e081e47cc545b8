"""Online slip detector: one force sample in, at most one motor command out.

The detector walks the grasp through its phases, arms a fixed delay after
the normal-force peak, captures the peak slip ratio over that hold window,
and then checks two slip conditions on every sample:

* the smoothed second derivative of tangential force exceeds
  ``accel_threshold`` (intensity from the low branch, scaled by the gain K);
* the slip ratio has moved at least ``sr_diff_threshold`` away from its
  peak while the smoothed tangential force is at or above ``ft_floor_N``
  (intensity from the slip-ratio mapping).

When both hold on the same sample the acceleration check wins.

Streaming delay: the slip-ratio path lags the input by ``(w-1)/2`` samples,
the acceleration path by ``smooth_passes*(w-1)/2 + 2`` samples. Commands
carry the timestamp of the sample that produced them.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Iterable, Optional

import numpy as np

from .core import (
    Cause,
    DerivedSeries,
    DetectorConfig,
    ForceSample,
    ForceTrace,
    Phase,
    SessionLog,
    SlipEvent,
    SlipFeedbackError,
    VibrationCommand,
    validate_config,
)
from .encoder import IntensityInputs, eq1_low, eq4_slip_ratio


class NonMonotoneTimestamp(SlipFeedbackError, ValueError):
    pass


class StepAfterFinish(SlipFeedbackError, RuntimeError):
    pass


class EmptySession(SlipFeedbackError, ValueError):
    pass


_SLIP_CAUSES = (Cause.ACCEL, Cause.SLIP_RATIO)
_RESYNC_EVERY = 4096


class _RunningMean:
    """Trailing mean over the last ``w`` pushed values (None until full)."""

    __slots__ = ("w", "buf", "total", "count")

    def __init__(self, w: int):
        self.w = w
        self.buf = deque(maxlen=w)
        self.total = 0.0
        self.count = 0

    def push(self, x: float) -> Optional[float]:
        buf = self.buf
        if len(buf) == self.w:
            self.total -= buf[0]
        buf.append(x)
        self.total += x
        self.count += 1
        if self.count % _RESYNC_EVERY == 0:
            # bound floating-point drift of the running sum
            self.total = math.fsum(buf)
        if len(buf) < self.w:
            return None
        return self.total / self.w


class SlipDetector:
    """Single-owner sequential state machine; feed samples in time order."""

    def __init__(self, cfg: Optional[DetectorConfig] = None,
                 sample_rate_hz: Optional[float] = None):
        self.cfg = cfg = validate_config(cfg or DetectorConfig())
        self._dt = 1.0 / sample_rate_hz if sample_rate_hz else None
        w, h = cfg.smooth_window, cfg.half_window
        self._h = h
        self._fn_ma = _RunningMean(w)
        self._ft_ma = _RunningMean(w)
        self._cascade = [_RunningMean(w) for _ in range(cfg.smooth_passes - 1)]
        self._tail = deque(maxlen=5)
        self._times = deque(maxlen=h + 1)

        self.phase = Phase.IDLE
        self.K = cfg.K_gain
        self.t_start: Optional[float] = None
        self.t_peak: Optional[float] = None
        self.fn_peak = -math.inf
        self.sr_peak: Optional[float] = None
        self.last_command: Optional[VibrationCommand] = None
        self._cand_ft = -math.inf
        self._cand_sr: Optional[float] = None
        self._cue_end = -math.inf
        self._last_t: Optional[float] = None
        self._n = 0
        self._finished = False

        self._phases: list = []
        self._events: list = []
        self._commands: list = []
        self._rows: list = []

    # -- public API ---------------------------------------------------------

    def step(self, sample: ForceSample) -> Optional[VibrationCommand]:
        return self._step(sample.t, sample.f_n, sample.f_t)

    def run(self, samples: Iterable[ForceSample]) -> SessionLog:
        for s in samples:
            self._step(s.t, s.f_n, s.f_t)
        return self.finish()

    def finish(self) -> SessionLog:
        if self._n == 0:
            raise EmptySession("no samples were processed")
        self._finished = True
        if self._rows:
            cols = np.array(self._rows, dtype=float).T
            derived = DerivedSeries(*cols)
        else:
            derived = DerivedSeries.empty()
        return SessionLog(
            phases=tuple(self._phases),
            events=tuple(self._events),
            commands=tuple(self._commands),
            derived=derived,
        )

    # -- internals ------------------------------------------------------------

    def _enter(self, phase: Phase, t: float) -> None:
        if phase > self.phase:
            self.phase = phase
            self._phases.append((t, phase))

    def _emit(self, t: float, u: float, cause: Cause) -> VibrationCommand:
        cmd = VibrationCommand(t, u, cause)
        self._commands.append(cmd)
        self.last_command = cmd
        return cmd

    def _step(self, t: float, f_n: float, f_t: float) -> Optional[VibrationCommand]:
        if self._finished:
            raise StepAfterFinish("detector already finished")
        if self._last_t is not None:
            if not t > self._last_t:
                raise NonMonotoneTimestamp(f"t={t} does not follow t={self._last_t}")
            if self._dt is None:
                self._dt = t - self._last_t
        self._last_t = t
        self._n += 1
        cfg = self.cfg

        # streaming filters
        self._times.append(t)
        fn_s = self._fn_ma.push(f_n)
        ft_s = self._ft_ma.push(f_t)
        s = ft_s
        for stage in self._cascade:
            if s is None:
                break
            s = stage.push(s)
        if s is not None:
            self._tail.append(s)
        t_lag = sr = None
        if ft_s is not None:
            t_lag = self._times[0]
            sr = fn_s / max(ft_s, cfg.ft_floor_N)
        dft = d2 = None
        if len(self._tail) == 5:
            q = self._tail
            dt = self._dt
            dft = (q[3] - q[1]) / (2 * dt)
            d2 = (q[4] - 2 * q[2] + q[0]) / (4 * dt * dt)
            self._rows.append((t, ft_s, dft, d2, sr))

        cmd = None
        phase = self.phase
        if phase is Phase.IDLE:
            self._phases.append((t, Phase.IDLE))
            self._enter(Phase.APPROACH, t)
            phase = self.phase

        if phase < Phase.CONTACT and f_n >= cfg.contact_threshold_N:
            self._enter(Phase.CONTACT, t)
            self._cue_end = t + cfg.contact_cue_duration_s
            cmd = self._emit(t, cfg.contact_cue_intensity, Cause.CONTACT_CUE)
            phase = self.phase

        if Phase.CONTACT <= phase <= Phase.HOLD:
            if phase is Phase.CONTACT and t >= self._cue_end:
                self._enter(Phase.GRIPPING, t)
            if phase < Phase.HOLD:
                if f_n >= cfg.grip_target_N:
                    self._enter(Phase.HOLD, t)
                    self._set_peak(t, f_n)
                elif f_n > self.fn_peak:
                    self._set_peak(t, f_n)
            if t_lag is not None and self.t_peak <= t_lag <= self.t_start:
                if ft_s > self._cand_ft:
                    self._cand_ft, self._cand_sr = ft_s, sr
            if t_lag is not None and t_lag >= self.t_start and self._cand_sr is not None:
                self.sr_peak = self._cand_sr
                self._enter(Phase.ARMED, t)
            phase = self.phase

        if Phase.HOLD <= phase < Phase.RELEASED and f_n < cfg.contact_threshold_N:
            if self.last_command is not None and self.last_command.cause in _SLIP_CAUSES:
                cmd = self._emit(t, 0.0, Cause.SILENT)
            self._enter(Phase.RELEASED, t)
            return cmd

        if phase in (Phase.ARMED, Phase.SLIPPING) and d2 is not None:
            cmd = self._evaluate(t, d2, sr, ft_s)
        return cmd

    def _set_peak(self, t: float, f_n: float) -> None:
        self.fn_peak = f_n
        self.t_peak = t
        self.t_start = t + self.cfg.arming_delay_s
        self._cand_ft = -math.inf
        self._cand_sr = None

    def _evaluate(self, t: float, d2: float, sr: float,
                  ft_s: float) -> Optional[VibrationCommand]:
        cfg = self.cfg
        delta_a = cfg.accel_threshold - d2
        delta_sr = abs(self.sr_peak - sr)
        if delta_a < 0:
            cause = Cause.ACCEL
            u = eq1_low(IntensityInputs(delta_a, self.sr_peak, f_peak=self.K * cfg.f_peak,
                                        k_const=cfg.k_const, u_min=cfg.u_min,
                                        u_max=cfg.u_max))
        elif delta_sr >= cfg.sr_diff_threshold and ft_s >= cfg.ft_floor_N:
            # below the floor SR only tracks f_n and says nothing about slip
            cause = Cause.SLIP_RATIO
            u = eq4_slip_ratio(IntensityInputs(delta_a, self.sr_peak, f_peak=cfg.f_peak,
                                               k_const=cfg.k_const, u_min=cfg.u_min,
                                               u_max=cfg.u_max),
                               delta_sr, cfg.sr_diff_threshold)
        else:
            last = self.last_command
            if last is not None and last.cause in _SLIP_CAUSES:
                return self._emit(t, 0.0, Cause.SILENT)
            return None

        self._events.append(SlipEvent(t, cause, delta_a, delta_sr, self.sr_peak, u))
        cmd = self._emit(t, u, cause)
        if u >= cfg.u_max:
            self.K *= cfg.gain_backoff
        self._enter(Phase.SLIPPING, t)
        return cmd


def new_detector(cfg: Optional[DetectorConfig] = None,
                 sample_rate_hz: Optional[float] = None) -> SlipDetector:
    return SlipDetector(cfg, sample_rate_hz)


def detect(trace: ForceTrace, cfg: Optional[DetectorConfig] = None) -> SessionLog:
    """Run a fresh detector over a whole trace."""
    det = SlipDetector(cfg, trace.sample_rate_hz)
    step = det._step
    for t, fn, ft in zip(trace.t.tolist(), trace.f_n.tolist(), trace.f_t.tolist()):
        step(t, fn, ft)
    return det.finish()
