"""Virtual experiments: single lift trials and a simulated 2AFC study.

A trial simulates a preset lift, runs the detector over it and keeps the
numbers a participant-facing study cares about (the first slip cue
intensity, when the acceleration trigger fired relative to release start,
the peak tangential force while holding).

The 2AFC observer sees the first slip-cue intensity of each stimulus
perturbed by multiplicative Weber noise and calls the weaker one "more
slippery".
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .core import Cause, DetectorConfig, ForceTrace, SessionLog, SlipFeedbackError
from .detector import detect
from .friction import FrictionLevel
from .signal import derive, smooth
from .simulate import LiftScenario, simulate_lift, surface_preset

REPORT_FORMAT = "slipfeedback-report/1"
LEVEL_ORDER = (FrictionLevel.HIGH, FrictionLevel.MEDIUM, FrictionLevel.LOW)
DEFAULT_PAIRS = (
    (FrictionLevel.HIGH, FrictionLevel.MEDIUM),
    (FrictionLevel.MEDIUM, FrictionLevel.LOW),
    (FrictionLevel.HIGH, FrictionLevel.LOW),
)
# slack between the end of the arming delay and the start of release
RELEASE_MARGIN_S = 0.3


class OddReps(SlipFeedbackError, ValueError):
    pass


class EmptyRecords(SlipFeedbackError, ValueError):
    pass


def bench_config(**overrides) -> DetectorConfig:
    """Detector settings used for the desk-scale experiments.

    1 s arming delay, and a 121-sample window applied three times before
    differentiation so the second-derivative noise floor sits well under
    the 0.3 N/s^2 threshold at the simulator's default noise.
    """
    return DetectorConfig(arming_delay_s=1.0, smooth_window=121,
                          smooth_passes=3).with_overrides(**overrides)


def trial_scenario(level: FrictionLevel, seed: int, cfg: DetectorConfig,
                   release_rate: float = 1.0, **overrides) -> LiftScenario:
    sc = surface_preset(level).with_overrides(seed=seed, release_rate_Nps=release_rate,
                                              **overrides)
    earliest = sc.contact_t + 2 * sc.ramp_s + cfg.arming_delay_s + RELEASE_MARGIN_S
    if sc.release_start_t < earliest:
        sc = replace(sc, release_start_t=earliest)
    return sc


@dataclass(frozen=True)
class TrialRecord:
    surface: FrictionLevel
    seed: int
    release_rate: float
    first_slip_intensity: Optional[float]  # None when no slip cue fired
    first_slip_t: Optional[float]
    trigger: Optional[Cause]  # trigger of the first slip cue
    accel_t: Optional[float]
    slip_latency_s: Optional[float]  # first accel trigger - release start
    release_start_t: float
    slip_onset_t: Optional[float]
    macro_slip_t: Optional[float]
    peak_ft: float
    n_events: int

    @property
    def detected(self) -> bool:
        return self.first_slip_intensity is not None

    @property
    def log_ref(self) -> str:
        return f"{self.surface.value}-seed{self.seed}-rate{self.release_rate:g}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["surface"] = self.surface.value
        d["trigger"] = self.trigger.value if self.trigger else None
        d["log_ref"] = self.log_ref
        return d

    @classmethod
    def from_dict(cls, d) -> "TrialRecord":
        d = dict(d)
        d.pop("log_ref", None)
        d["surface"] = FrictionLevel(d["surface"])
        d["trigger"] = Cause(d["trigger"]) if d["trigger"] else None
        return cls(**d)


def trial_session(level: FrictionLevel, seed: int, cfg: Optional[DetectorConfig] = None,
                  release_rate: float = 1.0, **overrides) -> Tuple[ForceTrace, SessionLog]:
    cfg = cfg or bench_config()
    trace = simulate_lift(trial_scenario(level, seed, cfg, release_rate, **overrides))
    return trace, detect(trace, cfg)


def summarize_trial(level: FrictionLevel, seed: int, release_rate: float,
                    trace: ForceTrace, log: SessionLog, cfg: DetectorConfig) -> TrialRecord:
    truth = trace.ground_truth
    first = log.events[0] if log.events else None
    accel = log.first_event(Cause.ACCEL)
    hold = trace.t < truth.release_start_t
    peak = float(smooth(trace.f_t, cfg.smooth_window)[hold].max())
    return TrialRecord(
        surface=level,
        seed=seed,
        release_rate=float(release_rate),
        first_slip_intensity=first.intensity if first else None,
        first_slip_t=first.t if first else None,
        trigger=first.trigger if first else None,
        accel_t=accel.t if accel else None,
        slip_latency_s=accel.t - truth.release_start_t if accel else None,
        release_start_t=truth.release_start_t,
        slip_onset_t=truth.slip_onset_t,
        macro_slip_t=truth.macro_slip_t,
        peak_ft=peak,
        n_events=len(log.events),
    )


@functools.lru_cache(maxsize=4096)
def _cached_trial(level, seed, cfg, release_rate, overrides) -> TrialRecord:
    trace, log = trial_session(level, seed, cfg, release_rate, **dict(overrides))
    return summarize_trial(level, seed, release_rate, trace, log, cfg)


def run_trial(level: FrictionLevel, seed: int, cfg: Optional[DetectorConfig] = None,
              release_rate: float = 1.0, **overrides) -> TrialRecord:
    """Simulate one preset lift and run the detector over it.

    A trial without any slip cue is returned with ``detected == False``.
    Results are memoised on all arguments.
    """
    return _cached_trial(level, int(seed), cfg or bench_config(), float(release_rate),
                         tuple(sorted(overrides.items())))


# -- 2AFC -------------------------------------------------------------------


@dataclass(frozen=True)
class ObserverModel:
    weber_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if not self.weber_fraction >= 0:
            raise ValueError("weber_fraction must be >= 0")


@dataclass(frozen=True)
class Presentation:
    pair: Tuple[FrictionLevel, FrictionLevel]
    rep: int
    order: int  # position in the shuffled session
    first: FrictionLevel
    second: FrictionLevel
    u_first: float
    u_second: float
    perceived_first: float
    perceived_second: float
    choice: FrictionLevel  # stimulus judged more slippery

    @property
    def correct(self) -> bool:
        return self.choice is min(self.pair, key=lambda lv: lv.mu)

    @property
    def higher_first(self) -> bool:
        return self.first.mu > self.second.mu

    def judgements(self) -> List[Tuple[FrictionLevel, FrictionLevel]]:
        """(actual, judged) for both stimuli: the chosen one gets the lower label."""
        lo, hi = sorted(self.pair, key=lambda lv: lv.mu)
        other = self.second if self.choice is self.first else self.first
        return [(self.choice, lo), (other, hi)]


def pair_name(pair) -> str:
    return "-".join(lv.short for lv in pair)


@dataclass
class AccuracyReport:
    presentations: List[Presentation]
    weber_fraction: float
    reps: int
    per_pair: dict = field(default_factory=dict)

    def __post_init__(self):
        for p in self.presentations:
            stats = self.per_pair.setdefault(pair_name(p.pair),
                                             {"n": 0, "correct": 0, "higher_first": 0})
            stats["n"] += 1
            stats["correct"] += p.correct
            stats["higher_first"] += p.higher_first
        for stats in self.per_pair.values():
            n = stats["n"]
            stats["accuracy"] = 100.0 * stats["correct"] / n
            # binomial standard error under the chance hypothesis, in percent
            stats["chance_se"] = 100.0 * math.sqrt(0.25 / n)

    def accuracy(self, pair) -> float:
        key = pair if isinstance(pair, str) else pair_name(pair)
        return self.per_pair[key]["accuracy"]

    @property
    def overall(self) -> float:
        n = len(self.presentations)
        return 100.0 * sum(p.correct for p in self.presentations) / n

    def judgements(self) -> list:
        out = []
        for p in self.presentations:
            out.extend(p.judgements())
        return out

    def confusion(self) -> np.ndarray:
        return confusion_matrix(self.judgements())

    def to_dict(self) -> dict:
        return {
            "weber_fraction": self.weber_fraction,
            "reps": self.reps,
            "overall_accuracy": self.overall,
            "pairs": {k: dict(v) for k, v in sorted(self.per_pair.items())},
            "confusion": {
                "levels": [lv.value for lv in LEVEL_ORDER],
                "counts": self.confusion().tolist(),
            },
        }


def run_2afc(pairs: Sequence = DEFAULT_PAIRS, reps: int = 30,
             observer: Optional[ObserverModel] = None, cfg: Optional[DetectorConfig] = None,
             seed: int = 0, release_rate: float = 1.0) -> AccuracyReport:
    """Simulated two-interval discrimination of slip-cue intensity.

    Each rep of a pair presents both surfaces once, the higher-friction one
    first in exactly half of the reps. Trial order is shuffled with ``seed``;
    stimulus trace seeds are ``seed + rep`` so a surface shares its trials
    across pairs.
    """
    if reps <= 0 or reps % 2:
        raise OddReps(f"reps must be a positive even number, got {reps}")
    observer = observer or ObserverModel()
    cfg = cfg or bench_config()
    plan = []
    for pair in pairs:
        lo, hi = sorted(pair, key=lambda lv: lv.mu)
        if lo is hi:
            raise ValueError("a pair needs two different surfaces")
        for rep in range(reps):
            first, second = (hi, lo) if rep < reps // 2 else (lo, hi)
            plan.append((tuple(pair), rep, first, second))
    order = np.random.default_rng(seed).permutation(len(plan))
    noise = np.random.default_rng(observer.seed)
    w = observer.weber_fraction

    shown = []
    for k, idx in enumerate(order.tolist()):
        pair, rep, first, second = plan[idx]
        u = []
        for lv in (first, second):
            rec = run_trial(lv, seed + rep, cfg, release_rate)
            u.append(rec.first_slip_intensity or 0.0)
        z = noise.standard_normal(2)
        p1, p2 = u[0] * (1 + w * z[0]), u[1] * (1 + w * z[1])
        choice = first if p1 <= p2 else second
        shown.append(Presentation(pair, rep, k, first, second, u[0], u[1],
                                  float(p1), float(p2), choice))
    return AccuracyReport(shown, w, reps)


def confusion_matrix(trials: Iterable[Tuple[FrictionLevel, FrictionLevel]]) -> np.ndarray:
    """3x3 counts, rows = stimulus, columns = response, ordered High, Medium, Low.

    Every stimulus class must appear at least once.
    """
    index = {lv: i for i, lv in enumerate(LEVEL_ORDER)}
    m = np.zeros((3, 3), dtype=int)
    for actual, judged in trials:
        m[index[FrictionLevel(actual)], index[FrictionLevel(judged)]] += 1
    if m.sum() == 0:
        raise EmptyRecords("no trials")
    empty = [LEVEL_ORDER[i].value for i in np.flatnonzero(m.sum(axis=1) == 0)]
    if empty:
        raise EmptyRecords(f"no trials for stimulus class(es): {', '.join(empty)}")
    return m


# -- reports ----------------------------------------------------------------


def _stats(values) -> dict:
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if v.size == 0:
        return {"n": 0, "mean": None, "std": None, "min": None, "max": None}
    return {"n": int(v.size), "mean": float(v.mean()), "std": float(v.std()),
            "min": float(v.min()), "max": float(v.max())}


def _sort_key(rec: TrialRecord):
    return (LEVEL_ORDER.index(rec.surface), rec.release_rate, rec.seed)


def report(records: Sequence[TrialRecord], afc: Optional[AccuracyReport] = None,
           cfg: Optional[DetectorConfig] = None) -> dict:
    """Machine-readable summary of a batch of trials (and optionally a 2AFC run)."""
    if not records:
        raise EmptyRecords("report needs at least one trial")
    records = sorted(records, key=_sort_key)
    surfaces = {}
    for lv in LEVEL_ORDER:
        rs = [r for r in records if r.surface is lv]
        if not rs:
            continue
        surfaces[lv.value] = {
            "trials": len(rs),
            "detected": sum(r.detected for r in rs),
            "first_slip_intensity": _stats(r.first_slip_intensity for r in rs),
            "slip_latency_s": _stats(r.slip_latency_s for r in rs),
            "peak_ft_N": _stats(r.peak_ft for r in rs),
        }
    return {
        "format": REPORT_FORMAT,
        "config": cfg.to_dict() if cfg else None,
        "surfaces": surfaces,
        "afc": afc.to_dict() if afc else None,
        "trials": [r.to_dict() for r in records],
    }


def dumps_report(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def loads_report(text: str) -> dict:
    doc = json.loads(text)
    if doc.get("format") != REPORT_FORMAT:
        raise ValueError(f"not a {REPORT_FORMAT} document")
    return doc


SERIES_FIELDS = ("surface", "seed", "t", "fn_N", "ft_N", "ft_smooth_N", "d2ft_Nps2", "sr", "u")


def series_rows(level: FrictionLevel, seed: int, cfg: Optional[DetectorConfig] = None,
                release_rate: float = 1.0, every: int = 10):
    """Plot-ready rows for one trial: forces, smoothed f_t, d2f_t, slip ratio, drive.

    The signal columns are the centred batch estimates; ``u`` is the drive
    level in effect at each sample. Every ``every``-th sample is kept.
    """
    cfg = cfg or bench_config()
    trace, log = trial_session(level, seed, cfg, release_rate)
    d = derive(trace, cfg.smooth_window, cfg.smooth_passes, cfg.ft_floor_N)
    u = np.zeros(len(trace))
    for cmd in log.commands:
        u[np.searchsorted(trace.t, cmd.t):] = cmd.u
    for i in range(0, len(trace), every):
        yield (level.value, seed, float(trace.t[i]), float(trace.f_n[i]), float(trace.f_t[i]),
               float(d.ft_smooth[i]), float(d.d2ft[i]), float(d.sr[i]), float(u[i]))


def series_csv(levels: Sequence[FrictionLevel] = LEVEL_ORDER, seed: int = 0,
               cfg: Optional[DetectorConfig] = None, release_rate: float = 1.0,
               every: int = 10) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(SERIES_FIELDS)
    for lv in levels:
        for row in series_rows(lv, seed, cfg, release_rate, every):
            out.writerow([row[0], row[1]] + [repr(x) for x in row[2:]])
    return buf.getvalue()
