"""Trace CSV files, ground-truth JSON, NDJSON event logs and paced replay."""

from __future__ import annotations

import csv
import json
import math
import queue
import threading
import time
from typing import Iterator, Optional

import numpy as np

from .core import (
    Cause,
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
from .detector import new_detector

EVENTS_FORMAT = "slipfeedback-events/1"
EVENT_FIELDS = ("t", "kind", "intensity", "delta_a", "delta_sr", "sr_peak", "phase")
TRACE_COLUMNS = ("time_s", "fn_N", "ft_N")
RAW_COLUMNS = ("time_s", "fx_N", "fy_N", "fz_N", "tx_Nm", "ty_Nm", "tz_Nm")
AXES = ("x", "y", "z")

_KIND_OF = {
    Cause.CONTACT_CUE: "contact",
    Cause.ACCEL: "slip_accel",
    Cause.SLIP_RATIO: "slip_ratio",
    Cause.SILENT: "silent_transition",
}
_CAUSE_OF = {v: k for k, v in _KIND_OF.items()}


class ParseError(SlipFeedbackError, ValueError):
    def __init__(self, line: int, reason: str):
        self.line = line
        super().__init__(f"line {line}: {reason}")


class NonMonotoneTime(ParseError):
    pass


class EmptyFile(SlipFeedbackError, ValueError):
    pass


class IoError(SlipFeedbackError, OSError):
    pass


def _open(path, mode="r"):
    try:
        return open(path, mode, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"{path}: {exc.strerror or exc}") from exc


# -- traces -----------------------------------------------------------------


def _rate_from_steps(t: np.ndarray) -> float:
    return round(1.0 / float(np.median(np.diff(t))), 6)


def read_trace(path, normal_axis: str = "z") -> ForceTrace:
    """Load a 3-column (time_s, fn_N, ft_N) or raw 6-axis force/torque CSV.

    Raw rows are reduced to f_n = |normal component| and f_t = norm of the
    two shear components. The sample rate is taken from the median step; a
    file whose steps wander by more than 1% is resampled onto that grid.
    """
    if normal_axis not in AXES:
        raise ValueError(f"normal_axis must be one of {AXES}")
    with _open(path) as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyFile(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if tuple(header[:3]) == TRACE_COLUMNS:
        cols, raw = [0, 1, 2], False
    elif tuple(header[:7]) == RAW_COLUMNS:
        cols, raw = list(range(7)), True
    else:
        raise ParseError(1, f"unrecognised header {','.join(header)!r}")

    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(cols):
            raise ParseError(lineno, f"expected {len(cols)} fields, got {len(row)}")
        try:
            vals = [float(row[c]) for c in cols]
        except ValueError:
            raise ParseError(lineno, "non-numeric field") from None
        if not all(math.isfinite(v) for v in vals):
            raise ParseError(lineno, "non-finite field")
        if data and not vals[0] > data[-1][1][0]:
            raise NonMonotoneTime(lineno, f"time {vals[0]} does not follow {data[-1][1][0]}")
        data.append((lineno, vals))
    if len(data) < 2:
        raise EmptyFile(f"{path}: need at least 2 samples, got {len(data)}")

    arr = np.array([v for _, v in data])
    t = arr[:, 0]
    if raw:
        k = AXES.index(normal_axis)
        f_n = np.abs(arr[:, 1 + k])
        shear = [arr[:, 1 + j] for j in range(3) if j != k]
        f_t = np.hypot(*shear)
    else:
        f_n, f_t = arr[:, 1], arr[:, 2]
        bad = np.flatnonzero((f_n < 0) | (f_t < 0))
        if bad.size:
            raise ParseError(data[bad[0]][0], "force magnitudes must be >= 0")

    rate = _rate_from_steps(t)
    nominal = 1.0 / rate
    if np.abs(np.diff(t) - nominal).max() > 0.01 * nominal:
        n = int(math.floor((t[-1] - t[0]) * rate + 1e-9)) + 1
        grid = t[0] + np.arange(n) / rate
        f_n, f_t = np.interp(grid, t, f_n), np.interp(grid, t, f_t)
        t = grid
    return ForceTrace(t, f_n, f_t, rate, Source.RECORDED)


def write_trace(trace: ForceTrace, path) -> None:
    with _open(path, "w") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for t, fn, ft in zip(trace.t.tolist(), trace.f_n.tolist(), trace.f_t.tolist()):
            fh.write(f"{t!r},{fn!r},{ft!r}\n")


def write_truth(truth: GroundTruth, path) -> None:
    with _open(path, "w") as fh:
        fh.write(json.dumps(truth.to_dict(), indent=2) + "\n")


def read_truth(path) -> GroundTruth:
    with _open(path) as fh:
        try:
            return GroundTruth.from_dict(json.load(fh))
        except (json.JSONDecodeError, TypeError) as exc:
            raise ParseError(1, f"bad ground-truth document: {exc}") from None


# -- configs ----------------------------------------------------------------


def load_config(path) -> DetectorConfig:
    """Flat JSON object whose keys are DetectorConfig field names."""
    with _open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfig("<file>", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InvalidConfig("<file>", "config must be a JSON object")
    for key, value in doc.items():
        if isinstance(value, (dict, list)):
            raise InvalidConfig(key, "config must be flat")
    return DetectorConfig.from_mapping(doc)


# -- events -----------------------------------------------------------------


def _record(t, kind, phase, intensity=None, delta_a=None, delta_sr=None, sr_peak=None):
    return {"t": t, "kind": kind, "intensity": intensity, "delta_a": delta_a,
            "delta_sr": delta_sr, "sr_peak": sr_peak, "phase": phase}


def event_records(log: SessionLog) -> list:
    """Time-ordered records; at equal time, phase changes precede commands."""
    phase_t = [t for t, _ in log.phases]

    def phase_at(t):
        i = int(np.searchsorted(phase_t, t, side="right")) - 1
        return log.phases[i][1].label if i >= 0 else None

    out = [(t, 0, i, _record(t, "phase", p.label)) for i, (t, p) in enumerate(log.phases)]
    slip = iter(log.events)
    for i, cmd in enumerate(log.commands):
        kind = _KIND_OF[cmd.cause]
        if cmd.cause in (Cause.ACCEL, Cause.SLIP_RATIO):
            ev = next(slip)
            rec = _record(cmd.t, kind, phase_at(cmd.t), cmd.u, ev.delta_a, ev.delta_sr,
                          ev.sr_peak)
        else:
            rec = _record(cmd.t, kind, phase_at(cmd.t), cmd.u)
        out.append((cmd.t, 1, i, rec))
    out.sort(key=lambda x: x[:3])
    return [r for *_, r in out]


def format_events(log: SessionLog, meta: Optional[dict] = None) -> str:
    header = {"format": EVENTS_FORMAT, "fields": list(EVENT_FIELDS)}
    if meta:
        header.update(meta)
    lines = [json.dumps(header, allow_nan=False)]
    lines += [json.dumps(r, allow_nan=False) for r in event_records(log)]
    return "\n".join(lines) + "\n"


def write_text(path, text: str) -> None:
    with _open(path, "w") as fh:
        fh.write(text)


def write_events(log: SessionLog, path, meta: Optional[dict] = None) -> None:
    text = format_events(log, meta)
    with _open(path, "w") as fh:
        fh.write(text)


def parse_events(text: str) -> SessionLog:
    lines = text.splitlines()
    if not lines:
        raise EmptyFile("events file is empty")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError:
        raise ParseError(1, "header is not JSON") from None
    if not isinstance(header, dict) or header.get("format") != EVENTS_FORMAT:
        raise ParseError(1, f"not a {EVENTS_FORMAT} file")
    phases, events, commands = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            kind = rec["kind"]
            t = rec["t"]
            if kind == "phase":
                phases.append((t, Phase[rec["phase"].upper()]))
                continue
            cause = _CAUSE_OF[kind]
            commands.append(VibrationCommand(t, rec["intensity"], cause))
            if cause in (Cause.ACCEL, Cause.SLIP_RATIO):
                events.append(SlipEvent(t, cause, rec["delta_a"], rec["delta_sr"],
                                        rec["sr_peak"], rec["intensity"]))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(lineno, f"bad event record: {exc}") from None
    return SessionLog(tuple(phases), tuple(events), tuple(commands))


def read_events(path) -> SessionLog:
    """Reload an events file; the derived series are not stored and come back empty."""
    with _open(path) as fh:
        return parse_events(fh.read())


# -- replay -----------------------------------------------------------------

_DONE = object()


def replay_stream(path, rate_multiplier: float = math.inf, normal_axis: str = "z",
                  maxsize: int = 1024) -> Iterator[ForceSample]:
    """Yield the samples of a trace file paced at ``rate_multiplier`` x real time.

    A producer thread paces samples into a bounded FIFO queue; this
    generator is the consumer, so delivery is in order and lossless. The
    file is read before the first sample is produced, so a missing or
    malformed file raises here.
    """
    if not rate_multiplier > 0:
        raise ValueError("rate_multiplier must be > 0")
    trace = read_trace(path, normal_axis)
    return _paced(trace, rate_multiplier, maxsize)


def _paced(trace: ForceTrace, rate: float, maxsize: int) -> Iterator[ForceSample]:
    q: queue.Queue = queue.Queue(maxsize=maxsize)
    stop = threading.Event()

    def produce():
        try:
            t0 = trace.t[0]
            start = time.perf_counter()
            for sample in trace:
                if math.isfinite(rate):
                    delay = start + (sample.t - t0) / rate - time.perf_counter()
                    if delay > 0:
                        time.sleep(delay)
                while not stop.is_set():
                    try:
                        q.put(sample, timeout=0.1)
                        break
                    except queue.Full:
                        continue
                if stop.is_set():
                    return
            q.put(_DONE)
        except BaseException as exc:  # hand the failure to the consumer
            q.put(exc)

    worker = threading.Thread(target=produce, name="trace-replay", daemon=True)
    worker.start()
    try:
        while True:
            item = q.get()
            if item is _DONE:
                break
            if isinstance(item, BaseException):
                raise item
            yield item
    finally:
        stop.set()
        worker.join(timeout=1.0)


def replay(path, cfg: Optional[DetectorConfig] = None, rate_multiplier: float = math.inf,
           normal_axis: str = "z") -> SessionLog:
    """Stream a trace file through a fresh detector in paced real time."""
    trace = read_trace(path, normal_axis)
    det = new_detector(cfg, trace.sample_rate_hz)
    for sample in _paced(trace, rate_multiplier, 1024):
        det.step(sample)
    return det.finish()
