"""Command-line entry point: ``slipfeedback <subcommand> ...``.

Exit codes: 0 success, 1 ``--verify`` mismatch, 2 invalid input or
config, 3 no slip found where one was required.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

from .core import Cause, DetectorConfig, SlipFeedbackError
from .detector import detect
from .friction import FrictionLevel, NoSlipFound, classify_friction, measure_static_cof
from .harness import (
    LEVEL_ORDER,
    ObserverModel,
    bench_config,
    dumps_report,
    report,
    run_2afc,
    run_trial,
    series_csv,
    trial_scenario,
)
from .io import (
    format_events,
    load_config,
    read_trace,
    read_truth,
    replay,
    write_trace,
    write_text,
    write_truth,
)
from .simulate import simulate_lift

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INVALID = 2
EXIT_NO_SLIP = 3


def _base_config(args, default: Optional[DetectorConfig] = None) -> DetectorConfig:
    cfg = load_config(args.config) if args.config else (default or DetectorConfig())
    return cfg.with_overrides(
        arming_delay_s=getattr(args, "arming_delay", None),
        smooth_window=getattr(args, "smooth_window", None),
        smooth_passes=getattr(args, "smooth_passes", None),
    )


def _write_text(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        write_text(path, text)


def _summary(log) -> dict:
    first = log.events[0] if log.events else None
    accel = log.first_event(Cause.ACCEL)
    return {
        "phases": [p.label for p in log.phase_sequence],
        "slip_events": len(log.events),
        "first_slip_t": first.t if first else None,
        "first_slip_trigger": first.trigger.value if first else None,
        "first_slip_intensity": first.intensity if first else None,
        "first_accel_t": accel.t if accel else None,
    }


# -- subcommands --------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _base_config(args)
    level = FrictionLevel.parse(args.surface)
    overrides = {"mu_s": args.mu, "load_N": args.load, "noise_sigma_N": args.noise,
                 "sample_rate_hz": args.fs}
    sc = trial_scenario(level, args.seed, cfg, args.rate,
                        **{k: v for k, v in overrides.items() if v is not None})
    trace = simulate_lift(sc)
    write_trace(trace, args.out)
    if args.truth:
        write_truth(trace.ground_truth, args.truth)
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg = _base_config(args)
    trace = read_trace(args.inp, args.normal_axis)
    log = detect(trace, cfg)
    if args.events:
        _write_text(args.events, format_events(log))
    summary = _summary(log)
    code = EXIT_OK
    if args.verify or args.truth:
        if not args.truth:
            raise SlipFeedbackError("--verify needs --truth")
        truth = read_truth(args.truth)
        accel_t = summary["first_accel_t"]
        check = {"slip_onset_t": truth.slip_onset_t, "macro_slip_t": truth.macro_slip_t}
        if truth.macro_slip_t is None:
            ok = not log.events
        elif accel_t is None:
            ok = None
        else:
            ok = truth.slip_onset_t <= accel_t < truth.macro_slip_t
        check["result"] = {True: "pass", False: "fail", None: "no-slip"}[ok]
        summary["verify"] = check
        if args.verify:
            code = {True: EXIT_OK, False: EXIT_VERIFY_FAILED, None: EXIT_NO_SLIP}[ok]
    print(json.dumps(summary, indent=2))
    return code


def cmd_measure(args) -> int:
    trace = read_trace(args.inp, args.normal_axis)
    mu = measure_static_cof(trace)
    level = classify_friction(mu)
    if args.json:
        print(json.dumps({"mu_s": mu, "level": level.value}))
    else:
        print(f"mu_s = {mu:.4f} ({level.value})")
    return EXIT_OK


def cmd_2afc(args) -> int:
    cfg = _base_config(args, default=bench_config())
    afc = run_2afc(reps=args.reps, observer=ObserverModel(args.weber, args.observer_seed),
                   cfg=cfg, seed=args.seed, release_rate=args.rate)
    records = [run_trial(lv, args.seed + rep, cfg, args.rate)
               for lv in LEVEL_ORDER for rep in range(args.reps)]
    _write_text(args.report, dumps_report(report(records, afc, cfg)))
    if args.csv:
        _write_text(args.csv, series_csv(LEVEL_ORDER, args.seed, cfg, args.rate))
    return EXIT_OK


def cmd_replay(args) -> int:
    cfg = _base_config(args)
    log = replay(args.inp, cfg, args.rate, args.normal_axis)
    _write_text(args.events, format_events(log))
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _positive_rate(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("rate must be > 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON file of DetectorConfig fields")
    common.add_argument("--seed", type=int, default=0)

    tuning = argparse.ArgumentParser(add_help=False)
    tuning.add_argument("--arming-delay", type=float, metavar="S")
    tuning.add_argument("--smooth-window", type=int, metavar="N")
    tuning.add_argument("--smooth-passes", type=int, metavar="N")

    axis = argparse.ArgumentParser(add_help=False)
    axis.add_argument("--normal-axis", choices=("x", "y", "z"), default="z",
                      help="sensor axis carrying the normal force in raw 6-axis files")

    p = argparse.ArgumentParser(prog="slipfeedback", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common, tuning], help="write a simulated lift trace")
    s.add_argument("--surface", choices=("low", "medium", "high"), required=True)
    s.add_argument("--mu", type=float)
    s.add_argument("--load", type=float, help="tangential load in N")
    s.add_argument("--noise", type=float, help="noise sigma in N")
    s.add_argument("--fs", type=float, help="sample rate in Hz")
    s.add_argument("--rate", type=float, default=1.0, help="release rate in N/s")
    s.add_argument("--out", default="trace.csv")
    s.add_argument("--truth")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("detect", parents=[common, tuning, axis], help="run the slip detector")
    d.add_argument("--in", dest="inp", required=True)
    d.add_argument("--events")
    d.add_argument("--truth", help="ground-truth JSON written by simulate")
    d.add_argument("--verify", action="store_true",
                   help="exit non-zero unless the accel trigger lands between slip onset "
                        "and macro slip")
    d.set_defaults(func=cmd_detect)

    m = sub.add_parser("measure-friction", parents=[common, axis],
                       help="static COF from a lift trace")
    m.add_argument("--in", dest="inp", required=True)
    m.add_argument("--json", action="store_true")
    m.set_defaults(func=cmd_measure)

    e = sub.add_parser("experiment", help="virtual experiments")
    esub = e.add_subparsers(dest="experiment", required=True)
    a = esub.add_parser("2afc", parents=[common, tuning], help="simulated 2AFC study")
    a.add_argument("--reps", type=int, default=30)
    a.add_argument("--weber", type=float, default=0.15)
    a.add_argument("--observer-seed", type=int, default=0)
    a.add_argument("--rate", type=float, default=1.0, help="release rate in N/s")
    a.add_argument("--report", default="-")
    a.add_argument("--csv", help="plot-ready time series for one trial per surface")
    a.set_defaults(func=cmd_2afc)

    r = sub.add_parser("replay", parents=[common, tuning, axis],
                       help="paced real-time replay through the detector")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--rate", type=_positive_rate, default=math.inf,
                   help="speed-up over real time (default: unpaced)")
    r.add_argument("--events", default="-")
    r.set_defaults(func=cmd_replay)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NoSlipFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SLIP
    except (SlipFeedbackError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
