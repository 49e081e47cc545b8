import json

import numpy as np
import pytest

from slipfeedback.core import Cause
from slipfeedback.friction import FrictionLevel
from slipfeedback.harness import (
    DEFAULT_PAIRS,
    LEVEL_ORDER,
    EmptyRecords,
    ObserverModel,
    OddReps,
    Presentation,
    TrialRecord,
    bench_config,
    confusion_matrix,
    dumps_report,
    loads_report,
    report,
    run_2afc,
    run_trial,
    series_csv,
    trial_scenario,
)

H, M, L = FrictionLevel.HIGH, FrictionLevel.MEDIUM, FrictionLevel.LOW


def test_bench_config():
    cfg = bench_config()
    assert (cfg.arming_delay_s, cfg.smooth_window, cfg.smooth_passes) == (1.0, 121, 3)
    assert bench_config(smooth_window=101).smooth_window == 101


def test_release_starts_after_arming():
    sc = trial_scenario(L, 0, bench_config(arming_delay_s=10.0))
    assert sc.release_start_t >= sc.contact_t + 2 * sc.ramp_s + 10.0


def test_high_intensity_exceeds_low():
    hi, lo = run_trial(H, 1), run_trial(L, 1)
    assert hi.detected and lo.detected
    assert hi.first_slip_intensity > lo.first_slip_intensity


@pytest.mark.parametrize("seed", range(4))
def test_low_slips_sooner_than_high(seed):
    assert run_trial(L, seed).slip_latency_s < run_trial(H, seed).slip_latency_s


def test_fully_supported_trial_not_detected():
    rec = run_trial(H, 0, noise_sigma_N=0.0, support_fraction=1.0)
    assert not rec.detected
    assert rec.first_slip_intensity is None and rec.slip_latency_s is None
    assert rec.macro_slip_t is None


def test_trial_record_fields():
    rec = run_trial(M, 2)
    assert rec.trigger in (Cause.ACCEL, Cause.SLIP_RATIO)
    assert 30 <= rec.first_slip_intensity <= 255
    assert rec.slip_latency_s == pytest.approx(rec.accel_t - rec.release_start_t)
    assert rec.log_ref == "medium-seed2-rate1"
    assert TrialRecord.from_dict(rec.to_dict()) == rec
    assert run_trial(M, 2) is rec  # memoised


def test_observer_validation():
    with pytest.raises(ValueError):
        ObserverModel(weber_fraction=-0.1)


def test_odd_reps_rejected():
    with pytest.raises(OddReps):
        run_2afc(reps=3)
    with pytest.raises(OddReps):
        run_2afc(reps=0)


@pytest.fixture(scope="module")
def noiseless_afc():
    return run_2afc(reps=20, observer=ObserverModel(0.0))


def test_noiseless_observer_is_perfect(noiseless_afc):
    assert all(noiseless_afc.accuracy(p) == 100.0 for p in DEFAULT_PAIRS)
    m = noiseless_afc.confusion()
    assert np.array_equal(m, np.diag([40, 40, 40]))


def test_presentation_balance(noiseless_afc):
    for stats in noiseless_afc.per_pair.values():
        assert stats["n"] == 20 and stats["higher_first"] == 10
    orders = [p.order for p in noiseless_afc.presentations]
    assert orders == list(range(60))
    firsts = [p.pair for p in noiseless_afc.presentations[:10]]
    assert len(set(firsts)) > 1  # shuffled, not blocked by pair


def test_chance_with_overwhelming_noise():
    afc = run_2afc(pairs=[(H, L)], reps=100, observer=ObserverModel(1e6, 3))
    assert 35 <= afc.accuracy((H, L)) <= 65


def test_reproducible():
    a = run_2afc(reps=10, observer=ObserverModel(0.15, 2), seed=0)
    b = run_2afc(reps=10, observer=ObserverModel(0.15, 2), seed=0)
    assert a.presentations == b.presentations
    assert dumps_report(report([run_trial(H, 0)], a)) == dumps_report(report([run_trial(H, 0)], b))


def test_correctness_ignores_presentation_order():
    a = Presentation((H, L), 0, 0, H, L, 107.0, 44.0, 107.0, 44.0, L)
    b = Presentation((H, L), 0, 0, L, H, 44.0, 107.0, 44.0, 107.0, L)
    assert a.correct and b.correct
    assert sorted(a.judgements(), key=str) == sorted(b.judgements(), key=str)


def test_confusion_diagonal():
    trials = [(lv, lv) for lv in LEVEL_ORDER for _ in range(160)]
    assert np.array_equal(confusion_matrix(trials), np.diag([160, 160, 160]))


def test_confusion_single_miss():
    trials = [(H, H)] * 159 + [(H, M)] + [(M, M)] * 160 + [(L, L)] * 160
    m = confusion_matrix(trials)
    assert m[0].tolist() == [159, 1, 0]
    assert m.sum(axis=1).tolist() == [160, 160, 160]


def test_confusion_rejects_empty():
    with pytest.raises(EmptyRecords):
        confusion_matrix([])
    with pytest.raises(EmptyRecords):
        confusion_matrix([(H, H), (M, M)])


def test_report_peak_means_and_round_trip():
    recs = [run_trial(lv, s) for lv in LEVEL_ORDER for s in range(20)]
    doc = report(recs, cfg=bench_config())
    for lv, load in ((H, 1.47), (M, 1.26), (L, 0.61)):
        assert doc["surfaces"][lv.value]["peak_ft_N"]["mean"] == pytest.approx(load, abs=0.01)
        assert doc["surfaces"][lv.value]["detected"] == 20
    text = dumps_report(doc)
    assert loads_report(text) == doc
    assert dumps_report(loads_report(text)) == text
    assert dumps_report(report(list(reversed(recs)), cfg=bench_config())) == text


def test_report_requires_records():
    with pytest.raises(EmptyRecords):
        report([])
    with pytest.raises(ValueError):
        loads_report(json.dumps({"format": "other"}))


def test_series_csv():
    text = series_csv([L], seed=0, every=100)
    lines = text.splitlines()
    assert lines[0] == "surface,seed,t,fn_N,ft_N,ft_smooth_N,d2ft_Nps2,sr,u"
    rows = [line.split(",") for line in lines[1:]]
    assert all(r[0] == "low" for r in rows)
    u = [float(r[-1]) for r in rows]
    assert max(u) > 0
    assert series_csv([L], seed=0, every=100) == text
