import pytest
from hypothesis import given, strategies as st

from slipfeedback.encoder import (
    IntensityInputs,
    WrongBranch,
    ZeroDelta,
    clamp,
    eq1_low,
    eq2_high,
    eq3_combined,
    eq4_slip_ratio,
)


def inp(delta_a, sr_peak, **kw):
    return IntensityInputs(delta_a=delta_a, sr_peak=sr_peak, **kw)


@pytest.mark.parametrize("delta_a,sr_peak,expected", [(-1.0, 1.0, 255.0), (-100, 5.74, 30.0),
                                                      (-2.0, 2.0, 63.75)])
def test_eq1_low(delta_a, sr_peak, expected):
    assert eq1_low(inp(delta_a, sr_peak)) == pytest.approx(expected)


@pytest.mark.parametrize("delta_a,sr_peak,expected", [(0.3, 1.0, 76.5), (10, 1.0, 255.0),
                                                      (0.001, 5.0, 30.0)])
def test_eq2_high(delta_a, sr_peak, expected):
    assert eq2_high(inp(delta_a, sr_peak)) == pytest.approx(expected)


def test_wrong_branch():
    with pytest.raises(WrongBranch):
        eq1_low(inp(0.0, 1.0))
    with pytest.raises(WrongBranch):
        eq2_high(inp(-0.5, 1.0))


@pytest.mark.parametrize("delta_a,sr_peak,expected", [(1.0, 1.0, 255.0), (0.5, 2.0, 63.75),
                                                      (3.0, 2.0, 42.5), (-3.0, 2.0, 42.5)])
def test_eq3_combined(delta_a, sr_peak, expected):
    assert eq3_combined(inp(delta_a, sr_peak)) == pytest.approx(expected)


def test_eq3_zero_delta():
    with pytest.raises(ZeroDelta):
        eq3_combined(inp(0.0, 1.0))


def test_eq4_examples():
    assert eq4_slip_ratio(inp(0.1, 2.0), 0.4) == 0
    assert eq4_slip_ratio(inp(0.1, 2.38), 0.6) == pytest.approx(107.14, abs=0.01)
    assert eq4_slip_ratio(inp(0.1, 5.74), 0.6) == pytest.approx(44.43, abs=0.01)


def test_eq4_threshold_must_be_positive():
    with pytest.raises(ValueError):
        eq4_slip_ratio(inp(0.1, 2.0), 0.6, threshold=0)


def test_inputs_validation():
    with pytest.raises(ValueError):
        inp(-1.0, 0.0)
    with pytest.raises(ValueError):
        inp(-1.0, 1.0, u_min=300)


def test_clamp():
    assert clamp(5, 30, 255) == 30 and clamp(500, 30, 255) == 255 and clamp(40, 30, 255) == 40


mags = st.floats(1e-6, 1e6, allow_nan=False)
srs = st.floats(1e-3, 1e3, allow_nan=False)


@given(mags, mags, srs)
def test_eq1_monotone_in_delta(a, b, sr):
    lo, hi = sorted((a, b))
    assert eq1_low(inp(-lo, sr)) >= eq1_low(inp(-hi, sr))


@given(srs, srs, st.floats(0.5, 100))
def test_eq4_monotone_in_sr_peak(a, b, dsr):
    lo, hi = sorted((a, b))
    assert eq4_slip_ratio(inp(1.0, lo), dsr) >= eq4_slip_ratio(inp(1.0, hi), dsr)


@given(mags, srs, st.floats(0.0, 100))
def test_outputs_in_band(mag, sr, dsr):
    for u in (eq1_low(inp(-mag, sr)), eq2_high(inp(mag, sr)), eq3_combined(inp(mag, sr))):
        assert 30 <= u <= 255
    u = eq4_slip_ratio(inp(mag, sr), dsr)
    assert u == 0 if dsr < 0.5 else 30 <= u <= 255


@given(srs, st.floats(0.5, 100))
def test_literal_eq4_is_constant(sr, dsr):
    assert eq4_slip_ratio(inp(1.0, sr), dsr, literal=True) == 30
