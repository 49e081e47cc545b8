import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from slipfeedback.signal import (
    EmptyWindow,
    EvenWindow,
    TooShort,
    WindowError,
    WindowTooLarge,
    ZeroNormalForce,
    derivative,
    derive,
    friction_ratio,
    peak_slip_ratio,
    slip_ratio,
    smooth,
)
from slipfeedback.simulate import simulate_lift, surface_preset

from conftest import make_trace

finite = st.floats(-100, 100, allow_nan=False)


@given(st.floats(-50, 50), st.sampled_from([3, 5, 11, 21]), st.integers(1, 3))
def test_smooth_constant(c, w, passes):
    out = smooth(np.full(40, c), w, passes)
    assert np.allclose(out, c)


@given(st.floats(-5, 5), st.floats(-5, 5), st.sampled_from([3, 5, 11]))
def test_smooth_preserves_affine(a, b, w):
    x = a * np.arange(50) + b
    out = smooth(x, w)
    assert np.allclose(out, x, atol=1e-9)  # shrunken symmetric edges keep ramps too


def test_smooth_impulse():
    x = np.zeros(9)
    x[4] = 1.0
    out = smooth(x, 3)
    assert np.allclose(out[3:6], 1 / 3) and np.allclose(np.delete(out, [3, 4, 5]), 0)


def test_smooth_window_errors():
    with pytest.raises(EvenWindow):
        smooth(np.ones(10), 4)
    with pytest.raises(WindowTooLarge):
        smooth(np.ones(10), 11)
    with pytest.raises(WindowError):
        smooth(np.ones(10), 1)


def test_smooth_length_preserved():
    assert smooth(np.random.default_rng(0).normal(size=37), 11, 3).shape == (37,)


@given(arrays(float, 30, elements=finite), arrays(float, 30, elements=finite),
       st.floats(-3, 3), st.floats(-3, 3))
def test_smooth_and_derivative_linear(x, y, a, b):
    lhs = smooth(a * x + b * y, 5, 2)
    rhs = a * smooth(x, 5, 2) + b * smooth(y, 5, 2)
    assert np.allclose(lhs, rhs, atol=1e-8)
    lhs = derivative(a * x + b * y, 0.01)
    rhs = a * derivative(x, 0.01) + b * derivative(y, 0.01)
    assert np.allclose(lhs, rhs, atol=1e-6)


def test_second_derivative_of_quadratic():
    dt = 1e-3
    t = np.arange(0, 2, dt)
    d2 = derivative(derivative(0.5 * t**2, dt), dt)
    assert np.abs(d2[2:-2] - 1.0).max() < 1e-6


def test_derivative_of_constant():
    assert np.allclose(derivative(np.full(10, 3.0), 0.01), 0)


def test_second_derivative_of_sin():
    dt = 1e-3
    t = np.arange(-0.1, 1.1 + dt / 2, dt)
    d2 = derivative(derivative(np.sin(t), dt), dt)
    inside = (t >= 0) & (t <= 1)
    assert np.abs(d2[inside] + np.sin(t[inside])).max() < 1e-5


def test_second_derivative_of_cubic_is_second_order():
    errs = []
    for dt in (1e-2, 5e-3):
        t = np.arange(0, 1, dt)
        d2 = derivative(derivative(t**3, dt), dt)
        errs.append(np.abs(d2[2:-2] - 6 * t[2:-2]).max())
    # error of the nested central stencil on a cubic is exactly zero up to rounding
    assert max(errs) < 1e-6


def test_derivative_errors():
    with pytest.raises(TooShort):
        derivative([1.0, 2.0], 0.1)
    with pytest.raises(ValueError):
        derivative([1.0, 2.0, 3.0], 0.0)


@pytest.mark.parametrize("fn,ft,expected", [(3.5, 1.75, 2.0), (3.5, 0.0, 70.0),
                                            (3.5, 0.61, 5.7377)])
def test_slip_ratio_examples(fn, ft, expected):
    assert slip_ratio(fn, ft, 0.05) == pytest.approx(expected, rel=1e-4)


@pytest.mark.parametrize("ft,fn,expected", [(0.875, 3.5, 0.25), (0.0, 3.5, 0.0),
                                            (3.325, 3.5, 0.95)])
def test_friction_ratio_examples(ft, fn, expected):
    assert friction_ratio(fn, ft) == pytest.approx(expected)


def test_friction_ratio_zero_normal():
    with pytest.raises(ZeroNormalForce):
        friction_ratio(0.0, 1.0)


@given(st.floats(0.01, 10), st.floats(0.05, 10))
def test_slip_and_friction_ratios_are_reciprocal(fn, ft):
    assert slip_ratio(fn, ft, 0.05) * friction_ratio(fn, ft) == pytest.approx(1.0)


def test_derive_matches_components():
    rng = np.random.default_rng(1)
    tr = make_trace(3.5 + rng.normal(0, 0.01, 200), 0.6 + rng.normal(0, 0.01, 200))
    d = derive(tr, 11, 2)
    assert np.array_equal(d.ft_smooth, smooth(tr.f_t, 11))
    assert np.allclose(d.dft, derivative(smooth(tr.f_t, 11, 2), tr.dt))
    assert np.allclose(d.sr, smooth(tr.f_n, 11) / np.maximum(smooth(tr.f_t, 11), 0.05))


def _preset(level):
    tr = simulate_lift(surface_preset(level))
    d = derive(tr)
    g = tr.ground_truth
    return tr, d, (g.lift_t, g.release_start_t)


def test_peak_slip_ratio_glass():
    tr, d, win = _preset("low")
    sr = peak_slip_ratio(tr, d, win)
    mask = tr.window(*win)
    k = np.flatnonzero(mask)[np.argmax(d.ft_smooth[mask])]
    assert sr == d.sr[k]  # exhaustive scan oracle
    assert sr == pytest.approx(3.5 / 0.61, rel=0.02)


def test_peak_slip_ratio_orders_surfaces():
    high = peak_slip_ratio(*_preset("high"))
    low = peak_slip_ratio(*_preset("low"))
    assert high < low


def test_peak_slip_ratio_constant_window():
    tr = make_trace(np.full(100, 3.5), 0.7)
    d = derive(tr)
    assert peak_slip_ratio(tr, d, (0.01, 0.05)) == pytest.approx(5.0)


def test_peak_slip_ratio_invariances():
    tr, d, win = _preset("medium")
    base = peak_slip_ratio(tr, d, win)
    scaled = make_trace(tr.f_n, tr.f_t, fs=tr.sample_rate_hz / 2)
    assert peak_slip_ratio(scaled, derive(scaled), (2 * win[0], 2 * win[1])) == base
    n = len(tr) + 300
    fn = np.concatenate([tr.f_n, np.full(300, 0.01)])
    ft = np.concatenate([tr.f_t, np.full(300, 0.01)])
    longer = make_trace(fn, ft)
    assert peak_slip_ratio(longer, derive(longer), win) == base
    assert len(longer) == n


def test_peak_slip_ratio_empty_window():
    tr = make_trace(np.ones(20), 0.5)
    with pytest.raises(EmptyWindow):
        peak_slip_ratio(tr, derive(tr), (5.0, 6.0))
