"""Smoothing, numerical differentiation and force ratios."""

from __future__ import annotations

from typing import Tuple

import numpy as np

from .core import DerivedSeries, ForceTrace, SlipFeedbackError

__all__ = [
    "DerivedSeries",
    "smooth",
    "derivative",
    "slip_ratio",
    "friction_ratio",
    "derive",
    "peak_slip_ratio",
]


class WindowError(SlipFeedbackError, ValueError):
    pass


class EvenWindow(WindowError):
    pass


class WindowTooLarge(WindowError):
    pass


class TooShort(SlipFeedbackError, ValueError):
    pass


class ZeroNormalForce(SlipFeedbackError, ZeroDivisionError):
    pass


class EmptyWindow(SlipFeedbackError, ValueError):
    pass


def smooth(series, window: int, passes: int = 1) -> np.ndarray:
    """Centred moving average with shrunken symmetric windows at the edges.

    Output has the input's length. ``passes`` applies the filter repeatedly.
    """
    x = np.asarray(series, dtype=float)
    if window < 3:
        raise WindowError(f"window must be >= 3, got {window}")
    if window % 2 == 0:
        raise EvenWindow(f"window must be odd, got {window}")
    if window > x.size:
        raise WindowTooLarge(f"window {window} exceeds series length {x.size}")
    h = window // 2
    n = x.size
    idx = np.arange(n)
    half = np.minimum(h, np.minimum(idx, n - 1 - idx))
    for _ in range(passes):
        c = np.concatenate(([0.0], np.cumsum(x)))
        x = (c[idx + half + 1] - c[idx - half]) / (2 * half + 1)
    return x


def derivative(series, dt: float) -> np.ndarray:
    """Central differences inside, first-order one-sided differences at the ends."""
    x = np.asarray(series, dtype=float)
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if x.size < 3:
        raise TooShort(f"need at least 3 samples, got {x.size}")
    return np.gradient(x, dt, edge_order=1)


def slip_ratio(f_n, f_t, floor: float = 0.05):
    """f_n / max(f_t, floor); the floor absorbs the singularity at contact."""
    if not floor > 0:
        raise ValueError("floor must be > 0")
    return np.divide(f_n, np.maximum(f_t, floor))


def friction_ratio(f_n, f_t):
    """|f_t| / |f_n|, the instantaneous friction utilisation."""
    fn = np.abs(np.asarray(f_n, dtype=float))
    if (fn == 0).any():
        raise ZeroNormalForce("normal force is zero")
    out = np.abs(np.asarray(f_t, dtype=float)) / fn
    return float(out) if out.ndim == 0 else out


def derive(trace: ForceTrace, window: int = 11, passes: int = 1,
           floor: float = 0.05) -> DerivedSeries:
    """Batch counterpart of what the detector computes sample by sample.

    ``ft_smooth`` and ``sr`` use a single smoothing pass; the derivatives are
    taken on the ``passes``-times smoothed tangential force.
    """
    ft_s = smooth(trace.f_t, window)
    fn_s = smooth(trace.f_n, window)
    base = ft_s if passes == 1 else smooth(trace.f_t, window, passes)
    dft = derivative(base, trace.dt)
    d2ft = derivative(dft, trace.dt)
    return DerivedSeries(
        t=trace.t.copy(),
        ft_smooth=ft_s,
        dft=dft,
        d2ft=d2ft,
        sr=slip_ratio(fn_s, ft_s, floor),
    )


def peak_slip_ratio(trace: ForceTrace, derived: DerivedSeries,
                    hold_window: Tuple[float, float]) -> float:
    """Slip ratio at the instant of peak smoothed tangential force in the window."""
    t0, t1 = hold_window
    mask = trace.window(t0, t1)
    if not mask.any():
        raise EmptyWindow(f"no samples in [{t0}, {t1}]")
    idx = np.flatnonzero(mask)
    k = idx[np.argmax(derived.ft_smooth[idx])]
    return float(derived.sr[k])
