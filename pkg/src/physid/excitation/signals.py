"""Zero-phase smoothing and numerical differentiation of sampled signals."""
from __future__ import annotations

import numpy as np
from scipy.signal import lfilter


def _single_pole(x: np.ndarray, alpha: np.ndarray, start: np.ndarray) -> np.ndarray:
    """y[k] = y[k-1] + alpha (x[k] - y[k-1]) column-wise, with y[-1] = start."""
    out = np.empty_like(x)
    for j in range(x.shape[1]):
        a = alpha[j]
        out[:, j], _ = lfilter([a], [1.0, a - 1.0], x[:, j], zi=[(1.0 - a) * start[j]])
    return out


def lowpass_zero_phase(signal, cutoff, dt: float) -> np.ndarray:
    """Forward-backward single-pole low-pass filter with no phase lag.

    ``cutoff`` (Hz) is a scalar or one value per column. Both pass orders
    (forward then backward, backward then forward) are averaged so that
    filtering commutes exactly with time reversal; each pass starts from the
    first/last raw sample.
    """
    x = np.asarray(signal, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    if x.shape[0] < 3:
        raise ValueError("low-pass filtering needs at least 3 samples")
    fc = np.broadcast_to(np.asarray(cutoff, dtype=float), (x.shape[1],))
    nyquist = 0.5 / dt
    if np.any(fc <= 0) or np.any(fc >= nyquist):
        raise ValueError(f"cutoff frequencies must lie in (0, {nyquist}) Hz, got {fc.tolist()}")
    alpha = dt / (dt + 1.0 / (2.0 * np.pi * fc))
    first, last = x[0], x[-1]

    forward = _single_pole(x, alpha, first)
    fwd_bwd = _single_pole(forward[::-1], alpha, last)[::-1]
    backward = _single_pole(x[::-1], alpha, last)[::-1]
    bwd_fwd = _single_pole(backward, alpha, first)
    out = 0.5 * (fwd_bwd + bwd_fwd)
    return out[:, 0] if squeeze else out


def differentiate(series, dt: float) -> np.ndarray:
    """Central differences inside, second-order one-sided differences at the ends."""
    x = np.asarray(series, dtype=float)
    if x.shape[0] < 3:
        raise ValueError("numerical differentiation needs at least 3 samples")
    return np.gradient(x, dt, axis=0, edge_order=2)
