"""Fourier analysis of contrast-versus-current sweeps."""

from __future__ import annotations

import numpy as np


def spectral_response(x, y, pad=8, window="hann"):
    """Magnitude spectrum of ``y`` sampled on the uniform grid ``x``.

    The mean is removed and the record is zero-padded to ``pad`` times its
    length. Frequencies are in cycles per unit of ``x`` (1/A for currents).

    Returns
    -------
    freqs, magnitude : ndarray
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.shape != y.shape or x.size < 4:
        raise ValueError("need matching x and y with at least 4 samples")
    dx = np.diff(x)
    if not np.allclose(dx, dx[0], rtol=1e-6, atol=0) or dx[0] == 0:
        raise ValueError("x must be uniformly spaced")
    if pad < 1:
        raise ValueError("pad must be >= 1")
    yc = y - y.mean()
    if window == "hann":
        yc = yc * np.hanning(y.size)
    elif window is not None:
        raise ValueError(f"unknown window {window!r}")
    n = int(pad * y.size)
    mag = np.abs(np.fft.rfft(yc, n)) / y.size
    freqs = np.fft.rfftfreq(n, abs(dx[0]))
    return freqs, mag


def peak_frequency(freqs, magnitude, fmin=0.0):
    """Location of the largest spectral peak above ``fmin``, refined by a parabola."""
    freqs = np.asarray(freqs, float)
    mag = np.asarray(magnitude, float)
    idx = np.flatnonzero(freqs > fmin)
    if idx.size == 0:
        raise ValueError("no frequencies above fmin")
    k = idx[np.argmax(mag[idx])]
    if 0 < k < mag.size - 1:
        a, b, c = mag[k - 1], mag[k], mag[k + 1]
        den = a - 2 * b + c
        if den != 0:
            return float(freqs[k] + 0.5 * (a - c) / den * (freqs[1] - freqs[0]))
    return float(freqs[k])
