"""Independent reference implementations used only by the tests.

Nothing here imports the propagator or rate-matrix code under test.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.constants import mu_0 as MU0
from scipy.integrate import trapezoid
from scipy.signal import fftconvolve


def five_level_rhs(n, s, gamma, a35, a45, a51, a52):
    """Rate equations written level by level from the transition list."""
    n1, n2, n3, n4, n5 = n
    return gamma * np.array([
        -s * n1 + n3 + a51 * n5,
        -s * n2 + n4 + a52 * n5,
        s * n1 - (1 + a35) * n3,
        s * n2 - (1 + a45) * n4,
        a35 * n3 + a45 * n4 - (a51 + a52) * n5,
    ])


def rk4_train(n0, segments, rates, steps_per_unit=100):
    """Fixed-step RK4 through ``(s, duration)`` segments.

    The step is ``1 / (steps_per_unit * gamma * (1 + s + a45))``.
    """
    k = (rates.gamma, rates.a35, rates.a45, rates.a51, rates.a52)
    n = np.array(n0, float)
    for s, dur in segments:
        lam = rates.gamma * (1 + s + rates.a45)
        m = max(1, int(math.ceil(dur * lam * steps_per_unit)))
        h = dur / m
        for _ in range(m):
            k1 = five_level_rhs(n, s, *k)
            k2 = five_level_rhs(n + 0.5 * h * k1, s, *k)
            k3 = five_level_rhs(n + 0.5 * h * k2, s, *k)
            k4 = five_level_rhs(n + h * k3, s, *k)
            n = n + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return n


def infinite_wire_field(pos, current, axis_point=(0.0, 0.0, 0.0)):
    """|B| = mu0 I / (2 pi r) of an infinite straight wire along y."""
    p = np.asarray(pos, float) - np.asarray(axis_point, float)
    r = math.hypot(p[0], p[2])
    return MU0 * current / (2 * math.pi * r)


def ou_filter_quadrature(T, tau, N, t_c, nu, n=200_001):
    """Dephasing integral of a square-wave toggling function.

    ``I = int int s(t) s(t') exp(-|t-t'|/t_c) cos(w (t-t')) dt dt'`` is
    evaluated as a one-dimensional lag integral of the toggling
    autocorrelation. Keeping only the fundamental harmonic of ``s`` gives
    ``I = 4 K / pi^2`` on resonance.
    """
    t = np.linspace(0.0, T, n)
    dt = t[1] - t[0]
    # XY8-type toggling: flips at tau/2 + k tau
    flips = tau / 2 + tau * np.arange(N)
    s = (-1.0) ** np.searchsorted(flips, t, side="right")
    ac = fftconvolve(s, s[::-1])[n - 1:] * dt
    lag = np.arange(n) * dt
    kern = np.exp(-lag / t_c) * np.cos(2 * math.pi * nu * lag)
    w = np.full(n, 2.0)
    w[0] = 1.0
    return float(trapezoid(w * ac * kern, dx=dt))
