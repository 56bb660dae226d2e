"""
Magnetostatics of the drive wire and the statistical proton field at a shallow NV.

The wire is an infinite straight filament through ``center`` along ``axis``.
Coordinates are metres with ``z`` normal to the diamond surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import GAMMA_E, GAMMA_P, HBAR, MU0, TWO_PI

VARIANTS = ("tangential", "printed")


def _unit(v):
    v = np.asarray(v, float)
    n = np.linalg.norm(v)
    if v.shape != (3,) or not n > 0:
        raise ValueError("expected a non-zero 3-vector")
    return v / n


@dataclass(frozen=True)
class WireGeometry:
    axis: tuple = (0.0, 1.0, 0.0)
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 12.5e-6
    current: float = 7e-3
    frequency: float = 8.3e3

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("wire radius must be positive")
        if not self.frequency >= 0:
            raise ValueError("frequency must be non-negative")
        object.__setattr__(self, "axis", tuple(_unit(self.axis)))
        c = np.asarray(self.center, float)
        if c.shape != (3,) or not np.all(np.isfinite(c)):
            raise ValueError("center must be a finite 3-vector")
        object.__setattr__(self, "center", tuple(c))

    def with_current(self, current) -> "WireGeometry":
        return WireGeometry(self.axis, self.center, self.radius, current, self.frequency)

    def radial(self, pos):
        """Perpendicular displacement from the wire axis, shape ``(..., 3)``."""
        d = np.asarray(pos, float) - np.asarray(self.center)
        a = np.asarray(self.axis)
        return d - (d @ a)[..., None] * a

    def field(self, pos, current=None):
        """Infinite-filament field vector (T) at ``pos``."""
        current = self.current if current is None else current
        rho = self.radial(pos)
        r2 = np.sum(rho * rho, axis=-1)
        if np.any(r2 < self.radius**2):
            raise ValueError("field point lies inside the conductor")
        return MU0 * current / (TWO_PI * r2[..., None]) * np.cross(np.asarray(self.axis), rho)


@dataclass(frozen=True)
class NVOrientation:
    """NV axis as polar angle ``theta`` from the surface normal and azimuth ``phi``."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0 <= self.theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")
        if not 0 <= self.phi < TWO_PI:
            raise ValueError("phi must lie in [0, 2 pi)")

    @property
    def axis(self):
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    @classmethod
    def from_degrees(cls, theta, phi=0.0):
        return cls(math.radians(theta), math.radians(phi) % TWO_PI)


@dataclass(frozen=True)
class ProtonBath:
    rho: float
    d_nv: float

    def __post_init__(self):
        if not (self.rho > 0 and self.d_nv > 0):
            raise ValueError("proton density and NV depth must be positive")


def _printed(pos, wire, nv, current):
    if not np.allclose(wire.axis, (0.0, 1.0, 0.0)):
        raise ValueError("the printed closed form assumes a wire along y")
    d = np.asarray(pos, float) - np.asarray(wire.center)
    x, z = d[..., 0], d[..., 2]
    r2 = x * x + z * z
    if np.any(r2 < wire.radius**2):
        raise ValueError("field point lies inside the conductor")
    return (MU0 / TWO_PI) * current / r2 * (
        z * math.sin(nv.phi) * math.cos(nv.theta) + x * math.cos(nv.phi)
    )


def b_parallel(pos, wire: WireGeometry, nv: NVOrientation, variant="tangential", current=None):
    """Wire field projected on the NV axis (T).

    ``"tangential"`` projects the full filament field; ``"printed"`` evaluates
    ``mu0 I / (2 pi (x^2 + z^2)) (z sin(phi) cos(theta) + x cos(phi))``.
    """
    current = wire.current if current is None else current
    if variant == "tangential":
        return wire.field(pos, current) @ nv.axis
    if variant == "printed":
        return _printed(pos, wire, nv, current)
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def b_perpendicular(pos, wire: WireGeometry, nv: NVOrientation, current=None):
    """Magnitude of the filament field component orthogonal to the NV axis (T)."""
    B = wire.field(pos, current)
    n = nv.axis
    perp = B - (B @ n)[..., None] * n
    return np.linalg.norm(perp, axis=-1)


def gradient_parallel(pos, wire: WireGeometry, nv: NVOrientation, step=1e-9,
                      variant="tangential", richardson=False):
    """d(B_par)/dx in T/m by central differences, optionally Richardson-extrapolated."""
    if not step > 0:
        raise ValueError("step must be positive")
    pos = np.asarray(pos, float)
    ex = np.array([1.0, 0.0, 0.0])

    def central(h):
        return (b_parallel(pos + h * ex, wire, nv, variant)
                - b_parallel(pos - h * ex, wire, nv, variant)) / (2 * h)

    if not richardson:
        return central(step)
    return (4.0 * central(step / 2) - central(step)) / 3.0


def rabi_frequency(pos, wire: WireGeometry, nv: NVOrientation, current=None, drive_factor=1.0):
    """Rabi frequency (Hz) from the field component orthogonal to the NV axis."""
    if not drive_factor > 0:
        raise ValueError("drive_factor must be positive")
    return GAMMA_E / TWO_PI * b_perpendicular(pos, wire, nv, current) * drive_factor


def calibrate_drive_factor(target_hz, pos, wire: WireGeometry, nv: NVOrientation, current=None):
    """Drive factor that makes :func:`rabi_frequency` equal ``target_hz``."""
    raw = rabi_frequency(pos, wire, nv, current, 1.0)
    if not raw > 0:
        raise ValueError("no perpendicular field at this position")
    return float(target_hz / raw)


def biot_savart_polyline(pos, vertices, current):
    """Field (T) of a current through straight segments joining ``vertices``.

    Exact finite-segment Biot-Savart sum; used as an oracle for the filament model.
    """
    p = np.asarray(pos, float)[..., None, :]
    v = np.asarray(vertices, float)
    r1 = p - v[:-1]
    r2 = p - v[1:]
    n1 = np.linalg.norm(r1, axis=-1)
    n2 = np.linalg.norm(r2, axis=-1)
    denom = n1 * n2 * (n1 * n2 + np.sum(r1 * r2, axis=-1))
    fac = (n1 + n2) / denom
    return MU0 * current / (4 * np.pi) * np.sum(np.cross(r1, r2) * fac[..., None], axis=-2)


def discrepancy_report(pos, wire: WireGeometry, nv: NVOrientation, drive_current=30e-3,
                       drive_factor=1.0, step=1e-9) -> dict:
    """Field, gradient and Rabi frequency for both variants at one geometry.

    The ``"biot_savart"`` entry recomputes the projected field and gradient
    from a 2 m straight segment through the wire centre, independent of the
    filament closed form.
    """
    out = {}
    for variant in VARIANTS:
        out[variant] = {
            "b_parallel_T": float(abs(b_parallel(pos, wire, nv, variant))),
            "gradient_T_per_m": float(abs(gradient_parallel(pos, wire, nv, step, variant))),
        }
    pos = np.asarray(pos, float)
    a, c = np.asarray(wire.axis), np.asarray(wire.center)
    ends = np.array([c - a, c + a])
    ex = np.array([1.0, 0.0, 0.0])
    n = nv.axis

    def bs(p):
        return float(biot_savart_polyline(p, ends, wire.current) @ n)

    b_bs = bs(pos)
    # the finite-segment sum loses digits to cancellation, so difference on a wider step
    h = max(step, 100e-9)
    out["biot_savart"] = {
        "b_parallel_T": abs(b_bs),
        "gradient_T_per_m": abs((bs(pos + h * ex) - bs(pos - h * ex)) / (2 * h)),
        "relative_difference": abs(abs(b_bs) - out["tangential"]["b_parallel_T"]) / abs(b_bs),
    }
    out["rabi_hz"] = float(rabi_frequency(pos, wire, nv, drive_current, drive_factor))
    return out


# --------------------------------------------------------------------------
# proton bath

def _dipolar_prefactor(gamma=GAMMA_P):
    return (MU0 * HBAR * gamma / (4 * np.pi)) ** 2


def proton_brms(bath: ProtonBath, theta=math.radians(54.7), gamma=GAMMA_P):
    """RMS field (T) along the NV axis from statistically polarised protons.

    Protons fill the half-space above the surface and precess about a bias
    field along the NV axis, so only their transverse moments contribute.
    ``B_rms^2 = rho (mu0 hbar gamma / 4 pi)^2 pi (8 - 3 sin^4 theta) / (128 d^3)``.
    """
    b2 = bath.rho * _dipolar_prefactor(gamma) * np.pi * (8 - 3 * math.sin(theta) ** 4) / (128 * bath.d_nv**3)
    return math.sqrt(b2)


def proton_brms_monte_carlo(bath: ProtonBath, rng: np.random.Generator, theta=math.radians(54.7),
                            n_samples=1_000_000, gamma=GAMMA_P, chunk=250_000):
    """Monte Carlo estimate of :func:`proton_brms` by sampling the half-space integral.

    Radii are drawn with density ``3 d^3 / r^4`` beyond ``d`` and directions
    uniformly on the upper hemisphere; points below the surface are rejected.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    d = bath.d_nv
    n = np.array([math.sin(theta), 0.0, math.cos(theta)])
    acc, done = 0.0, 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        r = d * rng.random(m) ** (-1.0 / 3.0)
        u = rng.standard_normal((m, 3))
        u /= np.linalg.norm(u, axis=1)[:, None]
        u[:, 2] = np.abs(u[:, 2])
        c = u @ n
        # transverse moments: <(B.n)^2> per spin = (3 c)^2 (1 - c^2) (hbar gamma / 2)^2 / r^6
        acc += np.sum(np.where(r * u[:, 2] >= d, 9.0 * c * c * (1.0 - c * c) / 4.0, 0.0))
        done += m
    integral = 2 * np.pi / (3 * d**3) * acc / n_samples
    return math.sqrt(bath.rho * _dipolar_prefactor(gamma) * integral)
