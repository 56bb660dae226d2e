"""Scalar beam profiles and the ideal spin-RESOLFT resolution law."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_WAVELENGTH = 532e-9
DEFAULT_NA = 1.45


def _vec2(v):
    v = tuple(float(c) for c in v)
    if len(v) != 2 or not all(math.isfinite(c) for c in v):
        raise ValueError("expected a finite 2-D vector")
    return v


@dataclass(frozen=True)
class DoughnutProfile:
    """Near-centre doughnut: ``s0 ((r/r0)^2 + epsilon) exp(-(r/r0)^2)``.

    ``s0`` is the peak pump parameter, ``r0`` the doughnut radius in metres
    and ``epsilon`` the residual intensity at the centre relative to ``s0``.
    """

    s0: float
    r0: float
    epsilon: float = 0.0
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.s0 > 0:
            raise ValueError("s0 must be positive")
        if not self.r0 > 0:
            raise ValueError("r0 must be positive")
        if not 0 <= self.epsilon < 1:
            raise ValueError("epsilon must lie in [0, 1)")
        object.__setattr__(self, "center", _vec2(self.center))

    def __call__(self, r):
        return doughnut_intensity(self, r)

    def at(self, points):
        """Pump parameter at 2-D points ``(..., 2)``."""
        d = np.asarray(points, float) - np.asarray(self.center)
        return doughnut_intensity(self, np.hypot(d[..., 0], d[..., 1]))

    @property
    def peak_radius(self) -> float:
        return self.r0 * math.sqrt(1.0 - self.epsilon)

    @property
    def peak_value(self) -> float:
        return self.s0 * math.exp(self.epsilon - 1.0)

    def replace(self, **kw) -> "DoughnutProfile":
        d = dict(s0=self.s0, r0=self.r0, epsilon=self.epsilon, center=self.center)
        d.update(kw)
        return DoughnutProfile(**d)


@dataclass(frozen=True)
class GaussianProfile:
    """Gaussian beam ``s_peak exp(-2 r^2 / waist^2)`` with 1/e^2 radius ``waist``."""

    s_peak: float
    waist: float
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.s_peak > 0:
            raise ValueError("s_peak must be positive")
        if not self.waist > 0:
            raise ValueError("waist must be positive")
        object.__setattr__(self, "center", _vec2(self.center))

    def __call__(self, r):
        return gaussian_intensity(self, r)

    def at(self, points):
        d = np.asarray(points, float) - np.asarray(self.center)
        return gaussian_intensity(self, np.hypot(d[..., 0], d[..., 1]))

    @property
    def fwhm(self) -> float:
        return self.waist * math.sqrt(2.0 * math.log(2.0))

    @classmethod
    def from_fwhm(cls, fwhm, s_peak=1.0, center=(0.0, 0.0)):
        return cls(s_peak, fwhm / math.sqrt(2.0 * math.log(2.0)), center)


@dataclass(frozen=True)
class BeamAlignment:
    """Offsets (m) of the Gaussian and doughnut beams from the nominal scan position."""

    gaussian_offset: tuple = (0.0, 0.0)
    doughnut_offset: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "gaussian_offset", _vec2(self.gaussian_offset))
        object.__setattr__(self, "doughnut_offset", _vec2(self.doughnut_offset))


def _check_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radial distance must be non-negative")
    return r


def doughnut_intensity(profile: DoughnutProfile, r):
    u = _check_r(r) / profile.r0
    u = u * u
    return profile.s0 * (u + profile.epsilon) * np.exp(-u)


def gaussian_intensity(profile: GaussianProfile, r):
    r = _check_r(r)
    return profile.s_peak * np.exp(-2.0 * r * r / profile.waist**2)


def ideal_fwhm(wavelength=DEFAULT_WAVELENGTH, na=DEFAULT_NA, pump_rate=0.0, tau=0.0):
    """Ideal spin-RESOLFT resolution ``lambda / (2 NA sqrt(1 + Gamma tau))``."""
    if not (wavelength > 0 and na > 0):
        raise ValueError("wavelength and NA must be positive")
    gt = np.asarray(pump_rate, float) * np.asarray(tau, float)
    if np.any(gt < 0):
        raise ValueError("pump_rate * tau must be non-negative")
    return wavelength / (2.0 * na * np.sqrt(1.0 + gt))


def saturation_product_for_fwhm(fwhm, wavelength=DEFAULT_WAVELENGTH, na=DEFAULT_NA):
    """Inverse of :func:`ideal_fwhm`: the ``Gamma * tau`` giving ``fwhm``."""
    limit = wavelength / (2.0 * na)
    if not 0 < fwhm <= limit:
        raise ValueError(f"fwhm must lie in (0, {limit:.4g}]")
    return (limit / fwhm) ** 2 - 1.0


def pump_rate_for_fwhm(fwhm, tau, wavelength=DEFAULT_WAVELENGTH, na=DEFAULT_NA):
    """Optical pump rate (1/s) that yields ``fwhm`` for doughnut duration ``tau``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return saturation_product_for_fwhm(fwhm, wavelength, na) / tau
