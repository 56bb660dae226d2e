"""
Five-level rate-equation model of NV optical pumping.

Levels are ordered ``(ms=0 ground, ms=-1 ground, ms=0 excited, ms=-1 excited,
singlet)``. Rates are expressed relative to the primary fluorescence decay
rate ``gamma`` and the optical pump enters through the dimensionless
saturation parameter ``s = I sigma / gamma``.

Radiative decay returns each excited level to the ground level of the same
spin projection, so every column of the rate matrix sums to zero and total
population is conserved exactly by the matrix-exponential propagator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, asdict, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import yaml
from scipy.linalg import expm, null_space

log = logging.getLogger(__name__)

RATE_KEYS = ("gamma_hz", "a35", "a45", "a51", "a52", "sigma_scale")

_DEFAULT_RATES = Path(__file__).with_name("data") / "rates_room_temperature.yaml"

# pump coupling: ground -> excited for each spin projection
_PUMP = np.array(
    [
        [-1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
    ]
)
_BRIGHT = np.array([0.0, 0.0, 1.0, 1.0, 0.0])

POP_TOL = 1e-9
NEG_TOL = 1e-12


@dataclass(frozen=True)
class RateConstants:
    """Parameters of the five-level model.

    Parameters
    ----------
    gamma : float
        Primary fluorescence decay rate in 1/s.
    a35, a45 : float
        Excited-state to singlet rates for ms=0 and ms=-1, relative to gamma.
    a51, a52 : float
        Singlet to ms=0 / ms=-1 ground rates, relative to gamma.
    sigma_scale : float
        Converts beam intensity (W/m^2) to the pump parameter ``s``.
    """

    gamma: float
    a35: float
    a45: float
    a51: float
    a52: float
    sigma_scale: float = 1.0

    def __post_init__(self):
        vals = [self.gamma, self.a35, self.a45, self.a51, self.a52, self.sigma_scale]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("rate constants must be finite")
        if min(vals) < 0:
            raise ValueError("rate constants must be non-negative")
        if not self.a45 > self.a35:
            raise ValueError("a45 must exceed a35 (ms=-1 must shelve more strongly)")
        if not self.a51 + self.a52 > 0:
            raise ValueError("singlet must decay: a51 + a52 > 0")

    @property
    def dark_matrix(self) -> np.ndarray:
        a35, a45, a51, a52 = self.a35, self.a45, self.a51, self.a52
        return np.array(
            [
                [0.0, 0.0, 1.0, 0.0, a51],
                [0.0, 0.0, 0.0, 1.0, a52],
                [0.0, 0.0, -1.0 - a35, 0.0, 0.0],
                [0.0, 0.0, 0.0, -1.0 - a45, 0.0],
                [0.0, 0.0, a35, a45, -a51 - a52],
            ]
        )

    def matrix(self, s) -> np.ndarray:
        """Dimensionless rate matrix ``M(s)``, shape ``s.shape + (5, 5)``.

        ``dn/dt = gamma * M(s) @ n``.
        """
        s = np.asarray(s, dtype=float)
        return self.dark_matrix + s[..., None, None] * _PUMP

    def pump_parameter(self, intensity):
        """Pump parameter for a beam intensity in W/m^2."""
        return np.asarray(intensity, dtype=float) * self.sigma_scale

    @property
    def singlet_return_to_ms0(self) -> float:
        return self.a51 / (self.a51 + self.a52)

    # -- parameter file ----------------------------------------------------

    def to_mapping(self) -> dict:
        d = asdict(self)
        d["gamma_hz"] = d.pop("gamma")
        return {k: float(d[k]) for k in RATE_KEYS}

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RateConstants":
        missing = [k for k in RATE_KEYS if k not in mapping]
        if missing:
            raise KeyError(f"rate file missing keys: {missing}")
        extra = sorted(set(mapping) - set(RATE_KEYS))
        if extra:
            raise KeyError(f"unknown rate file keys: {extra}")
        return cls(
            gamma=float(mapping["gamma_hz"]),
            a35=float(mapping["a35"]),
            a45=float(mapping["a45"]),
            a51=float(mapping["a51"]),
            a52=float(mapping["a52"]),
            sigma_scale=float(mapping["sigma_scale"]),
        )

    @classmethod
    def load(cls, path) -> "RateConstants":
        with open(path) as fh:
            return cls.from_mapping(yaml.safe_load(fh))

    def save(self, path, header: str | None = None):
        lines = []
        if header:
            lines += [f"# {ln}" for ln in header.splitlines()]
        # repr keeps the float bit pattern through a load/save cycle
        lines += [f"{k}: {v!r}" for k, v in self.to_mapping().items()]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def default(cls) -> "RateConstants":
        return _default_rates()


@lru_cache(maxsize=1)
def _default_rates() -> RateConstants:
    return RateConstants.load(_DEFAULT_RATES)


@dataclass(frozen=True)
class PopulationState:
    """Occupation probabilities of the five levels."""

    n: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = np.array(self.n, dtype=float)
        if n.shape != (5,):
            raise ValueError("population state needs exactly five entries")
        if not np.all(np.isfinite(n)):
            raise ValueError("population state must be finite")
        if n.min() < -NEG_TOL or n.max() > 1 + POP_TOL:
            raise ValueError(f"populations outside [0, 1]: {n}")
        if abs(n.sum() - 1.0) > POP_TOL:
            raise ValueError(f"populations sum to {n.sum()!r}, not 1")
        n.setflags(write=False)
        object.__setattr__(self, "n", n)

    def __repr__(self):
        return "PopulationState(" + ", ".join(f"{v:.6g}" for v in self.n) + ")"

    n1 = property(lambda self: self.n[0])
    n2 = property(lambda self: self.n[1])
    n3 = property(lambda self: self.n[2])
    n4 = property(lambda self: self.n[3])
    n5 = property(lambda self: self.n[4])

    @classmethod
    def ms0(cls):
        return cls([1.0, 0, 0, 0, 0])

    @classmethod
    def ms1(cls):
        return cls([0, 1.0, 0, 0, 0])

    @classmethod
    def unpolarized(cls):
        return cls([0.5, 0.5, 0, 0, 0])

    @classmethod
    def ground(cls, p0: float):
        """Ground-state mixture with ms=0 fraction ``p0``."""
        return cls([p0, 1.0 - p0, 0, 0, 0])

    def pi_flipped(self) -> "PopulationState":
        """Ideal microwave pi pulse: swap ms=0 and ms=-1 in ground and excited."""
        return PopulationState(swap_spin(self.n))


@dataclass(frozen=True)
class IlluminationSegment:
    """Constant pump ``s`` applied for ``duration`` seconds."""

    s: float
    duration: float

    def __post_init__(self):
        if not (math.isfinite(self.s) and math.isfinite(self.duration)):
            raise ValueError("segment parameters must be finite")
        if self.s < 0:
            raise ValueError("pump parameter must be non-negative")
        if self.duration < 0:
            raise ValueError("segment duration must be non-negative")


def swap_spin(n):
    n = np.asarray(n, dtype=float)
    return n[..., [1, 0, 3, 2, 4]]


def propagator(s, duration, rates: RateConstants) -> np.ndarray:
    """Exact propagator ``exp(gamma M(s) t)``; broadcasts over ``s`` and ``duration``."""
    s, duration = np.broadcast_arrays(np.asarray(s, float), np.asarray(duration, float))
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(duration))):
        raise ValueError("non-finite pump or duration")
    if np.any(duration < 0):
        raise ValueError("negative duration")
    if np.any(s < 0):
        raise ValueError("negative pump parameter")
    A = rates.matrix(s) * (rates.gamma * duration)[..., None, None]
    return expm(A)


def _clean(n):
    low = n.min(axis=-1)
    if np.any(low < -NEG_TOL):
        log.warning("negative population %.3g clamped to zero", float(low.min()))
    n = np.clip(n, 0.0, None)
    return n / n.sum(axis=-1, keepdims=True)


def propagate(n, s, duration, rates: RateConstants) -> np.ndarray:
    """Vectorised evolution of raw population arrays (``(..., 5)``)."""
    U = propagator(s, duration, rates)
    out = np.einsum("...ij,...j->...i", U, np.asarray(n, dtype=float))
    return _clean(out)


def evolve(state: PopulationState, seg: IlluminationSegment, rates: RateConstants) -> PopulationState:
    """Evolve ``state`` through one constant-illumination segment."""
    return PopulationState(propagate(state.n, seg.s, seg.duration, rates))


def evolve_train(state: PopulationState, segments, rates: RateConstants) -> PopulationState:
    """Evolve through a sequence of segments.

    Propagators of repeated ``(s, duration)`` pairs are computed once.
    """
    cache = {}
    n = state.n.copy()
    for seg in segments:
        key = (seg.s, seg.duration)
        U = cache.get(key)
        if U is None:
            U = cache[key] = propagator(seg.s, seg.duration, rates)
        n = U @ n
    return PopulationState(_clean(n))


def steady_state(s: float, rates: RateConstants) -> PopulationState:
    """Stationary populations under constant pump ``s > 0``."""
    if not s > 0:
        raise ValueError("steady state is degenerate without pumping (s must be > 0)")
    ns = null_space(rates.matrix(s))
    if ns.shape[1] != 1:
        raise ValueError("rate matrix null space is not one-dimensional")
    v = ns[:, 0]
    v = v / v.sum()
    return PopulationState(_clean(v))


def relaxation_limit(n, rates: RateConstants) -> np.ndarray:
    """Ground-state populations reached after all transient population decays in the dark."""
    n = np.asarray(n, dtype=float)
    b = rates.singlet_return_to_ms0
    via3 = rates.a35 / (1 + rates.a35)
    via4 = rates.a45 / (1 + rates.a45)
    p0 = n[..., 0] + n[..., 2] * ((1 - via3) + via3 * b) + n[..., 3] * via4 * b + n[..., 4] * b
    out = np.zeros_like(n)
    out[..., 0] = p0
    out[..., 1] = 1.0 - p0
    return out


def polarization(state: PopulationState, rates: RateConstants, tol: float = POP_TOL) -> float:
    """Fraction in ms=0 once excited and singlet population has relaxed.

    Propagates in the dark with doubling durations until the transient
    population falls below ``tol``.
    """
    n = state.n
    slowest = min(1 + rates.a35, 1 + rates.a45, rates.a51 + rates.a52)
    t = 1.0 / (rates.gamma * slowest)
    while n[2:].sum() >= tol:
        n = propagate(n, 0.0, t, rates)
        t *= 2
    return float(n[0])


def readout_weights(s, window, rates: RateConstants, efficiency: float = 1.0, settle: float = 0.0):
    """Linear functional mapping a population vector to collected photons.

    Photons collected in ``[settle, settle + window]`` under pump ``s`` (the
    pump being off during ``settle``) equal ``weights @ n``. Uses the
    block-matrix identity for the integral of a matrix exponential.
    """
    s = np.asarray(s, dtype=float)
    if window <= 0:
        raise ValueError("readout window must be positive")
    if settle < 0:
        raise ValueError("settle time must be non-negative")
    A = np.zeros(s.shape + (6, 6))
    A[..., :5, :5] = rates.matrix(s) * rates.gamma * window
    A[..., 5, :5] = _BRIGHT * rates.gamma * window
    w = expm(A)[..., 5, :5]
    if settle > 0:
        w = w @ propagator(0.0, settle, rates)
    return efficiency * w


def fluorescence(state: PopulationState, s: float, window: float, rates: RateConstants,
                 efficiency: float = 1.0) -> float:
    """Expected photons ``efficiency * gamma * integral (n3 + n4) dt`` over the window."""
    if not window > 0:
        raise ValueError("readout window must be positive")
    return float(readout_weights(s, window, rates, efficiency) @ state.n)


@dataclass(frozen=True)
class ReadoutConfig:
    """Optical spin readout settings.

    ``s`` is the pump at the readout-beam centre. ``settle`` is a dark delay
    after the last green pulse so singlet population relaxes before counting.
    ``efficiency`` converts emitted to collected photons.
    """

    s: float = 1.0
    window: float = 300e-9
    settle: float = 1e-6
    efficiency: float = 1.0

    def weights(self, rates: RateConstants, scale=1.0):
        """Readout weights at relative beam intensity ``scale`` (broadcasts)."""
        return readout_weights(np.asarray(scale, float) * self.s, self.window, rates,
                               self.efficiency, self.settle)

    def photons(self, state, rates: RateConstants, scale=1.0):
        n = state.n if isinstance(state, PopulationState) else np.asarray(state, float)
        return np.einsum("...i,...i->...", self.weights(rates, scale), n)

    def calibrated(self, rates: RateConstants, photons_per_shot: float = 0.02) -> "ReadoutConfig":
        """Copy whose efficiency yields ``photons_per_shot`` for an ms=0 NV at beam centre."""
        raw = float(readout_weights(self.s, self.window, rates, 1.0, self.settle)[0])
        return ReadoutConfig(self.s, self.window, self.settle, photons_per_shot / raw)


def polarization_surface(pumps, durations, rates: RateConstants, initial=None) -> np.ndarray:
    """Relaxed ms=0 fraction after a square pulse, on a ``(durations, pumps)`` grid.

    Starts from an unpolarized ground state unless ``initial`` is given.
    """
    n0 = PopulationState.unpolarized().n if initial is None else initial.n
    pumps = np.asarray(pumps, float)
    durations = np.asarray(durations, float)
    S, T = np.meshgrid(pumps, durations)
    n = propagate(np.broadcast_to(n0, S.shape + (5,)), S, T, rates)
    return relaxation_limit(n, rates)[..., 0]
