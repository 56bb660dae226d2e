"""
Pulse sequences and analytic NV signal models.

Microwave pulses are ideal and instantaneous. The sensing window of a
sequence runs from its first pi/2 pulse to the next pi/2 pulse; inside it
each pi pulse flips the sign of the toggling function ``s(t)``, and the
phase picked up from a field ``b(t)`` is ``gamma_e * integral s(t) b(t) dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .constants import GAMMA_E, GAMMA_P, TWO_PI

XY8_AXES = ("x", "y", "x", "y", "y", "x", "y", "x")
_AXES = ("x", "y", "-x", "-y")


@dataclass(frozen=True)
class GreenPulse:
    duration: float
    beam: str = "gaussian"

    def __post_init__(self):
        if not self.duration >= 0:
            raise ValueError("pulse duration must be non-negative")
        if self.beam not in ("gaussian", "doughnut"):
            raise ValueError(f"unknown beam {self.beam!r}")


@dataclass(frozen=True)
class MicrowavePulse:
    angle: float
    axis: str = "x"

    def __post_init__(self):
        if self.axis not in _AXES:
            raise ValueError(f"unknown phase axis {self.axis!r}")

    @property
    def is_pi(self):
        return math.isclose(self.angle, math.pi, rel_tol=1e-9)

    @property
    def is_half_pi(self):
        return math.isclose(self.angle, math.pi / 2, rel_tol=1e-9)


@dataclass(frozen=True)
class FreeEvolution:
    duration: float

    def __post_init__(self):
        if not self.duration >= 0:
            raise ValueError("free evolution must be non-negative")


@dataclass(frozen=True)
class Readout:
    window: float = 300e-9

    def __post_init__(self):
        if not self.window > 0:
            raise ValueError("readout window must be positive")


Element = GreenPulse | MicrowavePulse | FreeEvolution | Readout


class PulseSequence:
    """Ordered, immutable list of sequence elements ending in at most one Readout."""

    def __init__(self, elements):
        elements = tuple(elements)
        for i, el in enumerate(elements):
            if not isinstance(el, (GreenPulse, MicrowavePulse, FreeEvolution, Readout)):
                raise TypeError(f"not a sequence element: {el!r}")
            if isinstance(el, Readout) and i != len(elements) - 1:
                raise ValueError("a Readout must terminate the sequence")
        self.elements = elements

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)

    def __eq__(self, other):
        return isinstance(other, PulseSequence) and self.elements == other.elements

    def __repr__(self):
        return f"PulseSequence({list(self.elements)!r})"

    @property
    def total_duration(self) -> float:
        t = 0.0
        for el in self.elements:
            if isinstance(el, (GreenPulse, FreeEvolution)):
                t += el.duration
            elif isinstance(el, Readout):
                t += el.window
        return t

    @property
    def pi_pulses(self):
        return [el for el in self.elements if isinstance(el, MicrowavePulse) and el.is_pi]

    def green_pulses(self, beam=None):
        return [el for el in self.elements
                if isinstance(el, GreenPulse) and (beam is None or el.beam == beam)]

    def toggling_segments(self):
        """``(starts, ends, signs)`` of the toggling function within the sensing window.

        Time zero is the first pi/2 pulse.
        """
        starts, ends, signs = [], [], []
        t, sign, inside = 0.0, 1.0, False
        for el in self.elements:
            if isinstance(el, MicrowavePulse):
                if el.is_half_pi:
                    if inside:
                        break
                    inside = True
                elif el.is_pi and inside:
                    sign = -sign
            elif inside and isinstance(el, FreeEvolution):
                if el.duration > 0:
                    starts.append(t)
                    ends.append(t + el.duration)
                    signs.append(sign)
                t += el.duration
        return np.array(starts), np.array(ends), np.array(signs)

    @property
    def sensing_time(self) -> float:
        s, e, _ = self.toggling_segments()
        return float(np.sum(e - s))

    def toggling(self, t):
        """Toggling function evaluated at times ``t`` (0 outside the window)."""
        t = np.asarray(t, float)
        out = np.zeros_like(t)
        for a, b, sg in zip(*self.toggling_segments()):
            out = np.where((t >= a) & (t < b), sg, out)
        return out

    @property
    def projection_sign(self) -> int:
        """+1 when the closing pi/2 maps zero phase to ms=0, -1 for the opposite phase."""
        halves = [el for el in self.elements if isinstance(el, MicrowavePulse) and el.is_half_pi]
        if len(halves) < 2:
            return 1
        return 1 if halves[-1].axis == halves[0].axis else -1

    def with_final_phase(self, axis: str) -> "PulseSequence":
        """Copy with the closing pi/2 pulse about ``axis``."""
        els = list(self.elements)
        idx = [i for i, el in enumerate(els) if isinstance(el, MicrowavePulse) and el.is_half_pi]
        if len(idx) < 2:
            raise ValueError("sequence has no closing pi/2 pulse")
        els[idx[-1]] = replace(els[idx[-1]], axis=axis)
        return PulseSequence(els)

    # -- serialisation (durations in ns) ------------------------------------

    def to_dict(self) -> dict:
        out = []
        for el in self.elements:
            if isinstance(el, GreenPulse):
                out.append({"type": "green", "beam": el.beam, "duration_ns": el.duration * 1e9})
            elif isinstance(el, MicrowavePulse):
                out.append({"type": "mw", "angle_deg": math.degrees(el.angle), "axis": el.axis})
            elif isinstance(el, FreeEvolution):
                out.append({"type": "wait", "duration_ns": el.duration * 1e9})
            else:
                out.append({"type": "readout", "window_ns": el.window * 1e9})
        return {"elements": out}

    @classmethod
    def from_dict(cls, d: dict) -> "PulseSequence":
        els = []
        for item in d["elements"]:
            kind = item["type"]
            if kind == "green":
                els.append(GreenPulse(item["duration_ns"] * 1e-9, item.get("beam", "gaussian")))
            elif kind == "mw":
                els.append(MicrowavePulse(math.radians(item["angle_deg"]), item.get("axis", "x")))
            elif kind == "wait":
                els.append(FreeEvolution(item["duration_ns"] * 1e-9))
            elif kind == "readout":
                els.append(Readout(item["window_ns"] * 1e-9))
            else:
                raise ValueError(f"unknown element type {kind!r}")
        return cls(els)

    def save(self, path):
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))

    @classmethod
    def load(cls, path) -> "PulseSequence":
        return cls.from_dict(yaml.safe_load(Path(path).read_text()))


def _check_time(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive, got {value!r}")


def build_hahn_echo(tau_half, init=2e-6, readout=300e-9) -> PulseSequence:
    """pi/2 - tau - pi - tau - pi/2 with a Gaussian initialisation pulse."""
    _check_time("tau_half", tau_half)
    els = [GreenPulse(init)] if init else []
    els += [
        MicrowavePulse(math.pi / 2, "x"),
        FreeEvolution(tau_half),
        MicrowavePulse(math.pi, "x"),
        FreeEvolution(tau_half),
        MicrowavePulse(math.pi / 2, "x"),
        Readout(readout),
    ]
    return PulseSequence(els)


def build_xy8(k, tau, init=2e-6, readout=300e-9) -> PulseSequence:
    """XY8-k: ``8k`` pi pulses spaced by ``tau`` with tau/2 at both ends."""
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    _check_time("tau", tau)
    els = [GreenPulse(init)] if init else []
    els.append(MicrowavePulse(math.pi / 2, "x"))
    n = 8 * int(k)
    for i in range(n):
        els.append(FreeEvolution(tau / 2 if i == 0 else tau))
        els.append(MicrowavePulse(math.pi, XY8_AXES[i % 8]))
    els.append(FreeEvolution(tau / 2))
    els += [MicrowavePulse(math.pi / 2, "x"), Readout(readout)]
    return PulseSequence(els)


def wrap_spin_resolft(seq: PulseSequence, doughnut_duration) -> PulseSequence:
    """Insert the repolarising doughnut pulse immediately before the readout."""
    if not doughnut_duration >= 0:
        raise ValueError("doughnut duration must be non-negative")
    els = list(seq.elements)
    if not els or not isinstance(els[-1], Readout):
        raise ValueError("sequence must end with a Readout")
    els.insert(len(els) - 1, GreenPulse(doughnut_duration, "doughnut"))
    return PulseSequence(els)


def build_imaging_sequence(tau_d, shot_duration=20e-6, readout=300e-9) -> PulseSequence:
    """Initialise, pi pulse, doughnut, read out; padded with init light to ``shot_duration``."""
    init = shot_duration - tau_d - readout
    if init < 0:
        raise ValueError("shot duration too short for the doughnut pulse")
    base = PulseSequence([GreenPulse(init), MicrowavePulse(math.pi, "x"), Readout(readout)])
    return wrap_spin_resolft(base, tau_d)


# --------------------------------------------------------------------------
# signal models


@dataclass(frozen=True)
class CoherenceModel:
    """Stretched-exponential decay ``A exp(-(t/T2)^p)``."""

    A: float = 1.0
    T2: float = 800e-6
    p: float = 3.0

    def __post_init__(self):
        if not self.T2 > 0:
            raise ValueError("T2 must be positive")
        if not self.p > 0:
            raise ValueError("p must be positive")
        if not 0 < self.A <= 1:
            raise ValueError("A must lie in (0, 1]")

    def __call__(self, t):
        return coherence_envelope(t, self)


@dataclass(frozen=True)
class ACField:
    """``amplitude * sin(2 pi frequency t + phase)`` with t from the first pi/2 pulse."""

    amplitude: float
    frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise ValueError("field amplitude must be non-negative")
        if not self.frequency > 0:
            raise ValueError("field frequency must be positive")


@dataclass(frozen=True)
class NuclearSignal:
    """Narrow-band nuclear field: RMS amplitude (T), centre frequency (Hz), correlation time (s)."""

    B_rms: float
    nu_center: float
    t_c: float

    def __post_init__(self):
        if not (self.B_rms >= 0 and self.nu_center > 0 and self.t_c > 0):
            raise ValueError("nuclear signal parameters must be positive")


def coherence_envelope(t, model: CoherenceModel):
    t = np.asarray(t, float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    return model.A * np.exp(-((t / model.T2) ** model.p))


def phase_per_tesla(seq: PulseSequence, frequency, phase=0.0, gamma_e=GAMMA_E) -> float:
    """Accumulated phase per tesla of AC amplitude (closed form per segment)."""
    w = TWO_PI * frequency
    a, b, sg = seq.toggling_segments()
    if a.size == 0:
        return 0.0
    integral = np.sum(sg * (np.cos(w * a + phase) - np.cos(w * b + phase))) / w
    return float(gamma_e * integral)


def echo_phase(seq: PulseSequence, field: ACField, gamma_e=GAMMA_E) -> float:
    return field.amplitude * phase_per_tesla(seq, field.frequency, field.phase, gamma_e)


def magnetometry_contrast(B_pk, seq: PulseSequence, coherence: CoherenceModel, frequency,
                          phase=0.0, gamma_e=GAMMA_E):
    """Coherence envelope times ``cos(echo phase)``; broadcasts over ``B_pk``."""
    k = phase_per_tesla(seq, frequency, phase, gamma_e)
    env = coherence_envelope(seq.sensing_time, coherence)
    return env * np.cos(k * np.asarray(B_pk, float))


def _series_kernel(z):
    # (z - 1 + exp(-z)) without cancellation for small |z|
    return z * z * (0.5 - z / 6 + z * z / 24 - z**3 / 120 + z**4 / 720)


def filter_K(N, tau, t_c, detuning=0.0):
    """Filter functional of a pi-pulse train for an exponentially correlated signal.

    With ``T = N tau`` and ``a = 1/t_c - i detuning`` (detuning in rad/s
    between the sequence frequency ``pi/tau`` and the signal),
    ``K = 2 Re[(a T - 1 + exp(-a T)) / a^2]``. On resonance this is
    ``2 (t_c T - t_c^2 (1 - exp(-T/t_c)))``.
    """
    N = np.asarray(N, float)
    if np.any(N < 1):
        raise ValueError("need at least one pulse")
    tau = np.asarray(tau, float)
    t_c = np.asarray(t_c, float)
    if np.any(tau <= 0) or np.any(t_c <= 0):
        raise ValueError("times must be positive")
    T = N * tau
    a = 1.0 / t_c - 1j * np.asarray(detuning, float)
    z = a * T
    small = np.abs(z) < 1e-2
    zs = np.where(small, z, 0.0)
    zl = np.where(small, 1.0, z)
    core = np.where(small, _series_kernel(zs), zl - 1.0 + np.exp(-zl))
    return 2.0 * np.real(core / (a * a))


def larmor_frequency(B0, gamma=GAMMA_P):
    """Nuclear Larmor frequency in Hz for a static field ``B0`` in tesla."""
    B0 = np.asarray(B0, float)
    if np.any(B0 < 0):
        raise ValueError("static field must be non-negative")
    return gamma / TWO_PI * B0


def nmr_contrast(tau, N, sig: NuclearSignal, gamma_e=GAMMA_E, kernel=filter_K,
                 background: CoherenceModel | None = None):
    """Normalised NV contrast ``exp(-(2/pi^2) gamma_e^2 B_rms^2 K)`` versus pulse spacing.

    The sequence frequency ``1/(2 tau)`` is compared with ``sig.nu_center``
    so the dip sits at ``tau = 1/(2 nu_center)``.
    """
    tau = np.asarray(tau, float)
    detuning = np.pi / tau - TWO_PI * sig.nu_center
    K = kernel(N, tau, sig.t_c, detuning)
    c = np.exp(-(2.0 / np.pi**2) * (gamma_e * sig.B_rms) ** 2 * K)
    if background is not None:
        c = c * coherence_envelope(N * tau, background)
    return c


def dip_tau(nu_center) -> float:
    return 1.0 / (2.0 * nu_center)


def ensemble_signal(signals, weights):
    """Weight-normalised combination of per-NV signals (first axis indexes NVs)."""
    signals = np.asarray(signals, float)
    weights = np.asarray(weights, float)
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    total = weights.sum()
    if not total > 0:
        raise ValueError("at least one weight must be positive")
    return np.tensordot(weights / total, signals, axes=(0, 0))


def fluorescence_weights(nv_positions, beam, brightness=None):
    """Per-NV weight: readout beam intensity at the NV times its brightness."""
    w = beam.at(np.asarray(nv_positions, float))
    if brightness is not None:
        w = w * np.asarray(brightness, float)
    return w


# --------------------------------------------------------------------------
# Monte Carlo dephasing


def monte_carlo_coherence(seq: PulseSequence, sig: NuclearSignal, rng: np.random.Generator,
                          n_realizations=10_000, cells_per_segment=16, gamma_e=GAMMA_E,
                          chunk=1000) -> complex:
    """Average ``exp(i phi)`` over random narrow-band fields.

    Each realisation draws two unit-variance Ornstein-Uhlenbeck quadratures
    ``X(t), Y(t)`` with correlation time ``t_c`` and forms
    ``b(t) = B_rms (X cos(w t) + Y sin(w t))``. The phase integral uses the
    exact integral of ``s(t) cos(w t)`` (and sine) over each cell with the
    quadratures held at their cell-centre value.
    """
    a, b, sg = seq.toggling_segments()
    if a.size == 0:
        return 1.0 + 0j
    w = TWO_PI * sig.nu_center
    edges, signs = [], []
    for lo, hi, s in zip(a, b, sg):
        e = np.linspace(lo, hi, cells_per_segment + 1)
        edges.append(np.column_stack([e[:-1], e[1:]]))
        signs.append(np.full(cells_per_segment, s))
    edges = np.concatenate(edges)
    signs = np.concatenate(signs)
    lo, hi = edges[:, 0], edges[:, 1]
    wc = signs * (np.sin(w * hi) - np.sin(w * lo)) / w
    ws = signs * (np.cos(w * lo) - np.cos(w * hi)) / w
    mid = 0.5 * (lo + hi)
    dt = np.diff(mid, prepend=mid[0])
    rho = np.exp(-dt / sig.t_c)
    kick = np.sqrt(1.0 - rho**2)

    total = 0j
    done = 0
    while done < n_realizations:
        m = min(chunk, n_realizations - done)
        x = rng.standard_normal((2, m))
        phi = np.zeros(m)
        for k in range(mid.size):
            if k:
                x = rho[k] * x + kick[k] * rng.standard_normal((2, m))
            phi += wc[k] * x[0] + ws[k] * x[1]
        phi *= gamma_e * sig.B_rms
        total += np.exp(1j * phi).sum()
        done += m
    return total / n_realizations


def implied_K(coherence, B_rms, gamma_e=GAMMA_E):
    """Invert the dip formula: the filter value that produces ``coherence``."""
    return -np.log(np.abs(coherence)) * np.pi**2 / (2.0 * (gamma_e * B_rms) ** 2)
