"""
Spin-RESOLFT scan synthesis.

Each pixel runs two sequences sharing the same light: the signal sequence
(initialise, microwave pi pulse, doughnut, read out) and the reference
(the same without the pi pulse). Both start from the relaxed state left by
the Gaussian initialisation pulse. Where the doughnut repolarises the spin
the two channels coincide, so ``ref0 - sig`` confines the image to the
doughnut centre.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .optics import BeamAlignment, DoughnutProfile, ideal_fwhm
from .photophysics import (
    PopulationState,
    RateConstants,
    ReadoutConfig,
    propagator,
    relaxation_limit,
    steady_state,
    swap_spin,
)
from .sequences import (
    CoherenceModel,
    NuclearSignal,
    PulseSequence,
    build_imaging_sequence,
    coherence_envelope,
    ensemble_signal,
    magnetometry_contrast,
    nmr_contrast,
    phase_per_tesla,
)

log = logging.getLogger(__name__)

# Gaussian readout spot whose FWHM is the diffraction limit at 532 nm, NA 1.45
DEFAULT_WAIST = float(ideal_fwhm()) / math.sqrt(2.0 * math.log(2.0))
DEFAULT_INIT_PUMP = 0.05

_DRIFT_KEY = 0xD7
_TRACK_KEY = 0x7C
_PIXEL_KEY = 0x91


# --------------------------------------------------------------------------
# single-NV forward model


def initial_state(rates: RateConstants, s_init=DEFAULT_INIT_PUMP) -> np.ndarray:
    """Relaxed ground state left behind by a long initialisation pulse at pump ``s_init``."""
    return relaxation_limit(steady_state(s_init, rates).n, rates)


@lru_cache(maxsize=8)
def default_readout(rates: RateConstants, photons_per_shot=0.02) -> ReadoutConfig:
    return ReadoutConfig().calibrated(rates, photons_per_shot)


def channel_photons(s_doughnut, read_scale, tau_d, rates: RateConstants,
                    readout: ReadoutConfig, init=None, pi_pulse=True):
    """Expected photons per shot ``(sig, ref0)`` for one NV.

    ``s_doughnut`` is the doughnut pump at the NV and ``read_scale`` the
    readout-beam intensity there relative to its centre. Both broadcast.
    """
    n0 = initial_state(rates) if init is None else np.asarray(init, float)
    s_doughnut, read_scale = np.broadcast_arrays(np.asarray(s_doughnut, float),
                                                 np.asarray(read_scale, float))
    U = propagator(s_doughnut, tau_d, rates)
    W = readout.weights(rates, read_scale)
    ref = np.einsum("...i,...ij,j->...", W, U, n0)
    if not pi_pulse:
        return ref, ref.copy()
    sig = np.einsum("...i,...ij,j->...", W, U, swap_spin(n0))
    return sig, ref


def resolft_psf(r, doughnut: DoughnutProfile, tau_d, rates: RateConstants | None = None,
                readout: ReadoutConfig | None = None, waist=DEFAULT_WAIST, init=None):
    """Noiseless spin-RESOLFT profile ``F_ref0 - F_sig`` (photons per shot).

    Parameters
    ----------
    r : array_like
        Distance (m) from the common beam centre to the NV.
    doughnut : DoughnutProfile
        Repolarising beam; its ``center`` is ignored.
    tau_d : float
        Doughnut duration in seconds.
    waist : float or None
        1/e^2 radius of the co-aligned readout spot; ``None`` reads out
        with uniform intensity.
    """
    rates = RateConstants.default() if rates is None else rates
    readout = default_readout(rates) if readout is None else readout
    r = np.asarray(r, float)
    if np.any(r < 0):
        raise ValueError("radial distance must be non-negative")
    g = np.ones_like(r) if waist is None else np.exp(-2.0 * r * r / waist**2)
    sig, ref = channel_photons(doughnut(r), g, tau_d, rates, readout, init)
    return ref - sig


def numeric_fwhm(x, y):
    """Full width at half maximum of a single-peaked sampled curve (linear interpolation)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    k = int(np.argmax(y))
    half = 0.5 * y[k]
    left = np.flatnonzero(y[:k] < half)
    right = np.flatnonzero(y[k:] < half)
    if left.size == 0 or right.size == 0:
        raise ValueError("curve does not fall below half maximum on both sides")
    i = left[-1]
    j = k + right[0]
    xl = x[i] + (half - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
    xr = x[j - 1] + (half - y[j - 1]) * (x[j] - x[j - 1]) / (y[j] - y[j - 1])
    return float(xr - xl)


def psf_fwhm(doughnut: DoughnutProfile, tau_d, rates=None, readout=None, waist=DEFAULT_WAIST,
             span=None, n=4001):
    """FWHM (m) of :func:`resolft_psf` evaluated on a symmetric grid."""
    span = 1.5 * doughnut.r0 if span is None else span
    x = np.linspace(-span, span, n)
    return numeric_fwhm(x, resolft_psf(np.abs(x), doughnut, tau_d, rates, readout, waist))


def doughnut_for_fwhm(target, tau_d, r0=180e-9, epsilon=0.001, rates=None, readout=None,
                      waist=DEFAULT_WAIST, s_bounds=(1e-3, 1e3)) -> DoughnutProfile:
    """Doughnut whose peak pump ``s0`` gives a PSF of width ``target`` for duration ``tau_d``."""
    def err(log_s):
        return psf_fwhm(DoughnutProfile(math.exp(log_s), r0, epsilon), tau_d, rates, readout, waist) - target

    lo, hi = math.log(s_bounds[0]), math.log(s_bounds[1])
    if err(lo) * err(hi) > 0:
        raise ValueError("target FWHM not reachable within the pump bounds")
    return DoughnutProfile(math.exp(brentq(err, lo, hi, xtol=1e-10)), r0, epsilon)


# --------------------------------------------------------------------------
# drift and tracking


@dataclass(frozen=True)
class DriftModel:
    """Sample drift relative to the optics.

    ``"temperature"`` couples a sinusoidal temperature trace into a
    displacement along ``direction``; ``"stabilized"`` draws independent
    Gaussian jitter of ``sigma`` per line and axis; ``"none"`` is static.
    """

    mode: str = "none"
    coupling: float = 500e-9
    amplitude: float = 0.5
    period: float = 3600.0
    phase: float = 0.0
    direction: tuple = (1.0, 0.0)
    sigma: float = 11e-9

    def __post_init__(self):
        if self.mode not in ("none", "temperature", "stabilized"):
            raise ValueError(f"unknown drift mode {self.mode!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not self.period > 0:
            raise ValueError("period must be positive")
        d = np.asarray(self.direction, float)
        if d.shape != (2,) or not np.linalg.norm(d) > 0:
            raise ValueError("direction must be a non-zero 2-vector")
        object.__setattr__(self, "direction", tuple(d / np.linalg.norm(d)))

    def temperature(self, t):
        """Temperature excursion (deg C) at times ``t`` (s)."""
        return self.amplitude * np.sin(2 * np.pi * np.asarray(t, float) / self.period + self.phase)

    def slow(self, t):
        t = np.asarray(t, float)
        if self.mode != "temperature":
            return np.zeros(t.shape + (2,))
        return (self.coupling * self.temperature(t))[..., None] * np.asarray(self.direction)

    def displacements(self, t, rng: np.random.Generator):
        """Per-line displacement ``(n_lines, 2)`` in metres."""
        d = self.slow(t)
        if self.mode == "stabilized":
            d = d + rng.normal(0.0, self.sigma, d.shape)
        return d


@dataclass(frozen=True)
class TrackingPolicy:
    """Periodic re-centring on a reference emitter.

    Every ``interval`` lines the slow drift is measured with Gaussian error
    ``precision`` and subtracted. The reference choice only labels the
    record: a self-reference, a neighbouring NV or a drift-free marker all
    see the same common-mode drift.
    """

    interval: int = 1
    precision: float = 5e-9
    reference: str = "self"
    enabled: bool = True

    def __post_init__(self):
        if not self.precision > 0:
            raise ValueError("precision must be positive")
        if self.interval < 1:
            raise ValueError("interval must be >= 1")
        if self.reference not in ("self", "reference_nv", "gold_nanoparticle"):
            raise ValueError(f"unknown reference {self.reference!r}")

    def corrections(self, t, drift: DriftModel, rng: np.random.Generator):
        t = np.asarray(t, float)
        if not self.enabled:
            return np.zeros(t.shape + (2,))
        k = (np.arange(t.size) // self.interval) * self.interval
        err = rng.normal(0.0, self.precision, (t.size, 2))
        return drift.slow(t[k]) + err[k]


NO_TRACKING = TrackingPolicy(enabled=False)


# --------------------------------------------------------------------------
# scans


@dataclass(frozen=True)
class NVSite:
    position: tuple
    brightness: float = 1.0

    def __post_init__(self):
        p = tuple(float(v) for v in self.position)
        if len(p) != 2:
            raise ValueError("NV position must be 2-D")
        if not self.brightness >= 0:
            raise ValueError("brightness must be non-negative")
        object.__setattr__(self, "position", p)


def line_grid(start, stop, n, y=0.0, repeats=1):
    """Grid ``(repeats, n, 2)`` of identical line scans along x."""
    if n < 1 or repeats < 1:
        raise ValueError("grid must be non-empty")
    x = np.linspace(start, stop, n)
    line = np.column_stack([x, np.full(n, y)])
    return np.broadcast_to(line, (repeats, n, 2)).copy()


def raster_grid(x, y):
    """Grid ``(len(y), len(x), 2)``; each row is one line scan."""
    X, Y = np.meshgrid(np.asarray(x, float), np.asarray(y, float))
    return np.stack([X, Y], axis=-1)


@dataclass
class ScanConfig:
    grid: np.ndarray
    doughnut: DoughnutProfile
    tau_d: float
    nvs: tuple = (NVSite((0.0, 0.0)),)
    reps_per_pixel: int = 20_000
    photons_per_shot: float = 0.02
    shot_duration: float = 20e-6
    overhead: float = 3.0
    waist: float = DEFAULT_WAIST
    alignment: BeamAlignment = field(default_factory=BeamAlignment)
    rates: RateConstants | None = None
    seed: int = 0
    pi_pulse: bool = True
    smoothing: bool = False

    def __post_init__(self):
        g = np.asarray(self.grid, float)
        if g.ndim == 2:
            g = g[None]
        if g.ndim != 3 or g.shape[-1] != 2 or g.shape[0] * g.shape[1] == 0:
            raise ValueError("grid must be non-empty with shape (lines, pixels, 2)")
        self.grid = g
        if self.reps_per_pixel < 1:
            raise ValueError("reps_per_pixel must be >= 1")
        if not self.photons_per_shot > 0:
            raise ValueError("photons_per_shot must be positive")
        if not self.overhead >= 1:
            raise ValueError("overhead factor must be >= 1")
        if not self.tau_d >= 0:
            raise ValueError("tau_d must be non-negative")
        self.nvs = tuple(nv if isinstance(nv, NVSite) else NVSite(nv) for nv in self.nvs)
        if self.rates is None:
            self.rates = RateConstants.default()

    @property
    def n_lines(self):
        return self.grid.shape[0]

    @property
    def n_pixels(self):
        return self.grid.shape[0] * self.grid.shape[1]

    @property
    def sequence(self) -> PulseSequence:
        return build_imaging_sequence(self.tau_d, self.shot_duration)

    @property
    def readout(self) -> ReadoutConfig:
        return default_readout(self.rates, self.photons_per_shot)

    @property
    def line_time(self) -> float:
        return self.grid.shape[1] * self.reps_per_pixel * self.sequence.total_duration * self.overhead

    def line_times(self):
        return np.arange(self.n_lines) * self.line_time


@dataclass
class ScanResult:
    positions: np.ndarray
    sig_counts: np.ndarray
    ref0_counts: np.ndarray
    profile: np.ndarray
    displacement: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.sig_counts.shape

    def line(self, i):
        """``(x, profile)`` of line ``i``."""
        return self.positions[i, :, 0], self.profile[i]

    def columns(self) -> dict:
        return {
            "x_nm": self.positions[..., 0].ravel() * 1e9,
            "y_nm": self.positions[..., 1].ravel() * 1e9,
            "sig_counts": self.sig_counts.ravel(),
            "ref0_counts": self.ref0_counts.ravel(),
            "profile": self.profile.ravel(),
        }

    def save(self, path, header=None):
        from .io import write_csv, write_sidecar

        meta = dict(self.metadata)
        meta["shape"] = list(self.shape)
        meta["displacement_nm"] = (self.displacement * 1e9).tolist()
        write_csv(path, self.columns(), header)
        write_sidecar(path, meta)

    @classmethod
    def load(cls, path) -> "ScanResult":
        from .io import read_csv, read_sidecar

        cols, _ = read_csv(path, required=SCAN_COLUMNS)
        meta = read_sidecar(path) or {}
        n = cols["x_nm"].size
        shape = tuple(meta.get("shape", (1, n)))
        pos = np.stack([cols["x_nm"], cols["y_nm"]], axis=-1).reshape(shape + (2,)) * 1e-9
        disp = np.asarray(meta.get("displacement_nm", np.zeros((shape[0], 2))), float) * 1e-9
        return cls(pos, cols["sig_counts"].astype(np.int64).reshape(shape),
                   cols["ref0_counts"].astype(np.int64).reshape(shape),
                   cols["profile"].reshape(shape), disp, meta)


SCAN_COLUMNS = ("x_nm", "y_nm", "sig_counts", "ref0_counts", "profile")


def expected_photons(config: ScanConfig, displacement=None):
    """Noiseless photons per shot ``(sig, ref0)`` on the grid, shape ``(lines, pixels)``.

    ``displacement`` (``(lines, 2)``) shifts every NV relative to the optics.
    """
    grid = config.grid
    L, P = grid.shape[:2]
    disp = np.zeros((L, 2)) if displacement is None else np.asarray(displacement, float)
    dc = grid + np.asarray(config.alignment.doughnut_offset)
    gc = grid + np.asarray(config.alignment.gaussian_offset)
    sig = np.zeros((L, P))
    ref = np.zeros((L, P))
    for nv in config.nvs:
        q = np.asarray(nv.position) + disp[:, None, :]
        rd = np.linalg.norm(q - dc, axis=-1)
        rg = np.linalg.norm(q - gc, axis=-1)
        g = np.exp(-2.0 * rg * rg / config.waist**2)
        s, r = channel_photons(config.doughnut(rd), g, config.tau_d, config.rates,
                               config.readout, pi_pulse=config.pi_pulse)
        sig += nv.brightness * s
        ref += nv.brightness * r
    return sig, ref


def running_average(profile):
    """Two-pixel running average along each line; the last pixel is kept as is."""
    out = np.array(profile, float)
    out[..., :-1] = 0.5 * (out[..., :-1] + out[..., 1:])
    return out


def pixel_rng(seed, line, pixel) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_PIXEL_KEY, line, pixel)))


def simulate_scan(config: ScanConfig, drift: DriftModel | None = None,
                  tracking: TrackingPolicy | None = None) -> ScanResult:
    """Poisson-sampled scan with drift, tracking and background subtraction.

    Every pixel draws from its own stream keyed by ``(seed, line, pixel)``
    so results do not depend on evaluation order.
    """
    drift = DriftModel() if drift is None else drift
    tracking = NO_TRACKING if tracking is None else tracking
    t = config.line_times()
    drng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(_DRIFT_KEY,)))
    trng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(_TRACK_KEY,)))
    raw = drift.displacements(t, drng)
    disp = raw - tracking.corrections(t, drift, trng)
    mean_sig, mean_ref = expected_photons(config, disp)
    reps = config.reps_per_pixel
    L, P = mean_sig.shape
    sig = np.empty((L, P), np.int64)
    ref = np.empty((L, P), np.int64)
    for i in range(L):
        for j in range(P):
            rng = pixel_rng(config.seed, i, j)
            sig[i, j] = rng.poisson(reps * mean_sig[i, j])
            ref[i, j] = rng.poisson(reps * mean_ref[i, j])
    profile = (ref - sig).astype(float)
    if config.smoothing:
        profile = running_average(profile)
    meta = {
        "seed": int(config.seed),
        "reps_per_pixel": int(reps),
        "tau_d_us": config.tau_d * 1e6,
        "line_time_s": config.line_time,
        "drift_mode": drift.mode,
        "tracking": tracking.reference if tracking.enabled else "off",
        "smoothing": bool(config.smoothing),
    }
    return ScanResult(config.grid.copy(), sig, ref, profile, disp, meta)


def acquisition_budget(config: ScanConfig) -> dict:
    """Ideal and overhead-inclusive acquisition time of a scan (s)."""
    ideal = config.n_pixels * config.reps_per_pixel * config.sequence.total_duration
    return {
        "pixels": config.n_pixels,
        "sequence_s": config.sequence.total_duration,
        "ideal_s": ideal,
        "actual_s": ideal * config.overhead,
    }


def pixel_budget(pixels, reps, sequence_duration, overhead=1.0) -> float:
    if pixels < 0 or reps < 0:
        raise ValueError("counts must be non-negative")
    return pixels * reps * sequence_duration * overhead


# --------------------------------------------------------------------------
# pulsed-contrast experiments


@dataclass(frozen=True)
class ContrastBudget:
    """Photon budget of the two-projection contrast measurement.

    ``bright`` and ``dark`` are photons per shot for ms=0 and ms=-1;
    ``polarization`` is the ms=0 population after initialisation.
    """

    reps: int | None = 40_000
    bright: float = 0.02
    dark: float = 0.0111
    polarization: float = 0.892

    def __post_init__(self):
        if self.reps is not None and self.reps < 1:
            raise ValueError("reps must be >= 1 or None for a noiseless budget")
        if not (self.bright > self.dark >= 0):
            raise ValueError("need bright > dark >= 0")
        if not 0.5 < self.polarization <= 1:
            raise ValueError("polarization must lie in (0.5, 1]")

    @classmethod
    def from_rates(cls, rates: RateConstants | None = None, reps=40_000, photons_per_shot=0.02):
        rates = RateConstants.default() if rates is None else rates
        ro = default_readout(rates, photons_per_shot)
        n0 = initial_state(rates)
        return cls(reps, float(ro.photons(PopulationState.ms0(), rates)),
                   float(ro.photons(PopulationState.ms1(), rates)), float(n0[0]))

    @property
    def amplitude(self) -> float:
        """Contrast produced by a fully coherent projection."""
        return (2 * self.polarization - 1) * (self.bright - self.dark) / (self.bright + self.dark)

    def measure(self, coherence, rng: np.random.Generator | None = None):
        """Contrast ``(F0 - F1) / (F0 + F1)`` and its shot-noise sigma for projected coherence values."""
        c = np.asarray(coherence, float)
        q = self.polarization - 0.5
        mean0 = self.dark + (self.bright - self.dark) * (0.5 + q * c)
        mean1 = self.dark + (self.bright - self.dark) * (0.5 - q * c)
        if self.reps is None:
            C = (mean0 - mean1) / (mean0 + mean1)
            return C, np.zeros_like(C)
        if rng is None:
            raise ValueError("a random generator is required for a finite budget")
        F0 = rng.poisson(self.reps * mean0).astype(float)
        F1 = rng.poisson(self.reps * mean1).astype(float)
        tot = np.maximum(F0 + F1, 1.0)
        C = (F0 - F1) / tot
        sigma = np.sqrt((1.0 - C * C) / tot)
        return C, np.maximum(sigma, 1.0 / tot)


@dataclass
class ContrastDataset:
    x: np.ndarray
    contrast: np.ndarray
    sigma: np.ndarray
    truth: dict = field(default_factory=dict)


def simulate_coherence_experiment(times, models, weights=None, budget: ContrastBudget | None = None,
                                  rng: np.random.Generator | None = None) -> ContrastDataset:
    """Echo contrast versus total free-evolution time.

    ``models`` is a CoherenceModel or a list of them; several NVs are
    combined with fluorescence ``weights`` into one ensemble signal.
    """
    budget = ContrastBudget() if budget is None else budget
    times = np.asarray(times, float)
    if isinstance(models, CoherenceModel):
        models = [models]
    env = np.array([coherence_envelope(times, m) for m in models])
    weights = np.ones(len(models)) if weights is None else weights
    c = ensemble_signal(env, weights)
    C, sigma = budget.measure(c, rng)
    return ContrastDataset(times, C, sigma, {"amplitude": budget.amplitude})


def simulate_magnetometry(currents, field_per_amp, seq: PulseSequence, coherence: CoherenceModel,
                          frequency, budget: ContrastBudget | None = None,
                          rng: np.random.Generator | None = None) -> ContrastDataset:
    """Echo contrast versus drive current for one NV.

    The AC field amplitude at the NV is ``field_per_amp * current`` and is
    zero-phased at the first pi/2 pulse.
    """
    budget = ContrastBudget() if budget is None else budget
    currents = np.asarray(currents, float)
    c = magnetometry_contrast(field_per_amp * currents, seq, coherence, frequency)
    C, sigma = budget.measure(c, rng)
    truth = {"field_per_amp": field_per_amp, "phase_per_tesla": phase_per_tesla(seq, frequency)}
    return ContrastDataset(currents, C, sigma, truth)


def simulate_nmr_dataset(taus, n_pulses, sig: NuclearSignal, background: CoherenceModel | None = None,
                         budget: ContrastBudget | None = None,
                         rng: np.random.Generator | None = None) -> ContrastDataset:
    """Raw XY8 contrast versus pulse spacing, including the bare coherence decay."""
    budget = ContrastBudget() if budget is None else budget
    taus = np.asarray(taus, float)
    c = nmr_contrast(taus, n_pulses, sig, background=background)
    C, sigma = budget.measure(c, rng)
    truth = {"B_rms": sig.B_rms, "nu_center": sig.nu_center, "t_c": sig.t_c,
             "n_pulses": n_pulses, "amplitude": budget.amplitude}
    return ContrastDataset(taus, C, sigma, truth)
