"""
Model-specific fits with deterministic starting guesses.

All routines return a :class:`~spinresolft.fitting.engine.FitResult`; lengths
are in metres, times in seconds and frequencies in hertz.
"""

from __future__ import annotations

import math

import numpy as np

from ..constants import TWO_PI
from ..fields import ProtonBath, proton_brms
from ..optics import DoughnutProfile
from ..photophysics import RateConstants
from ..scanner import DEFAULT_WAIST, default_readout, numeric_fwhm, resolft_psf
from ..sequences import CoherenceModel, NuclearSignal, coherence_envelope, nmr_contrast
from .engine import FitError, FitResult, fit
from .spectral import peak_frequency, spectral_response

FOUR_LN2 = 4.0 * math.log(2.0)
P_BOUNDS = (0.5, 6.0)
EPS_BOUNDS = (0.0, 0.1)
MIN_DEPTH = 0.5e-9


def _sorted(x, y, sigma):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.shape != y.shape:
        raise ValueError("x and y must have the same shape")
    order = np.argsort(x, kind="stable")
    s = None if sigma is None else np.broadcast_to(np.asarray(sigma, float), y.shape)[order]
    return x[order], y[order], s


def _half_width_guess(x, y):
    try:
        return numeric_fwhm(x, y)
    except ValueError:
        return 0.25 * (x[-1] - x[0])


# --------------------------------------------------------------------------
# peaks


def gaussian_peak(x, amplitude, center, fwhm, offset):
    return amplitude * np.exp(-FOUR_LN2 * ((x - center) / fwhm) ** 2) + offset


def fit_gaussian_center(x, y, sigma=None) -> FitResult:
    """Gaussian plus offset; parameters ``amplitude, center, fwhm, offset``."""
    x, y, sigma = _sorted(x, y, sigma)
    k = int(np.argmax(y))
    off = float(np.min(y))
    p0 = [y[k] - off, x[k], _half_width_guess(x, y - off), off]
    span = x[-1] - x[0]
    lower = [0.0, x[0] - span, span * 1e-4, -np.inf]
    upper = [np.inf, x[-1] + span, 10 * span, np.inf]
    return fit(gaussian_peak, x, y, p0, sigma, (lower, upper),
               ("amplitude", "center", "fwhm", "offset"), x_scale=[abs(p0[0]) or 1, span, span, abs(p0[0]) or 1])


def _local_maxima(x, y, width=5):
    """Positions of the two highest maxima of a boxcar-smoothed curve."""
    k = np.ones(width) / width
    ys = np.convolve(y, k, mode="same")
    idx = np.flatnonzero((ys[1:-1] > ys[:-2]) & (ys[1:-1] >= ys[2:])) + 1
    idx = idx[np.argsort(ys[idx])[::-1]][:2]
    return sorted(float(x[i]) for i in idx)


def two_gaussians(x, a1, c1, a2, c2, fwhm, offset):
    return gaussian_peak(x, a1, c1, fwhm, 0.0) + gaussian_peak(x, a2, c2, fwhm, offset)


def fit_two_peaks(x, y, sigma=None, separation_guess=None) -> FitResult:
    """Two Gaussians of common width; the result carries ``separation`` and its error."""
    x, y, sigma = _sorted(x, y, sigma)
    span = x[-1] - x[0]
    one = fit_gaussian_center(x, y, sigma)
    c, w = one["center"], one["fwhm"]
    a = one["amplitude"]
    # centroid and spread of the baseline-subtracted profile
    yp = np.clip(y - one["offset"], 0.0, None)
    m = float(np.sum(x * yp) / np.sum(yp)) if np.any(yp > 0) else c
    sd = float(np.sqrt(np.sum(yp * (x - m) ** 2) / np.sum(yp))) if np.any(yp > 0) else w
    if separation_guess is None:
        starts = [(m, f * sd) for f in (1.0, 1.5, 2.0)] + [(c, f * w) for f in (0.25, 0.5, 0.75)]
        peaks = _local_maxima(x, y)
        if len(peaks) >= 2:
            starts.insert(0, (0.5 * (peaks[0] + peaks[1]), abs(peaks[1] - peaks[0])))
    else:
        starts = [(m, separation_guess)]
    lower = [0.0, x[0], 0.0, x[0], span * 1e-4, -np.inf]
    upper = [np.inf, x[-1], np.inf, x[-1], span, np.inf]
    res = None
    # multi-start; keep the lowest chi2
    for mid, sep in starts:
        p0 = [a, mid - sep / 2, a, mid + sep / 2, max(w - sep, w / 3), one["offset"]]
        try:
            trial = fit(two_gaussians, x, y, p0, sigma, (lower, upper),
                        ("a1", "c1", "a2", "c2", "fwhm", "offset"),
                        x_scale=[a or 1, span, a or 1, span, span, a or 1])
        except FitError:
            continue
        if res is None or trial.chi2 < res.chi2:
            res = trial
    if res is None:
        raise FitError("two-peak fit failed from every starting point")
    g = np.array([0, -1, 0, 1, 0, 0], float)
    res.extras["separation"] = abs(res["c2"] - res["c1"])
    res.extras["separation_error"] = float(math.sqrt(max(g @ res.covariance @ g, 0.0)))
    return res


# --------------------------------------------------------------------------
# spin-RESOLFT profile


def fit_resolft_psf(x, y, tau_d, r0=180e-9, epsilon=0.001, rates: RateConstants | None = None,
                    sigma=None, fit_epsilon=False, waist=DEFAULT_WAIST, s0_guess=1.0,
                    readout=None) -> FitResult:
    """Fit the five-level spin-RESOLFT profile to a line scan.

    The model is ``amplitude * resolft_psf(|x - center|) / resolft_psf(0) + offset``
    with the doughnut radius ``r0`` and duration ``tau_d`` known. Free
    parameters are ``center, s0, amplitude, offset`` and optionally
    ``epsilon``. The FWHM of the fitted profile is stored in ``extras``.
    """
    rates = RateConstants.default() if rates is None else rates
    readout = default_readout(rates) if readout is None else readout
    x, y, sigma = _sorted(x, y, sigma)

    def shape(r, s0, eps):
        d = DoughnutProfile(s0, r0, eps)
        p = resolft_psf(r, d, tau_d, rates, readout, waist)
        return p / resolft_psf(0.0, d, tau_d, rates, readout, waist)

    if fit_epsilon:
        def model(x, center, s0, amplitude, offset, eps):
            return amplitude * shape(np.abs(x - center), s0, eps) + offset
        names = ("center", "s0", "amplitude", "offset", "epsilon")
    else:
        def model(x, center, s0, amplitude, offset):
            return amplitude * shape(np.abs(x - center), s0, epsilon) + offset
        names = ("center", "s0", "amplitude", "offset")

    k = int(np.argmax(y))
    off = float(np.median(np.sort(y)[: max(3, y.size // 10)]))
    amp = float(y[k] - off)
    p0 = [x[k], s0_guess, amp, off]
    span = x[-1] - x[0]
    lower = [x[0] - 0.5 * span, 1e-4, 0.0, -np.inf]
    upper = [x[-1] + 0.5 * span, 1e4, np.inf, np.inf]
    scales = [span, 1.0, abs(amp) or 1.0, abs(amp) or 1.0]
    if fit_epsilon:
        p0.append(epsilon)
        lower.append(EPS_BOUNDS[0])
        upper.append(EPS_BOUNDS[1])
        scales.append(0.01)
    res = fit(model, x, y, p0, sigma, (lower, upper), names, x_scale=scales)
    grid = np.linspace(-1.5 * r0, 1.5 * r0, 6001)

    def width(s0, eps):
        return numeric_fwhm(grid, shape(np.abs(grid), s0, eps))

    eps = res["epsilon"] if fit_epsilon else epsilon
    s0 = res["s0"]
    fw = width(s0, eps)
    # linear error propagation through the width's dependence on s0 (and epsilon)
    grad = np.zeros(len(names))
    h = 1e-4 * s0
    grad[1] = (width(s0 + h, eps) - width(s0 - h, eps)) / (2 * h)
    if fit_epsilon:
        he = max(1e-6, 1e-3 * eps)
        grad[4] = (width(s0, eps + he) - width(s0, max(eps - he, 0.0))) / (eps + he - max(eps - he, 0.0))
    res.extras["fwhm"] = fw
    res.extras["fwhm_error"] = float(math.sqrt(max(grad @ res.covariance @ grad, 0.0)))
    return res


# --------------------------------------------------------------------------
# coherence


def stretched_exponential(t, A, T2, p):
    return A * np.exp(-((t / T2) ** p))


def stretched_exponential_guess(t, y):
    """Amplitude from the early points, ``T2`` and ``p`` from a log-log line."""
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    A = float(np.max(y[: max(3, y.size // 10)]))
    if not A > 0:
        raise FitError("coherence data has no positive amplitude")
    q = y / A
    m = (q > 0.1) & (q < 0.9) & (t > 0)
    if m.sum() >= 2:
        lx, ly = np.log(t[m]), np.log(-np.log(q[m]))
        p, c = np.polyfit(lx, ly, 1)
        p = float(np.clip(p, *P_BOUNDS))
        T2 = float(math.exp(-c / p))
    else:
        p = 2.0
        below = np.flatnonzero(q < math.exp(-1))
        T2 = float(t[below[0]]) if below.size else float(t[-1])
    return [A, T2, p]


def fit_stretched_exponential(t, y, sigma=None, p0=None) -> FitResult:
    """``A exp(-(t/T2)^p)`` with ``p`` confined to (0.5, 6]."""
    t, y, sigma = _sorted(t, y, sigma)
    p0 = stretched_exponential_guess(t, y) if p0 is None else list(p0)
    lower = [0.0, (t[t > 0].min() if np.any(t > 0) else 1e-12) * 1e-3, P_BOUNDS[0]]
    upper = [np.inf, t[-1] * 1e3, P_BOUNDS[1]]
    return fit(stretched_exponential, t, y, p0, sigma, (lower, upper), ("A", "T2", "p"),
               x_scale=[abs(p0[0]), p0[1], 1.0])


# --------------------------------------------------------------------------
# AC magnetometry


def cosine_fixed_phase(I, A, f, offset):
    return A * np.cos(TWO_PI * f * I) + offset


def fit_sinusoid_fixed_phase(currents, y, sigma=None, f_guess=None, phase_per_tesla=None,
                             reference_current=None) -> FitResult:
    """``A cos(2 pi f I) + offset`` with zero phase at zero current.

    The starting frequency is the spectral peak unless ``f_guess`` is
    given. With ``phase_per_tesla`` (echo phase per tesla of AC amplitude)
    the field per ampere ``2 pi f / phase_per_tesla`` and the field at
    ``reference_current`` are added to ``extras``.
    """
    I, y, sigma = _sorted(currents, y, sigma)
    if f_guess is None:
        grid = np.linspace(I[0], I[-1], I.size)
        freqs, mag = spectral_response(grid, np.interp(grid, I, y), pad=16)
        f_guess = peak_frequency(freqs, mag, fmin=freqs[1])
    off = float(np.mean(y))
    A = 0.5 * float(np.ptp(y))
    if np.interp(0.0, I, y) < off:
        A = -A
    res = fit(cosine_fixed_phase, I, y, [A, f_guess, off], sigma,
              ([-np.inf, 0.0, -np.inf], [np.inf, np.inf, np.inf]), ("A", "f", "offset"),
              x_scale=[abs(A) or 1.0, abs(f_guess) or 1.0, abs(A) or 1.0])
    if phase_per_tesla is not None:
        k = TWO_PI / phase_per_tesla
        res.extras["field_per_amp"] = k * res["f"]
        res.extras["field_per_amp_error"] = k * res.error("f")
        if reference_current is not None:
            res.extras["field"] = k * res["f"] * reference_current
            res.extras["field_error"] = k * res.error("f") * abs(reference_current)
    return res


# --------------------------------------------------------------------------
# nanoscale NMR


def normalize_background(t, y, sigma=None, exclude=None, p=None, model: CoherenceModel | None = None):
    """Divide out the bare coherence decay.

    Either a known ``model`` is used or a stretched exponential is fitted to
    the points outside the boolean mask ``exclude`` (with ``p`` held fixed
    when given).

    Returns
    -------
    y_norm, sigma_norm, baseline : ndarray
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    if model is not None:
        base = coherence_envelope(t, model)
    else:
        keep = np.ones(t.shape, bool) if exclude is None else ~np.asarray(exclude, bool)
        s = None if sigma is None else np.asarray(sigma, float)[keep]
        if p is None:
            r = fit_stretched_exponential(t[keep], y[keep], s)
            A, T2, p = r["A"], r["T2"], r["p"]
        else:
            A0 = float(np.max(y[keep]))
            q = np.clip(y[keep] / A0, 1e-3, 1 - 1e-9)
            T0 = float(np.median(t[keep] / (-np.log(q)) ** (1.0 / p)))
            r = fit(lambda tt, A, T2: stretched_exponential(tt, A, T2, p), t[keep], y[keep],
                    [A0, T0], s, ([0.0, 1e-12], [np.inf, np.inf]), ("A", "T2"),
                    x_scale=[A0, T0])
            A, T2 = r["A"], r["T2"]
        base = stretched_exponential(t, A, T2, p)
    sn = None if sigma is None else np.asarray(sigma, float) / base
    return y / base, sn, base


def fit_nmr_dip(taus, y, n_pulses, nu_center, rho, sigma=None, t_c=None, theta=math.radians(54.7),
                d_guess=None, fit_frequency=False, background_p=None, exclude_width=60e-9) -> FitResult:
    """Fit XY8 contrast versus pulse spacing to the proton-bath dip.

    Free parameters are the NV depth ``d_nv`` and, unless ``t_c`` is given,
    the correlation time ``t_c``; ``nu`` too when ``fit_frequency``. The RMS
    field follows from ``rho`` and the depth and is stored in ``extras``.

    By default ``y`` is already normalised. With ``background_p`` the raw
    contrast is fitted jointly with a decay ``A exp(-(N tau / T2_bg)^p)``
    (``p = background_p`` fixed) and the normalised data are returned in
    ``extras["normalized"]``. The joint fit avoids the bias of normalising on
    off-dip points, which still sit on the filter side lobes.
    """
    tau, y, sigma = _sorted(taus, y, sigma)
    fixed_tc = t_c is not None
    joint = background_p is not None

    def brms(d):
        return proton_brms(ProtonBath(rho, d), theta)

    def model(tau, d, *rest):
        rest = list(rest)
        tc = t_c if fixed_tc else rest.pop(0)
        nu = rest.pop(0) if fit_frequency else nu_center
        c = nmr_contrast(tau, n_pulses, NuclearSignal(brms(d), nu, tc))
        if joint:
            A, T2 = rest
            c = c * stretched_exponential(n_pulses * tau, A, T2, background_p)
        return c

    y_norm = y
    if joint:
        excl = np.abs(tau - 0.5 / nu_center) < exclude_width
        y_norm, _, base = normalize_background(n_pulses * tau, y, sigma, exclude=excl, p=background_p)
        T2_0 = float(n_pulses * tau[-1] / max(-math.log(base[-1] / base[0]), 1e-3) ** (1.0 / background_p))
        A0 = float(base[0] / math.exp(-((n_pulses * tau[0] / T2_0) ** background_p)))
    if d_guess is None:
        d_guess = _depth_guess(tau, y_norm, n_pulses, nu_center, rho, theta, t_c or 20e-6)
    names, p0, lower, upper, scales = ["d_nv"], [d_guess], [MIN_DEPTH], [100e-9], [1e-9]
    if not fixed_tc:
        names.append("t_c")
        p0.append(20e-6)
        lower.append(tau[0])
        upper.append(1e-2)
        scales.append(1e-5)
    if fit_frequency:
        names.append("nu")
        p0.append(nu_center)
        lower.append(0.5 * nu_center)
        upper.append(2.0 * nu_center)
        scales.append(nu_center)
    if joint:
        names += ["A", "T2_bg"]
        p0 += [A0, T2_0]
        lower += [0.0, 1e-9]
        upper += [np.inf, np.inf]
        scales += [A0, T2_0]
    res = fit(model, tau, y, p0, sigma, (lower, upper), tuple(names), x_scale=scales)
    d = res["d_nv"]
    b = brms(d)
    res.extras["B_rms"] = b
    # B_rms ~ d^-3/2
    res.extras["B_rms_error"] = 1.5 * b / d * res.error("d_nv")
    if joint:
        base = stretched_exponential(n_pulses * tau, res["A"], res["T2_bg"], background_p)
        res.extras["normalized"] = y / base
    return res


def _depth_guess(tau, y, n_pulses, nu, rho, theta, t_c):
    """Depth whose on-resonance contrast matches the deepest point of the data."""
    from scipy.optimize import brentq

    target = float(np.clip(np.min(y), 1e-3, 0.999))
    tau0 = 1.0 / (2.0 * nu)

    def err(logd):
        d = math.exp(logd)
        return nmr_contrast(tau0, n_pulses, NuclearSignal(proton_brms(ProtonBath(rho, d), theta), nu, t_c)) - target

    lo, hi = math.log(MIN_DEPTH), math.log(100e-9)
    if err(lo) * err(hi) > 0:
        return 5e-9
    return math.exp(brentq(err, lo, hi))
