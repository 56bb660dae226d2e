import math

import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import curve_fit

from spinresolft.constants import GAUSS
from spinresolft.fields import ProtonBath, proton_brms
from spinresolft.fitting import (
    ConvergenceError,
    DegenerateFitError,
    FitError,
    fit,
    fit_gaussian_center,
    fit_nmr_dip,
    fit_resolft_psf,
    fit_sinusoid_fixed_phase,
    fit_stretched_exponential,
    fit_two_peaks,
    peak_frequency,
    spectral_response,
)
from spinresolft.fitting.models import (
    cosine_fixed_phase,
    gaussian_peak,
    normalize_background,
    stretched_exponential,
    two_gaussians,
)
from spinresolft.optics import DoughnutProfile
from spinresolft.photophysics import RateConstants
from spinresolft.scanner import resolft_psf
from spinresolft.sequences import CoherenceModel, NuclearSignal, larmor_frequency, nmr_contrast

RATES = RateConstants.default()


# -- engine ----------------------------------------------------------------


def test_linear_model_matches_lstsq():
    rng = np.random.default_rng(0)
    x = np.linspace(0, 1, 50)
    y = 2.0 - 3.0 * x + 0.5 * x**2 + rng.normal(0, 0.01, x.size)
    res = fit(lambda x, a, b, c: a + b * x + c * x**2, x, y, [0, 0, 0])
    A = np.column_stack([np.ones_like(x), x, x**2])
    ref, *_ = np.linalg.lstsq(A, y, rcond=None)
    np.testing.assert_allclose(res.values, ref, rtol=1e-7, atol=1e-9)
    # covariance of a linear model: s^2 (A^T A)^-1
    s2 = np.sum((y - A @ ref) ** 2) / (x.size - 3)
    np.testing.assert_allclose(res.covariance, s2 * np.linalg.inv(A.T @ A), rtol=1e-5)


def test_nonlinear_fit_agrees_with_curve_fit():
    rng = np.random.default_rng(1)
    t = np.linspace(0, 5, 80)
    sigma = np.full(t.size, 0.02)
    y = 1.3 * np.exp(-t / 1.7) + 0.2 + rng.normal(0, 0.02, t.size)
    f = lambda t, a, tau, c: a * np.exp(-t / tau) + c  # noqa: E731
    ours = fit(f, t, y, [1.0, 1.0, 0.0], sigma)
    ref, cov = curve_fit(f, t, y, [1.0, 1.0, 0.0], sigma=sigma)
    np.testing.assert_allclose(ours.values, ref, rtol=1e-6)
    np.testing.assert_allclose(ours.errors, np.sqrt(np.diag(cov)), rtol=1e-3)


def test_absolute_sigma_covariance():
    x = np.linspace(0, 1, 20)
    y = 1.0 + x
    res = fit(lambda x, a, b: a + b * x, x, y + 1e-3 * np.sin(40 * x), [0, 0], np.full(20, 0.1),
              scale_covariance=False)
    A = np.column_stack([np.ones_like(x), x]) / 0.1
    np.testing.assert_allclose(res.covariance, np.linalg.inv(A.T @ A), rtol=1e-6)


def test_bounds_are_respected():
    x = np.linspace(0, 1, 30)
    res = fit(lambda x, a: a * x, x, 2 * x, [0.1], bounds=([0.0], [1.0]))
    assert res["p0"] == pytest.approx(1.0)


def test_convergence_error():
    x = np.linspace(0, 5, 30)
    with pytest.raises(ConvergenceError) as info:
        fit(lambda x, a, b: a * np.exp(-x / b), x, 3 * np.exp(-x / 0.7), [1.0, 5.0], max_iter=1)
    assert info.value.iterations == 1


def test_degenerate_fit():
    x = np.linspace(0, 1, 10)
    with pytest.raises(DegenerateFitError):
        fit(lambda x, a, b: (a + b) * x, x, x, [0.3, 0.2])


def test_input_validation():
    with pytest.raises(ValueError):
        fit(lambda x, a: a * x, [0, 1], [0, 1], [1.0], names=("a", "b"))
    with pytest.raises(FitError):
        fit(lambda x, a: a * x, [0, 1, 2], [0, 1, np.nan], [1.0])


def test_result_serialisation():
    x = np.linspace(0, 1, 10)
    res = fit(lambda x, a, b: a + b * x, x, 1 + x + 0.01 * np.cos(9 * x), [0, 0], names=("a", "b"))
    d = yaml.safe_load(res.to_yaml())
    assert set(d["parameters"]) == {"a", "b"}
    assert d["dof"] == 8
    assert res.reduced_chi2 == pytest.approx(res.chi2 / 8)


# -- peak models -----------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.floats(-50e-9, 50e-9), st.floats(40e-9, 250e-9), st.floats(10, 1000))
def test_gaussian_round_trip(center, fwhm, amp):
    x = np.linspace(-400e-9, 400e-9, 121)
    y = gaussian_peak(x, amp, center, fwhm, 0.1 * amp)
    res = fit_gaussian_center(x, y)
    assert res["center"] == pytest.approx(center, abs=1e-12)
    assert res["fwhm"] == pytest.approx(fwhm, rel=1e-6)


@pytest.mark.parametrize("sep", [60e-9, 105e-9, 160e-9])
def test_two_peaks_round_trip(sep):
    x = np.linspace(-200e-9, 200e-9, 100)
    y = two_gaussians(x, 300.0, -sep / 2, 250.0, sep / 2, 50e-9, 5.0)
    res = fit_two_peaks(x, y)
    assert res.extras["separation"] == pytest.approx(sep, rel=1e-6)


def test_two_peaks_with_noise():
    rng = np.random.default_rng(4)
    x = np.linspace(-200e-9, 200e-9, 100)
    y = two_gaussians(x, 300.0, -52.5e-9, 300.0, 52.5e-9, 50e-9, 0.0)
    res = fit_two_peaks(x, y + rng.normal(0, 20.0, x.size), np.full(x.size, 20.0))
    assert abs(res.extras["separation"] - 105e-9) < 4 * res.extras["separation_error"]


@pytest.mark.parametrize("tau_d", [0.6e-6, 2.1e-6])
def test_resolft_psf_round_trip(tau_d):
    d = DoughnutProfile(3.6577, 180e-9, 0.001)
    x = np.linspace(-200e-9, 200e-9, 100)
    y = 400 * resolft_psf(np.abs(x - 7e-9), d, tau_d, RATES) / resolft_psf(0.0, d, tau_d, RATES) + 3.0
    res = fit_resolft_psf(x, y, tau_d, rates=RATES, s0_guess=1.0)
    assert res["s0"] == pytest.approx(3.6577, rel=1e-6)
    assert res["center"] == pytest.approx(7e-9, abs=1e-13)
    if tau_d == 2.1e-6:
        assert res.extras["fwhm"] == pytest.approx(20e-9, rel=0.01)


def test_resolft_psf_fit_epsilon():
    d = DoughnutProfile(1.0, 180e-9, 0.02)
    x = np.linspace(-200e-9, 200e-9, 100)
    y = 100 * resolft_psf(np.abs(x), d, 2.1e-6, RATES) / resolft_psf(0.0, d, 2.1e-6, RATES)
    res = fit_resolft_psf(x, y, 2.1e-6, rates=RATES, fit_epsilon=True, epsilon=0.005)
    assert res["epsilon"] == pytest.approx(0.02, rel=1e-4)


# -- coherence and magnetometry ---------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.floats(200e-6, 1500e-6), st.floats(1.0, 4.0), st.floats(0.1, 1.0))
def test_stretched_exponential_round_trip(T2, p, A):
    t = np.linspace(20e-6, 2000e-6, 40)
    res = fit_stretched_exponential(t, stretched_exponential(t, A, T2, p))
    np.testing.assert_allclose(res.values, [A, T2, p], rtol=1e-6)


def test_stretched_exponential_rejects_empty_signal():
    with pytest.raises(FitError):
        fit_stretched_exponential(np.linspace(1, 2, 10), -np.ones(10))


def test_sinusoid_round_trip():
    I = np.linspace(0, 8e-3, 161)
    y = cosine_fixed_phase(I, -0.11, 310.0, 0.01)
    res = fit_sinusoid_fixed_phase(I, y, phase_per_tesla=2.0e7, reference_current=7e-3)
    assert res["f"] == pytest.approx(310.0, rel=1e-8)
    assert res.extras["field"] == pytest.approx(2 * math.pi / 2.0e7 * 310.0 * 7e-3, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(2.0, 30.0), st.floats(0, 2 * math.pi))
def test_spectral_peak(cycles, phase):
    x = np.linspace(0, 1, 201)
    f, m = spectral_response(x, np.cos(2 * math.pi * cycles * x + phase), pad=16)
    assert peak_frequency(f, m, fmin=1.0) == pytest.approx(cycles, abs=0.1)


def test_spectral_validation():
    with pytest.raises(ValueError):
        spectral_response([0, 1, 3, 4], [1, 2, 3, 4])
    with pytest.raises(ValueError):
        spectral_response(np.arange(8.0), np.arange(8.0), window="box")


# -- NMR ----------------------------------------------------------------------------


def _nmr_curve(d=3e-9, t_c=20e-6, bg=None):
    nu = float(larmor_frequency(282 * GAUSS))
    taus = np.linspace(300e-9, 550e-9, 51)
    sig = NuclearSignal(proton_brms(ProtonBath(6e28, d)), nu, t_c)
    return taus, nu, nmr_contrast(taus, 16, sig, background=bg)


def test_nmr_dip_round_trip_normalised():
    taus, nu, y = _nmr_curve()
    res = fit_nmr_dip(taus, y, 16, nu, 6e28)
    assert res["d_nv"] == pytest.approx(3e-9, rel=1e-6)
    assert res["t_c"] == pytest.approx(20e-6, rel=1e-4)


def test_nmr_dip_round_trip_with_background():
    taus, nu, y = _nmr_curve(bg=CoherenceModel(1.0, 30e-6, 1.5))
    res = fit_nmr_dip(taus, 0.22 * y, 16, nu, 6e28, background_p=1.5)
    assert res["d_nv"] == pytest.approx(3e-9, rel=1e-5)
    assert res["T2_bg"] == pytest.approx(30e-6, rel=1e-5)
    np.testing.assert_allclose(res.extras["normalized"], _nmr_curve()[2], rtol=1e-5)


def test_nmr_dip_fits_frequency():
    taus, nu, y = _nmr_curve()
    res = fit_nmr_dip(taus, y, 16, 1.003 * nu, 6e28, fit_frequency=True)
    assert res["nu"] == pytest.approx(nu, abs=1.0)


def test_normalize_background_known_model():
    t = np.linspace(1e-6, 10e-6, 5)
    m = CoherenceModel(0.5, 5e-6, 2.0)
    yn, sn, base = normalize_background(t, m(t), np.full(5, 0.01), model=m)
    np.testing.assert_allclose(yn, 1.0)
    np.testing.assert_allclose(sn * base, 0.01)
