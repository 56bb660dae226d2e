import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinresolft.optics import (
    BeamAlignment,
    DoughnutProfile,
    GaussianProfile,
    ideal_fwhm,
    pump_rate_for_fwhm,
    saturation_product_for_fwhm,
)


def test_diffraction_limit():
    assert ideal_fwhm(532e-9, 1.45) == pytest.approx(532e-9 / 2.9, rel=1e-15)
    assert round(ideal_fwhm(532e-9, 1.45) * 1e9, 1) == 183.4


@settings(max_examples=100)
@given(st.floats(1e-9, 183e-9), st.floats(1e-8, 1e-4))
def test_pump_rate_inverts_resolution(fwhm, tau):
    rate = pump_rate_for_fwhm(fwhm, tau)
    assert ideal_fwhm(pump_rate=rate, tau=tau) == pytest.approx(fwhm, rel=1e-9)


@settings(max_examples=100)
@given(st.floats(0, 1e4), st.floats(0, 1e4))
def test_resolution_monotone_in_saturation(a, b):
    lo, hi = sorted((a, b))
    assert ideal_fwhm(pump_rate=hi, tau=1.0) <= ideal_fwhm(pump_rate=lo, tau=1.0)


def test_resolution_square_root_law():
    gt = np.linspace(0, 500, 50)
    w = ideal_fwhm(pump_rate=gt, tau=1.0)
    np.testing.assert_allclose(w * np.sqrt(1 + gt), ideal_fwhm(), rtol=1e-14)


@pytest.mark.parametrize("bad", [dict(wavelength=0.0), dict(na=-1.0), dict(pump_rate=-1.0, tau=1.0)])
def test_resolution_validation(bad):
    with pytest.raises(ValueError):
        ideal_fwhm(**bad)


def test_inverse_validation():
    with pytest.raises(ValueError):
        saturation_product_for_fwhm(200e-9)
    with pytest.raises(ValueError):
        pump_rate_for_fwhm(20e-9, 0.0)


@settings(max_examples=50)
@given(st.floats(0.01, 100), st.floats(50e-9, 500e-9), st.floats(0, 0.5))
def test_doughnut_shape(s0, r0, eps):
    d = DoughnutProfile(s0, r0, eps)
    assert d(0.0) == pytest.approx(s0 * eps)
    r = np.linspace(0, 4 * r0, 2001)
    v = d(r)
    assert v.min() >= 0
    assert r[np.argmax(v)] == pytest.approx(d.peak_radius, abs=3 * r0 / 2000)
    assert v.max() == pytest.approx(d.peak_value, rel=1e-5)


def test_doughnut_at_points_uses_center():
    d = DoughnutProfile(2.0, 100e-9, 0.0, center=(50e-9, 0.0))
    assert d.at(np.array([50e-9, 0.0])) == 0.0
    assert d.at(np.array([[150e-9, 0.0]]))[0] == pytest.approx(2.0 / math.e)


@pytest.mark.parametrize("kw", [dict(s0=0.0), dict(r0=-1.0), dict(epsilon=1.0), dict(center=(0.0,))])
def test_doughnut_validation(kw):
    base = dict(s0=1.0, r0=1e-7, epsilon=0.0)
    base.update(kw)
    with pytest.raises(ValueError):
        DoughnutProfile(**base)


def test_negative_radius_rejected():
    with pytest.raises(ValueError):
        DoughnutProfile(1.0, 1e-7)(-1e-9)


def test_gaussian_fwhm_round_trip():
    g = GaussianProfile.from_fwhm(250e-9, 3.0)
    assert g.fwhm == pytest.approx(250e-9)
    assert g(g.fwhm / 2) == pytest.approx(1.5)


def test_alignment_validation():
    with pytest.raises(ValueError):
        BeamAlignment((math.nan, 0.0))
