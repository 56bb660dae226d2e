import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import MU0, infinite_wire_field
from spinresolft.fields import (
    NVOrientation,
    ProtonBath,
    WireGeometry,
    b_parallel,
    b_perpendicular,
    biot_savart_polyline,
    calibrate_drive_factor,
    discrepancy_report,
    gradient_parallel,
    proton_brms,
    proton_brms_monte_carlo,
    rabi_frequency,
)

WIRE = WireGeometry()
NV = NVOrientation.from_degrees(35.3)
POS = np.array([20.7e-6, 0.0, 20e-6])

coords = st.floats(-200e-6, 200e-6)


@settings(max_examples=200)
@given(coords, coords, coords, st.floats(-0.1, 0.1))
def test_field_magnitude_matches_closed_form(x, y, z, current):
    if math.hypot(x, z) < WIRE.radius:
        return
    B = WIRE.field(np.array([x, y, z]), current)
    ref = infinite_wire_field((x, y, z), abs(current))
    assert np.linalg.norm(B) == pytest.approx(ref, rel=1e-10, abs=1e-30)


@settings(max_examples=50)
@given(coords, coords)
def test_field_is_azimuthal(x, z):
    if math.hypot(x, z) < WIRE.radius:
        return
    p = np.array([x, 3e-6, z])
    B = WIRE.field(p)
    assert abs(B @ WIRE.radial(p)) <= 1e-12 * np.linalg.norm(B) * np.linalg.norm(WIRE.radial(p))
    assert abs(B[1]) < 1e-20


def test_inside_conductor_rejected():
    with pytest.raises(ValueError):
        WIRE.field(np.array([1e-6, 0.0, 1e-6]))
    with pytest.raises(ValueError):
        b_parallel(np.array([1e-6, 0.0, 1e-6]), WIRE, NV, "printed")


def test_biot_savart_long_segment_matches_filament():
    ends = np.array([[0.0, -1.0, 0.0], [0.0, 1.0, 0.0]])
    B = biot_savart_polyline(POS, ends, WIRE.current)
    np.testing.assert_allclose(B, WIRE.field(POS), rtol=1e-6)


def test_biot_savart_square_loop_center():
    # field at the centre of a square loop of side a: 2 sqrt(2) mu0 I / (pi a)
    a, current = 1e-3, 0.5
    h = a / 2
    loop = np.array([[-h, -h, 0], [h, -h, 0], [h, h, 0], [-h, h, 0], [-h, -h, 0]])
    B = biot_savart_polyline(np.zeros(3), loop, current)
    assert B[2] == pytest.approx(2 * math.sqrt(2) * MU0 * current / (math.pi * a), rel=1e-6)


def test_documented_geometry_checkpoint():
    # frozen values at 20.7 um lateral, 20 um deep, 7 mA
    assert abs(b_parallel(POS, WIRE, NV)) * 1e6 == pytest.approx(9.018, abs=2e-3)
    assert abs(gradient_parallel(POS, WIRE, NV)) * 1e9 * 1e-9 == pytest.approx(0.928, abs=2e-3)


def test_printed_variant_formula():
    nv = NVOrientation.from_degrees(54.7)
    x, z = POS[0], POS[2]
    expect = MU0 / (2 * math.pi) * WIRE.current / (x * x + z * z) * x
    assert b_parallel(POS, WIRE, nv, "printed") == pytest.approx(expect)
    with pytest.raises(ValueError):
        b_parallel(POS, WIRE, nv, "sideways")


def test_gradient_richardson_agrees():
    g1 = gradient_parallel(POS, WIRE, NV, step=1e-9)
    g2 = gradient_parallel(POS, WIRE, NV, step=400e-9, richardson=True)
    assert g2 == pytest.approx(g1, rel=1e-6)


def test_field_components_add_in_quadrature():
    B = WIRE.field(POS)
    assert b_parallel(POS, WIRE, NV) ** 2 + b_perpendicular(POS, WIRE, NV) ** 2 == pytest.approx(B @ B)


def test_rabi_frequency_and_calibration():
    f = rabi_frequency(POS, WIRE, NV, 30e-3)
    assert f == pytest.approx(5.742e6, rel=1e-3)
    k = calibrate_drive_factor(5.5e6, POS, WIRE, NV, 30e-3)
    assert rabi_frequency(POS, WIRE, NV, 30e-3, k) == pytest.approx(5.5e6)
    with pytest.raises(ValueError):
        rabi_frequency(POS, WIRE, NV, 30e-3, 0.0)


def test_rabi_scales_with_current():
    assert rabi_frequency(POS, WIRE, NV, 20e-3) == pytest.approx(2 * rabi_frequency(POS, WIRE, NV, 10e-3))


def test_discrepancy_report():
    rep = discrepancy_report(POS, WIRE, NV)
    assert set(rep) == {"tangential", "printed", "biot_savart", "rabi_hz"}
    assert rep["biot_savart"]["relative_difference"] < 1e-6
    assert rep["biot_savart"]["gradient_T_per_m"] == pytest.approx(rep["tangential"]["gradient_T_per_m"], rel=1e-4)


def test_orientation_validation():
    with pytest.raises(ValueError):
        NVOrientation(4.0)
    with pytest.raises(ValueError):
        WireGeometry(radius=0.0)
    with pytest.raises(ValueError):
        WireGeometry(axis=(0.0, 0.0, 0.0))


# -- proton bath ---------------------------------------------------------------


def test_proton_field_checkpoint():
    # frozen: 6e28 protons per m^3 at 3 nm depth
    assert proton_brms(ProtonBath(6e28, 3e-9)) * 1e6 == pytest.approx(1.7015, abs=1e-3)


@settings(max_examples=50)
@given(st.floats(1e-9, 50e-9), st.floats(1e27, 1e29))
def test_proton_field_scaling(d, rho):
    b = proton_brms(ProtonBath(rho, d))
    assert proton_brms(ProtonBath(4 * rho, d)) == pytest.approx(2 * b)
    assert proton_brms(ProtonBath(rho, 4 * d)) == pytest.approx(b / 8)


def test_proton_field_monte_carlo():
    bath = ProtonBath(6e28, 3e-9)
    for theta in (0.0, math.radians(54.7), math.pi / 2):
        mc = proton_brms_monte_carlo(bath, np.random.default_rng(3), theta, n_samples=1_000_000)
        assert mc == pytest.approx(proton_brms(bath, theta), rel=0.01)


def test_proton_bath_validation():
    with pytest.raises(ValueError):
        ProtonBath(0.0, 3e-9)
    with pytest.raises(ValueError):
        proton_brms_monte_carlo(ProtonBath(1e28, 3e-9), np.random.default_rng(0), n_samples=0)
