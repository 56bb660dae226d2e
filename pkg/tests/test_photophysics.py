import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from oracles import rk4_train
from spinresolft.photophysics import (
    IlluminationSegment,
    PopulationState,
    RateConstants,
    ReadoutConfig,
    evolve,
    evolve_train,
    polarization,
    polarization_surface,
    propagate,
    propagator,
    readout_weights,
    relaxation_limit,
    steady_state,
    swap_spin,
)

RATES = RateConstants.default()

pumps = st.floats(0.0, 20.0)
durations = st.floats(0.0, 2e-6)


def test_default_rates_match_transcribed_values():
    assert RATES.gamma == pytest.approx(65.9e6)
    assert RATES.a35 * RATES.gamma == pytest.approx(11.0e6)
    assert RATES.a45 * RATES.gamma == pytest.approx(91.8e6)
    assert RATES.a51 * RATES.gamma == pytest.approx(4.87e6)
    assert RATES.a52 * RATES.gamma == pytest.approx(2.03e6)


def test_rate_matrix_columns_sum_to_zero():
    M = RATES.matrix(np.array([0.0, 0.3, 7.0]))
    assert M.shape == (3, 5, 5)
    np.testing.assert_allclose(M.sum(axis=-2), 0.0, atol=1e-15)


def test_rate_file_round_trip(tmp_path):
    path = tmp_path / "rates.yaml"
    RATES.save(path, header="test")
    assert RateConstants.load(path) == RATES


def test_rate_file_missing_key(tmp_path):
    path = tmp_path / "rates.yaml"
    path.write_text("gamma_hz: 1.0\n")
    with pytest.raises(KeyError, match="a35"):
        RateConstants.load(path)


@pytest.mark.parametrize("kw", [dict(a35=-1.0), dict(a45=0.1), dict(a51=0.0, a52=0.0), dict(gamma=math.nan)])
def test_invalid_rates_rejected(kw):
    base = dict(gamma=1e8, a35=0.2, a45=1.0, a51=0.1, a52=0.05)
    base.update(kw)
    with pytest.raises(ValueError):
        RateConstants(**base)


@pytest.mark.parametrize("n", [[0.5, 0.5, 0, 0, 0.1], [1.2, -0.2, 0, 0, 0], [1, 0, 0, 0], [math.nan, 1, 0, 0, 0]])
def test_population_state_validation(n):
    with pytest.raises(ValueError):
        PopulationState(n)


def test_segment_validation():
    with pytest.raises(ValueError):
        IlluminationSegment(-1.0, 1e-9)
    with pytest.raises(ValueError):
        IlluminationSegment(1.0, -1e-9)
    with pytest.raises(ValueError):
        propagator(1.0, math.inf, RATES)


def test_zero_duration_is_identity():
    np.testing.assert_allclose(propagator(3.0, 0.0, RATES), np.eye(5), atol=1e-15)


def test_matches_rk4_oracle():
    rng = np.random.default_rng(7)
    segs = [(float(s), float(t)) for s, t in zip(rng.uniform(0, 5, 60), rng.uniform(1e-9, 30e-9, 60))]
    n0 = np.array([0.6, 0.3, 0.05, 0.02, 0.03])
    ours = evolve_train(PopulationState(n0), [IlluminationSegment(s, t) for s, t in segs], RATES).n
    ref = rk4_train(n0, segs, RATES)
    np.testing.assert_allclose(ours, ref, atol=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(pumps, durations), min_size=1, max_size=20), st.floats(0.0, 1.0))
def test_train_conserves_population(segs, p0):
    state = PopulationState.ground(p0)
    out = evolve_train(state, [IlluminationSegment(s, t) for s, t in segs], RATES)
    assert abs(out.n.sum() - 1.0) < 1e-9
    assert out.n.min() >= 0.0


@settings(max_examples=40, deadline=None)
@given(pumps, durations)
def test_raw_propagator_columns_sum_to_one(s, t):
    U = propagator(s, t, RATES)
    np.testing.assert_allclose(U.sum(axis=0), 1.0, atol=1e-12)
    assert U.min() > -1e-12


@settings(max_examples=30, deadline=None)
@given(pumps, durations, durations)
def test_propagator_semigroup(s, t1, t2):
    np.testing.assert_allclose(propagator(s, t1 + t2, RATES),
                               propagator(s, t1, RATES) @ propagator(s, t2, RATES), atol=1e-12)


def test_propagator_broadcasts():
    s = np.array([0.0, 1.0, 10.0])
    U = propagator(s, 50e-9, RATES)
    for k in range(3):
        np.testing.assert_allclose(U[k], propagator(s[k], 50e-9, RATES), atol=1e-14)


def test_swap_spin_is_involution():
    n = np.arange(5.0)
    np.testing.assert_array_equal(swap_spin(swap_spin(n)), n)
    np.testing.assert_array_equal(PopulationState.ms0().pi_flipped().n, PopulationState.ms1().n)


@pytest.mark.parametrize("s", [0.05, 1.0, 10.0])
def test_steady_state_is_stationary(s):
    n = steady_state(s, RATES).n
    np.testing.assert_allclose(RATES.matrix(s) @ n, 0.0, atol=1e-12)
    np.testing.assert_allclose(propagate(n, s, 10e-6, RATES), n, atol=1e-10)


def test_steady_state_needs_pump():
    with pytest.raises(ValueError):
        steady_state(0.0, RATES)


def test_long_pumping_reaches_steady_state():
    out = evolve(PopulationState.unpolarized(), IlluminationSegment(1.0, 50e-6), RATES)
    np.testing.assert_allclose(out.n, steady_state(1.0, RATES).n, atol=1e-9)


def test_relaxation_limit_agrees_with_dark_evolution():
    n = steady_state(2.0, RATES)
    np.testing.assert_allclose(relaxation_limit(n.n, RATES)[0], polarization(n, RATES), atol=1e-8)


def test_readout_weights_match_direct_integration():
    n0 = PopulationState.ms0().n
    s, window = 1.0, 300e-9
    t = np.linspace(0.0, window, 3001)
    traj = propagate(np.broadcast_to(n0, (t.size, 5)), s, t, RATES)
    direct = RATES.gamma * trapezoid(traj[:, 2] + traj[:, 3], t)
    assert readout_weights(s, window, RATES) @ n0 == pytest.approx(direct, rel=1e-6)


def test_readout_contrast_and_calibration():
    ro = ReadoutConfig().calibrated(RATES, 0.02)
    assert ro.photons(PopulationState.ms0(), RATES) == pytest.approx(0.02, rel=1e-12)
    dark = float(ro.photons(PopulationState.ms1(), RATES))
    # frozen value for the default rates, 1 us settle, 300 ns window
    assert dark == pytest.approx(0.01109, abs=5e-5)
    assert dark < 0.02


def test_readout_validation():
    with pytest.raises(ValueError):
        readout_weights(1.0, 0.0, RATES)
    with pytest.raises(ValueError):
        readout_weights(1.0, 1e-7, RATES, settle=-1.0)


def test_polarization_surface():
    pumps = np.geomspace(0.01, 10, 12)
    durs = np.geomspace(1e-8, 1e-3, 15)
    P = polarization_surface(pumps, durs, RATES)
    assert P.shape == (15, 12)
    assert np.all((P >= 0) & (P <= 1))
    # short weak pulses leave the unpolarized state untouched
    assert P[0, 0] == pytest.approx(0.5, abs=5e-3)
    # frozen: long saturating pulses settle near the optically pumped limit
    assert P[-1, -1] == pytest.approx(0.7824, abs=2e-3)
    assert P.max() == pytest.approx(0.9038, abs=2e-3)
