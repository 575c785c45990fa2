import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from czquant import channel, dynamics, metrics
from czquant.metrics import PRESETS, InitialQubitState

R = 1 / math.sqrt(2)


def test_trace_out_product_state():
    ions = np.zeros((6, 6), complex)
    ions[:4, :4] = np.full((4, 4), 0.25)
    ph0 = np.diag([1.0, 0.0])
    np.testing.assert_allclose(metrics.trace_out_phonon(np.kron(ph0, ions)), ions)


def test_trace_out_maximally_mixed():
    np.testing.assert_allclose(metrics.trace_out_phonon(np.eye(12) / 12), np.eye(6) / 6)


@pytest.mark.parametrize("t", [0, 1, 2, 7])
def test_expected_state_control_zero(t):
    np.testing.assert_array_equal(metrics.expected_state(PRESETS["00"], t)[:4], [1, 0, 0, 0])


def test_expected_state_examples():
    np.testing.assert_array_equal(metrics.expected_state(PRESETS["10"], 1)[:4], [0, 0, 0, 1])
    np.testing.assert_array_equal(metrics.expected_state(PRESETS["10"], 2)[:4], [0, 1, 0, 0])
    np.testing.assert_allclose(metrics.expected_state(PRESETS["plus-x"], 1)[:4], [R, 0, 0, R])
    with pytest.raises(ValueError):
        metrics.expected_state(PRESETS["10"], -1)


def test_presets():
    assert list(PRESETS) == ["00", "10", "01", "11", "plus-x", "plus-y"]
    np.testing.assert_allclose(PRESETS["plus-y"].vector()[:4], [R, 0, R, 0])
    with pytest.raises(ValueError, match="plus-x"):
        metrics.preset("bogus")


def test_initial_state_must_be_normalized():
    with pytest.raises(ValueError):
        InitialQubitState((1, 1, 0, 0))
    s = InitialQubitState.normalized([1, 1j, 0, 0])
    assert sum(abs(a) ** 2 for a in s.amplitudes) == pytest.approx(1)


@pytest.mark.parametrize("name", list(PRESETS))
@pytest.mark.parametrize("t", [0, 1, 2, 3])
def test_ideal_gate_never_fails(gate_ideal, name, t):
    assert abs(metrics.failure_probability(gate_ideal, PRESETS[name], t)) <= 1e-12


def test_t0_has_no_failure(gate_1e4):
    for s in PRESETS.values():
        assert metrics.failure_probability(gate_1e4, s, 0) == pytest.approx(0, abs=1e-15)


def test_one_gate_keeps_phonon_vacuum(gate_1e4):
    rho = gate_1e4.apply(PRESETS["10"].density())
    assert np.trace(rho[:6, :6]).real >= 0.99


amp = st.complex_numbers(max_magnitude=1, allow_nan=False, allow_infinity=False)


@settings(max_examples=25, deadline=None)
@given(amps=st.lists(amp, min_size=4, max_size=4).filter(lambda a: sum(abs(z) ** 2 for z in a) > 1e-3),
       phase=st.floats(0, 2 * math.pi), t=st.integers(0, 12))
def test_global_phase_invariance_and_range(gate_1e4, amps, phase, t):
    s = InitialQubitState.normalized(amps)
    rotated = InitialQubitState.normalized([cmath.exp(1j * phase) * a for a in amps])
    p = metrics.failure_probability(gate_1e4, s, t)
    assert -1e-12 <= p <= 1 + 1e-8
    assert metrics.failure_probability(gate_1e4, rotated, t) == pytest.approx(p, abs=1e-12)


@pytest.mark.parametrize("name", ["00", "10", "01", "11"])
def test_monotone_in_t(gate_1e4, name):
    curve = [r.p_fail for r in metrics.failure_curve(gate_1e4, PRESETS[name], range(1, 101))]
    assert all(b >= a - 1e-15 for a, b in zip(curve, curve[1:]))


def test_run_result_fields(gate_1e4):
    (r,) = metrics.failure_curve(gate_1e4, PRESETS["11"], [3], nbar=1e4)
    assert (r.t, r.nbar, r.initial) == (3, 1e4, "11")
    assert r.trace_defect < 1e-10 and r.hermiticity_defect < 1e-10


def test_fit_through_origin():
    fit = metrics.fit_through_origin([1, 2, 3], [2, 4, 6])
    assert fit.slope == pytest.approx(2) and fit.relative_residual == pytest.approx(0, abs=1e-15)
    with pytest.raises(ValueError):
        metrics.fit_through_origin([0, 0], [1, 2])


def test_proportionality_ideal_has_zero_slope(gate_ideal):
    rep = metrics.proportionality_report({1e4: gate_ideal}, PRESETS["10"], [1, 2, 3])
    assert abs(rep.t_fits[1e4].slope) <= 1e-12


@pytest.mark.parametrize("grid", [[], [3, 2], [1, 1], [0]])
def test_proportionality_rejects_bad_grid(gate_ideal, grid):
    with pytest.raises(ValueError):
        metrics.proportionality_report({1.0: gate_ideal}, PRESETS["10"], grid)


def test_proportionality_large_nbar():
    family = {n: channel.gate_superop(dynamics.cz_cnot_protocol(n, 1e-14)) for n in (1e6, 1e8)}
    rep = metrics.proportionality_report(family, PRESETS["10"], list(range(10, 101)))
    assert rep.t_fits[1e6].relative_residual <= 0.05
    assert 80 <= rep.ratios[(1e6, 1e8)] <= 120
