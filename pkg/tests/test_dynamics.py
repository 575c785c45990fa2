import math

import numpy as np
import pytest

from czquant import dynamics
from czquant.dynamics import CARRIER, RED_SIDEBAND, Pulse, basis_index
from czquant.field import CoherentField

F = CoherentField.certified(100.0, 1e-12)


def carrier(area=0.5, phase=-math.pi / 2, fld=F):
    return Pulse(CARRIER, "y", (0, 1), area, phase, fld)


def step(i, nbar=100.0):
    return dynamics.cz_cnot_protocol(nbar, 1e-12).steps[i - 1]


def as_dict(branches):
    out = {}
    for b in branches:
        out[(b.level, b.fock)] = out.get((b.level, b.fock), 0) + b.amplitude
    return out


def test_basis_round_trip():
    for i in range(dynamics.DIM):
        assert basis_index(*dynamics.basis_label(i)) == i
    assert basis_index(1, "aux", 1) == 11
    with pytest.raises(ValueError):
        basis_index(2, 0, 0)


def test_zero_area_is_identity():
    p = carrier(area=0.0)
    for level in (0, 1):
        for n in (0, 5, 100):
            br = as_dict(dynamics.carrier_amplitudes(p, level, n))
            assert abs(br.get((level, n), 0) - 1) < 1e-15
            assert sum(abs(v) ** 2 for v in br.values()) == pytest.approx(1)


def test_vacuum_carrier_does_nothing():
    br = dynamics.carrier_amplitudes(carrier(), 0, 0)
    assert len(br) == 1 and br[0] == (1.0, 0, 0)


def test_carrier_upper_level_signs():
    nbar = F.nbar
    n = int(nbar)
    th = math.pi / 4 * math.sqrt(nbar + 1) / math.sqrt(nbar)
    br = as_dict(dynamics.carrier_amplitudes(carrier(), 1, n))
    assert br[(1, n)] == pytest.approx(math.cos(th), abs=1e-15)
    # -i e^{-i phi} = +1 at phi = -pi/2
    assert br[(0, n + 1)] == pytest.approx(math.sin(th), abs=1e-15)


def test_carrier_lower_level_signs():
    n = 90
    th = math.pi / 4 * math.sqrt(n / F.nbar)
    br = as_dict(dynamics.carrier_amplitudes(carrier(), 0, n))
    assert br[(0, n)] == pytest.approx(math.cos(th))
    # -i e^{i phi} = -1 at phi = -pi/2
    assert br[(1, n - 1)] == pytest.approx(-math.sin(th))


def test_carrier_rejects_negative_fock():
    with pytest.raises(ValueError):
        dynamics.carrier_amplitudes(carrier(), 0, -1)


def test_sideband_emission_example():
    p = step(2)
    n = 97
    th = math.pi / 2 * math.sqrt((n + 1) / p.field.nbar)
    br = as_dict(dynamics.sideband_amplitudes(p, (1, 0, 0), n))
    assert br[((1, 0, 0), n)] == pytest.approx(math.cos(th))
    assert br[((0, 0, 1), n + 1)] == pytest.approx(-1j * math.sin(th))


@pytest.mark.parametrize("level", [(0, 0, 0), (1, 0, 1), (1, 1, 1), (0, "aux", 0)])
def test_sideband_spectators(level):
    br = dynamics.sideband_amplitudes(step(2), level, 50)
    assert br == [(1.0, level, 50)]


def test_step3_couples_aux():
    pairs = dynamics.coupled_pairs(step(3))
    assert pairs == [(basis_index(0, 0, 1), basis_index(0, "aux", 0)),
                     (basis_index(1, 0, 1), basis_index(1, "aux", 0))]


def test_pulse_validation():
    with pytest.raises(ValueError):
        Pulse("blue", "y", (0, 1), 1, 0)
    with pytest.raises(ValueError):
        Pulse(CARRIER, "x", (0, "aux"), 1, 0)
    with pytest.raises(ValueError):
        carrier(fld=None).rabi_angle(3)


def test_full_cycle_ideal_pulse_flips_sign():
    u = dynamics.ideal_pulse(Pulse(RED_SIDEBAND, "y", (0, "aux"), 2.0, 0.3))
    moving = {s for pair in dynamics.coupled_pairs(step(3)) for s in pair}
    expected = np.diag([-1.0 if s in moving else 1.0 for s in range(12)])
    np.testing.assert_allclose(u, expected, atol=1e-15)


def test_first_and_last_steps_cancel():
    p = dynamics.cz_cnot_protocol()
    u = dynamics.ideal_pulse(p.steps[4]) @ dynamics.ideal_pulse(p.steps[0])
    np.testing.assert_allclose(u, np.eye(12), atol=1e-15)


def test_ideal_protocol_is_cnot():
    u = dynamics.ideal_gate(dynamics.cz_cnot_protocol())
    np.testing.assert_allclose(u[:4, :4], dynamics.cnot_reference()[:4, :4], atol=1e-15)
    v = u @ np.eye(12)[:, basis_index(1, 0, 0)]
    assert abs(v[basis_index(1, 1, 0)]) == pytest.approx(1, abs=1e-15)


def test_ideal_pulses_unitary():
    for p in dynamics.cz_cnot_protocol().steps:
        u = dynamics.ideal_pulse(p)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(12), atol=1e-15)


@pytest.mark.parametrize("i", [1, 2, 3, 4, 5])
def test_joint_unitary_isometry_away_from_edges(i):
    p = step(i, nbar=9.0)
    d = 40
    u = dynamics.joint_unitary(p, d - 1)
    cols = [s * d + n for s in range(12) for n in range(1, d - 2)]
    np.testing.assert_allclose(np.linalg.norm(u[:, cols], axis=0), 1.0, atol=1e-12)
    sub = u[:, cols]
    np.testing.assert_allclose(sub.conj().T @ sub, np.eye(len(cols)), atol=1e-12)


@pytest.mark.parametrize("i", [1, 2, 3, 4, 5])
def test_photon_selection_rule(i):
    p = step(i, nbar=9.0)
    for s in range(12):
        for n in range(0, 30):
            for br in dynamics.pulse_action(p, s, n):
                if br.level == s:
                    assert br.fock == n
                    continue
                assert abs(br.fock - n) == 1
                xs, ys, phs = dynamics.basis_label(s)
                xt, yt, pht = dynamics.basis_label(br.level)
                if p.transition == CARRIER:
                    assert phs == pht
                    # lower -> upper absorbs a photon
                    assert (br.fock - n) == (-1 if ys == 0 else 1)
                else:
                    assert phs != pht
                    assert (br.fock - n) == (-1 if phs == 1 else 1)


def test_protocol_needs_five_steps():
    with pytest.raises(ValueError):
        dynamics.Protocol(dynamics.cz_cnot_protocol().steps[:4])
