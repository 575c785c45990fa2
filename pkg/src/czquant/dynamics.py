"""Quantized carrier and red-sideband pulses on the two-ion + phonon system.

System basis (12 states), index ``6 * ph + 2 * y + x``::

    0 |0,0,0>   1 |1,0,0>   2 |0,1,0>   3 |1,1,0>   4 |0,aux,0>   5 |1,aux,0>
    6..11  the same with one phonon

written ``|x, y, ph>`` with ``x`` the control ion and ``y`` the target ion.

Every pulse couples disjoint pairs of system states ``(a, b)``: the move
``a -> b`` absorbs one laser photon, ``b -> a`` emits one.  With Rabi angle
``theta(n) = area * pi / 2 * sqrt(n / nbar)``::

    |a, n>  ->  cos theta(n) |a, n>    - i e^{+i phi} sin theta(n)   |b, n-1>
    |b, m>  ->  cos theta(m+1) |b, m>  - i e^{-i phi} sin theta(m+1) |a, m+1>

For a carrier on ``(lower, upper)`` the pair is ``a = lower, b = upper`` with
the other ion and the phonon untouched.  For a red sideband the pair is
``a = (lower, 1 phonon)``, ``b = (upper, 0 phonons)``.  Everything outside the
coupled pairs is a spectator: the phonon is kept strictly two-level, so e.g.
``|1, y, 1>`` under the control-ion sideband does not move.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .field import CoherentField

DIM = 12
X_LEVELS = (0, 1)
Y_LEVELS = (0, 1, "aux")
PH_LEVELS = (0, 1)

CARRIER = "carrier"
RED_SIDEBAND = "red_sideband"


def _y_code(y) -> int:
    if y == "aux":
        return 2
    if y in (0, 1):
        return int(y)
    raise ValueError(f"target-ion level must be 0, 1 or 'aux', got {y!r}")


def basis_index(x: int, y, ph: int) -> int:
    if x not in X_LEVELS or ph not in PH_LEVELS:
        raise ValueError(f"invalid basis state ({x}, {y}, {ph})")
    return 6 * ph + 2 * _y_code(y) + x


def basis_label(index: int) -> tuple:
    if not 0 <= index < DIM:
        raise ValueError(f"basis index out of range: {index}")
    ph, rest = divmod(index, 6)
    y, x = divmod(rest, 2)
    return x, Y_LEVELS[y], ph


@dataclass(frozen=True)
class Pulse:
    """One laser pulse; ``area`` is in units of pi (0.5, 1, 2 in the gate)."""

    transition: str
    target_ion: str
    coupled_pair: tuple
    area: float
    phase: float
    field: CoherentField | None = None

    def __post_init__(self):
        if self.transition not in (CARRIER, RED_SIDEBAND):
            raise ValueError(f"unknown transition {self.transition!r}")
        if self.target_ion not in ("x", "y"):
            raise ValueError(f"target_ion must be 'x' or 'y', got {self.target_ion!r}")
        lower, upper = self.coupled_pair
        levels = X_LEVELS if self.target_ion == "x" else Y_LEVELS
        if lower not in levels or upper not in levels or lower == upper:
            raise ValueError(f"invalid coupled pair {self.coupled_pair!r} for ion {self.target_ion}")

    @property
    def half_angle(self) -> float:
        """Rotation angle of the classical-field limit, ``area * pi / 2``."""
        return 0.5 * math.pi * self.area

    def rabi_angle(self, n) -> np.ndarray:
        """Angle ``theta(n)`` for photon number ``n`` of the absorbing state."""
        if self.field is None:
            raise ValueError("pulse has no field attached")
        n = np.asarray(n, dtype=float)
        return self.half_angle * np.sqrt(n / self.field.nbar)

    def with_field(self, field: CoherentField | None) -> "Pulse":
        return replace(self, field=field)


def coupled_pairs(pulse: Pulse) -> list[tuple[int, int]]:
    """System index pairs ``(a, b)`` where ``a -> b`` absorbs a photon."""
    lower, upper = pulse.coupled_pair
    pairs = []
    if pulse.transition == CARRIER:
        for ph in PH_LEVELS:
            if pulse.target_ion == "y":
                for x in X_LEVELS:
                    pairs.append((basis_index(x, lower, ph), basis_index(x, upper, ph)))
            else:
                for y in Y_LEVELS:
                    pairs.append((basis_index(lower, y, ph), basis_index(upper, y, ph)))
    else:
        if pulse.target_ion == "y":
            for x in X_LEVELS:
                pairs.append((basis_index(x, lower, 1), basis_index(x, upper, 0)))
        else:
            for y in Y_LEVELS:
                pairs.append((basis_index(lower, y, 1), basis_index(upper, y, 0)))
    return pairs


def spectators(pulse: Pulse) -> list[int]:
    moving = {s for pair in coupled_pairs(pulse) for s in pair}
    return [s for s in range(DIM) if s not in moving]


class Branch(NamedTuple):
    amplitude: complex
    level: object
    fock: int


def _up_phase(pulse: Pulse) -> complex:
    return -1j * np.exp(1j * pulse.phase)


def _down_phase(pulse: Pulse) -> complex:
    return -1j * np.exp(-1j * pulse.phase)


def pulse_action(pulse: Pulse, s: int, n: int) -> list[Branch]:
    """Image of ``|s>|n>`` as a list of (amplitude, system index, Fock index)."""
    if n < 0:
        raise ValueError(f"Fock index must be nonnegative, got {n}")
    for a, b in coupled_pairs(pulse):
        if s == a:
            th = float(pulse.rabi_angle(n))
            out = [Branch(complex(math.cos(th)), a, n)]
            if n > 0:
                out.append(Branch(_up_phase(pulse) * math.sin(th), b, n - 1))
            return out
        if s == b:
            th = float(pulse.rabi_angle(n + 1))
            return [Branch(complex(math.cos(th)), b, n),
                    Branch(_down_phase(pulse) * math.sin(th), a, n + 1)]
    return [Branch(1.0 + 0j, s, n)]


def carrier_amplitudes(pulse: Pulse, ion_level, n: int) -> list[Branch]:
    """Carrier action on the addressed ion alone: ``|level>|n>`` to its branches.

    Returned levels are ion levels rather than system indices.
    """
    if pulse.transition != CARRIER:
        raise ValueError("carrier_amplitudes needs a carrier pulse")
    lower, upper = pulse.coupled_pair
    if ion_level not in (lower, upper):
        return [Branch(1.0 + 0j, ion_level, n)]
    # the other ion and the phonon do not change a carrier's action
    if pulse.target_ion == "y":
        s = basis_index(0, ion_level, 0)
        unpack = lambda i: basis_label(i)[1]
    else:
        s = basis_index(ion_level, 0, 0)
        unpack = lambda i: basis_label(i)[0]
    return [Branch(br.amplitude, unpack(br.level), br.fock) for br in pulse_action(pulse, s, n)]


def sideband_amplitudes(pulse: Pulse, system_level, n: int) -> list[Branch]:
    """Sideband action on ``|x, y, ph>|n>``; ``system_level`` is a label tuple or index."""
    if pulse.transition != RED_SIDEBAND:
        raise ValueError("sideband_amplitudes needs a red-sideband pulse")
    s = system_level if isinstance(system_level, (int, np.integer)) else basis_index(*system_level)
    return [Branch(br.amplitude, basis_label(br.level), br.fock) for br in pulse_action(pulse, s, n)]


def ideal_pulse(pulse: Pulse) -> np.ndarray:
    """12x12 unitary of the pulse driven by a classical field (``nbar -> inf``)."""
    u = np.eye(DIM, dtype=complex)
    c, s = math.cos(pulse.half_angle), math.sin(pulse.half_angle)
    for a, b in coupled_pairs(pulse):
        u[a, a] = c
        u[b, b] = c
        u[b, a] = _up_phase(pulse) * s
        u[a, b] = _down_phase(pulse) * s
    return u


def joint_unitary(pulse: Pulse, fock_max: int) -> np.ndarray:
    """Pulse unitary on system (x) Fock space ``0..fock_max``, index ``s * (fock_max+1) + n``.

    Blocks that would reach ``fock_max + 1`` are left out (they act as
    identity), so only rows and columns away from the cutoff are exact.
    """
    d = fock_max + 1
    u = np.zeros((DIM * d, DIM * d), dtype=complex)
    for s in range(DIM):
        for n in range(d):
            for br in pulse_action(pulse, s, n):
                if br.fock < d:
                    u[br.level * d + br.fock, s * d + n] += br.amplitude
    return u


@dataclass(frozen=True)
class Protocol:
    steps: tuple[Pulse, ...]
    name: str = ""

    def __post_init__(self):
        if len(self.steps) != 5:
            raise ValueError(f"a CNOT protocol has 5 steps, got {len(self.steps)}")

    def with_fields(self, fields) -> "Protocol":
        fields = list(fields)
        if len(fields) != len(self.steps):
            raise ValueError("need one field per step")
        return replace(self, steps=tuple(p.with_field(f) for p, f in zip(self.steps, fields)))


def cz_cnot_protocol(nbar: float | None = None, tail_eps: float = 1e-14) -> Protocol:
    """The five-pulse CNOT (control ``x``, target ``y``, phonon bus).

    With ``nbar`` given, every step gets its own fresh certified field.
    """
    field = CoherentField.certified(nbar, tail_eps) if nbar is not None else None
    half_pi = math.pi / 2
    steps = (
        Pulse(CARRIER, "y", (0, 1), 0.5, -half_pi, field),
        Pulse(RED_SIDEBAND, "x", (0, 1), 1.0, 0.0, field),
        Pulse(RED_SIDEBAND, "y", (0, "aux"), 2.0, 0.0, field),
        Pulse(RED_SIDEBAND, "x", (0, 1), 1.0, 0.0, field),
        Pulse(CARRIER, "y", (0, 1), 0.5, half_pi, field),
    )
    return Protocol(steps, name="cz-cnot")


PROTOCOLS = {"cz-cnot": cz_cnot_protocol}


def ideal_gate(protocol: Protocol) -> np.ndarray:
    u = np.eye(DIM, dtype=complex)
    for p in protocol.steps:
        u = ideal_pulse(p) @ u
    return u


def cnot_reference() -> np.ndarray:
    """CNOT on the qubit/phonon-0 block, acting as identity elsewhere."""
    u = np.eye(DIM, dtype=complex)
    i10, i11 = basis_index(1, 0, 0), basis_index(1, 1, 0)
    u[[i10, i11], [i10, i11]] = 0
    u[i11, i10] = u[i10, i11] = 1
    return u
