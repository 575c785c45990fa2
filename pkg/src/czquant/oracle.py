"""Brute-force reference: the 12-level system evolved jointly with all five
field modes as one state vector, fields traced out only at the end.

Mode ``j`` is appended as a new trailing axis just before step ``j`` acts,
so the state after the gate has shape ``(12, d1, ..., d5)``.  Mode axes span
the window plus one index either side, which is exactly the range a single
photon exchange can reach.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import Superoperator
from .dynamics import DIM, Protocol, Pulse, coupled_pairs
from .field import CoherentField
from .metrics import InitialQubitState

DEFAULT_MAX_AMPLITUDES = 2**25


class OracleSizeError(RuntimeError):
    def __init__(self, size: int, cap: int):
        super().__init__(f"joint state needs {size} amplitudes, above the cap of {cap}")
        self.size = size
        self.cap = cap


@dataclass(frozen=True, eq=False)
class JointState:
    """Joint amplitudes, leading axis the system, one axis per field mode."""

    amplitudes: np.ndarray
    offsets: tuple[int, ...]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _mode_axis(field: CoherentField) -> tuple[int, int]:
    offset = max(field.lo - 1, 0)
    return offset, field.hi + 2 - offset


def _coherent(field: CoherentField) -> np.ndarray:
    offset, d = _mode_axis(field)
    c = np.zeros(d)
    c[field.lo - offset: field.hi - offset + 1] = field.amplitudes()
    return c


def _apply_pulse(psi: np.ndarray, pulse: Pulse, offset: int) -> np.ndarray:
    """Act on axis 1 (system) and the last axis (this pulse's mode) of ``psi``, in place."""
    d = psi.shape[-1]
    n = offset + np.arange(d)
    th_n = pulse.rabi_angle(n)
    th_n1 = pulse.rabi_angle(n + 1)
    up = -1j * np.exp(1j * pulse.phase)
    down = -1j * np.exp(-1j * pulse.phase)
    for a, b in coupled_pairs(pulse):
        pa = psi[:, a]
        pb = psi[:, b]
        na = np.cos(th_n) * pa
        # |b, n-1> feeds |a, n> with angle theta(n)
        na[..., 1:] += (down * np.sin(th_n[1:])) * pb[..., :-1]
        # |a, m+1> feeds |b, m> with angle theta(m+1)
        pb *= np.cos(th_n1)
        pb[..., :-1] += (up * np.sin(th_n1[:-1])) * pa[..., 1:]
        pa[...] = na
    return psi


def _system_batch(initial) -> np.ndarray:
    if isinstance(initial, InitialQubitState):
        return initial.vector()[None, :]
    v = np.asarray(initial, dtype=complex)
    if v.ndim == 1:
        v = v[None, :]
    if v.shape[-1] != DIM:
        raise ValueError(f"system vectors must have {DIM} components")
    return v


def _fields_for(protocol: Protocol, fields) -> list[CoherentField]:
    fields = [p.field for p in protocol.steps] if fields is None else list(fields)
    if len(fields) != len(protocol.steps) or any(f is None for f in fields):
        raise ValueError("the oracle needs one field per step")
    return fields


def _run(psi: np.ndarray, steps: Sequence[Pulse], fields: Sequence[CoherentField]) -> np.ndarray:
    for pulse, fld in zip(steps, fields):
        psi = psi[..., None] * _coherent(fld)
        psi = _apply_pulse(psi, pulse, _mode_axis(fld)[0])
    return psi


def joint_size(fields: Sequence[CoherentField], batch: int = 1) -> int:
    return batch * DIM * math.prod(_mode_axis(f)[1] for f in fields)


def evolve_full(protocol: Protocol, initial, fields: Sequence[CoherentField] | None = None,
                max_amplitudes: int = DEFAULT_MAX_AMPLITUDES) -> JointState:
    """Apply the five pulses as exact unitaries on system (x) five field modes.

    ``initial`` is an :class:`InitialQubitState` or a 12-component vector.
    """
    fields = _fields_for(protocol, fields)
    size = joint_size(fields)
    if size > max_amplitudes:
        raise OracleSizeError(size, max_amplitudes)
    psi = _run(_system_batch(initial)[:1], protocol.steps, fields)
    return JointState(psi[0], tuple(_mode_axis(f)[0] for f in fields))


def reduced_density(joint: JointState) -> np.ndarray:
    """Trace out every field mode."""
    psi = joint.amplitudes.reshape(DIM, -1)
    return psi @ psi.conj().T


def _blocked_gram(protocol: Protocol, systems: np.ndarray, fields, max_amplitudes: int) -> np.ndarray:
    """``G[i, a, j, b] = sum_f Psi_i[a, f] conj(Psi_j[b, f])`` for the batch of inputs.

    When the whole joint state does not fit, it is produced one mode-1 Fock
    slice at a time: pulses 2..5 never touch mode 1, so each slice evolves
    on its own and the slices together are the full state.
    """
    batch = systems.shape[0]
    gram = np.zeros((batch, DIM, batch, DIM), dtype=complex)
    if joint_size(fields, batch) <= max_amplitudes:
        psi = _run(systems, protocol.steps, fields).reshape(batch * DIM, -1)
        return (psi @ psi.conj().T).reshape(batch, DIM, batch, DIM)
    rest = joint_size(fields[1:], batch)
    if rest > max_amplitudes:
        raise OracleSizeError(rest, max_amplitudes)
    first = _run(systems, protocol.steps[:1], fields[:1])
    for i1 in range(first.shape[-1]):
        block = first[..., i1]
        if not np.any(block):
            continue
        psi = _run(block, protocol.steps[1:], fields[1:]).reshape(batch * DIM, -1)
        gram += (psi @ psi.conj().T).reshape(batch, DIM, batch, DIM)
    return gram


def oracle_density(protocol: Protocol, initial, fields: Sequence[CoherentField] | None = None,
                   max_amplitudes: int = DEFAULT_MAX_AMPLITUDES) -> np.ndarray:
    """Reduced one-gate density matrix from the joint evolution, sliced if needed."""
    fields = _fields_for(protocol, fields)
    systems = _system_batch(initial)[:1]
    return _blocked_gram(protocol, systems, fields, max_amplitudes)[0, :, 0, :]


def oracle_superop(protocol: Protocol, fields: Sequence[CoherentField] | None = None,
                   max_amplitudes: int = DEFAULT_MAX_AMPLITUDES) -> Superoperator:
    """Gate superoperator read off the joint evolution of the 12 basis inputs.

    For a pure joint evolution, the image of ``|i><j|`` is
    ``Tr_fields(Psi_i Psi_j^dag)``, which fills column ``(i, j)``.
    """
    fields = _fields_for(protocol, fields)
    g = _blocked_gram(protocol, np.eye(DIM, dtype=complex), fields, max_amplitudes)
    # m[(a, b), (i, j)] = g[i, a, j, b]
    m = g.transpose(1, 3, 0, 2).reshape(DIM * DIM, DIM * DIM)
    return Superoperator(m)
