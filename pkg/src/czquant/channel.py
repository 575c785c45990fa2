"""Kraus families, superoperators and repeated gate application.

Density matrices are straightened row by row (``vec(rho) = rho.reshape(-1)``),
under which a conjugation channel reads ``vec(E rho E^dag) = (E kron E*) vec(rho)``
and the one-gate map is the product ``M5 M4 M3 M2 M1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .dynamics import DIM, Protocol, Pulse, coupled_pairs, ideal_pulse, spectators

ALL_QUANTIZED = (True, True, True, True, True)
ALL_IDEAL = (False, False, False, False, False)
SIDEBAND_LIMITED = (False, True, True, True, False)


class WindowError(RuntimeError):
    """The Fock window of a field leaves too much probability out."""

    def __init__(self, defect: float, limit: float):
        super().__init__(f"Kraus completeness defect {defect:.3e} exceeds {limit:.3e}; widen the window")
        self.defect = defect
        self.limit = limit


class InvalidStateError(ValueError):
    pass


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    d = math.isqrt(v.shape[-1])
    return v.reshape(v.shape[:-1] + (d, d))


@dataclass(frozen=True, eq=False)
class KrausFamily:
    """Kraus operators ``E_k`` labelled by the final photon number ``k``.

    Stored sparsely: operator ``i`` has entry ``values[p, i]`` at
    ``(rows[p], cols[p])``.  Each pulse exchanges at most one photon, so
    only a couple of dozen entries are ever nonzero.
    """

    fock: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    completeness_defect: float = 0.0

    def __len__(self) -> int:
        return self.fock.size

    def operator(self, i: int) -> np.ndarray:
        e = np.zeros((DIM, DIM), dtype=complex)
        np.add.at(e, (self.rows, self.cols), self.values[:, i])
        return e

    def dense(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        stop = len(self) if stop is None else min(stop, len(self))
        e = np.zeros((stop - start, DIM, DIM), dtype=complex)
        for p in range(self.rows.size):
            e[:, self.rows[p], self.cols[p]] += self.values[p, start:stop]
        return e

    @property
    def operators(self) -> list[np.ndarray]:
        return list(self.dense())

    def _gram(self) -> np.ndarray:
        # h[p, q] = sum_k v_p(k) conj(v_q(k))
        return self.values @ self.values.conj().T

    def completeness(self) -> np.ndarray:
        """``sum_k E_k^dag E_k``."""
        h = self._gram()
        c = np.zeros((DIM, DIM), dtype=complex)
        same = self.rows[:, None] == self.rows[None, :]
        p, q = np.nonzero(same)
        np.add.at(c, (self.cols[p], self.cols[q]), h[p, q].conj())
        return c

    @classmethod
    def from_operators(cls, ops: Sequence[np.ndarray], fock=None) -> "KrausFamily":
        ops = np.asarray(ops, dtype=complex)
        mask = np.any(ops != 0, axis=0)
        rows, cols = np.nonzero(mask)
        values = ops[:, rows, cols].T.copy()
        fock = np.arange(len(ops)) if fock is None else np.asarray(fock)
        fam = cls(fock, rows, cols, values)
        return cls(fock, rows, cols, values, _defect(fam.completeness()))


def _defect(c: np.ndarray) -> float:
    return float(np.linalg.norm(c - np.eye(c.shape[0]), 2))


def kraus_from_pulse(pulse: Pulse, max_defect: float | None = None) -> KrausFamily:
    """Trace the pulse's field mode out of the joint evolution.

    ``E_k = sum_n c_n <k| U |n>`` with ``c_n`` the positive coherent
    amplitudes on the field window.  Raises :class:`WindowError` when the
    completeness defect exceeds ``max_defect`` (default ``10 * tail_eps``
    plus a rounding allowance).
    """
    fld = pulse.field
    if fld is None:
        raise ValueError("a quantized pulse needs a field")
    k = np.arange(max(fld.lo - 1, 0), fld.hi + 2, dtype=np.int64)
    amps = fld.amplitudes()

    def c(n):
        out = np.zeros(n.shape)
        inside = (n >= fld.lo) & (n <= fld.hi)
        out[inside] = amps[n[inside] - fld.lo]
        return out

    up = -1j * np.exp(1j * pulse.phase)
    down = -1j * np.exp(-1j * pulse.phase)
    th_k = pulse.rabi_angle(k)
    th_k1 = pulse.rabi_angle(k + 1)
    ck, ck1, ckm = c(k), c(k + 1), c(k - 1)

    rows, cols, vals = [], [], []

    def put(r, col, v):
        rows.append(r)
        cols.append(col)
        vals.append(np.asarray(v, dtype=complex))

    for s in spectators(pulse):
        put(s, s, ck)
    for a, b in coupled_pairs(pulse):
        put(a, a, ck * np.cos(th_k))
        put(b, a, up * ck1 * np.sin(th_k1))
        put(b, b, ck * np.cos(th_k1))
        put(a, b, down * ckm * np.sin(th_k))

    values = np.array(vals)
    keep = np.any(values != 0, axis=0)
    fam = KrausFamily(k[keep], np.array(rows), np.array(cols), values[:, keep])
    defect = _defect(fam.completeness())
    limit = 10 * fld.tail_eps + 1e-13 if max_defect is None else max_defect
    if defect > limit:
        raise WindowError(defect, limit)
    return KrausFamily(fam.fock, fam.rows, fam.cols, fam.values, defect)


def unitary_family(u: np.ndarray) -> KrausFamily:
    return KrausFamily.from_operators([u])


@dataclass(frozen=True, eq=False)
class Superoperator:
    """144x144 matrix acting on row-straightened 12x12 density matrices."""

    matrix: np.ndarray
    vec_convention: str = "row"
    info: dict = dc_field(default_factory=dict)

    @property
    def dim(self) -> int:
        return math.isqrt(self.matrix.shape[0])

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix @ other.matrix)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho))


def superop_from_kraus(family: KrausFamily) -> Superoperator:
    """``sum_k E_k kron conj(E_k)``."""
    h = family._gram()
    m = np.zeros((DIM * DIM, DIM * DIM), dtype=complex)
    r = family.rows[:, None] * DIM + family.rows[None, :]
    col = family.cols[:, None] * DIM + family.cols[None, :]
    np.add.at(m, (r.ravel(), col.ravel()), h.ravel())
    return Superoperator(m)


def unitary_superop(u: np.ndarray) -> Superoperator:
    return Superoperator(np.kron(u, u.conj()))


def _check_mask(protocol: Protocol, mask) -> tuple[bool, ...]:
    mask = tuple(bool(m) for m in mask)
    if len(mask) != len(protocol.steps):
        raise ValueError(f"quantized_mask needs {len(protocol.steps)} entries, got {len(mask)}")
    return mask


def step_superops(protocol: Protocol, quantized_mask=ALL_QUANTIZED) -> list[Superoperator]:
    mask = _check_mask(protocol, quantized_mask)
    return [superop_from_kraus(kraus_from_pulse(p)) if q else unitary_superop(ideal_pulse(p))
            for p, q in zip(protocol.steps, mask)]


def gate_superop(protocol: Protocol, quantized_mask=ALL_QUANTIZED) -> Superoperator:
    """One-gate superoperator ``M5 M4 M3 M2 M1``.

    Steps flagged ``False`` in ``quantized_mask`` use the classical-field
    unitary instead of the quantized channel.
    """
    mask = _check_mask(protocol, quantized_mask)
    m = np.eye(DIM * DIM, dtype=complex)
    for step in step_superops(protocol, mask):
        m = step.matrix @ m
    nbar = [p.field.nbar if (q and p.field is not None) else None
            for p, q in zip(protocol.steps, mask)]
    return Superoperator(m, info={"quantized_mask": list(mask), "nbar": nbar})


def apply_kraus(family: KrausFamily, rhos: np.ndarray, chunk: int = 128) -> np.ndarray:
    """``sum_k E_k rho E_k^dag`` for a batch of density matrices, in fixed k order."""
    rhos = np.asarray(rhos, dtype=complex)
    b, d, _ = rhos.shape
    # rho as (j, (b, l)) so that E rho is a single matrix product per chunk
    r = rhos.transpose(1, 0, 2).reshape(d, b * d)
    out = np.zeros((d * b, d), dtype=complex)
    for start in range(0, len(family), chunk):
        e = family.dense(start, start + chunk)
        c = e.shape[0]
        er = (e.reshape(c * d, d) @ r).reshape(c, d, b, d)
        # contract over (k, l) with conj(E)[k, m, l]
        lhs = er.transpose(1, 2, 0, 3).reshape(d * b, c * d)
        rhs = e.conj().transpose(0, 2, 1).reshape(c * d, d)
        out += lhs @ rhs
    return out.reshape(d, b, d).transpose(1, 0, 2)


def _step_maps(protocol: Protocol, mask) -> list[Callable[[np.ndarray], np.ndarray]]:
    maps = []
    for p, q in zip(protocol.steps, mask):
        if q:
            fam = kraus_from_pulse(p)
            maps.append(lambda r, fam=fam: apply_kraus(fam, r))
        else:
            u = ideal_pulse(p)
            maps.append(lambda r, u=u: u @ r @ u.conj().T)
    return maps


def superop_by_coefficient_matching(protocol: Protocol, quantized_mask=ALL_QUANTIZED) -> Superoperator:
    """Rebuild ``M`` from how the gate transforms pure input states.

    The output density matrix is a Hermitian form in the input amplitudes
    ``alpha``.  The coefficient of ``alpha_i conj(alpha_j)`` is read off by
    polarization over the inputs ``e_i + i**m e_j`` (m = 0..3), each sent
    through the five step channels acting on density matrices directly.
    """
    mask = _check_mask(protocol, quantized_mask)
    inputs, index = [], []
    for i in range(DIM):
        for j in range(DIM):
            if i == j:
                psi = np.zeros(DIM, dtype=complex)
                psi[i] = 1
                inputs.append(psi)
                index.append((i, j, None))
            else:
                for m in range(4):
                    psi = np.zeros(DIM, dtype=complex)
                    psi[i] = 1
                    psi[j] = 1j**m
                    inputs.append(psi)
                    index.append((i, j, m))
    psis = np.array(inputs)
    rhos = psis[:, :, None] * psis[:, None, :].conj()
    for step in _step_maps(protocol, mask):
        rhos = step(rhos)
    m = np.zeros((DIM * DIM, DIM * DIM), dtype=complex)
    for out, (i, j, ph) in zip(rhos, index):
        w = 1.0 if ph is None else 0.25 * 1j**ph
        m[:, i * DIM + j] += w * vec(out)
    return Superoperator(m, info={"quantized_mask": list(mask)})


# ---------------------------------------------------------------------------
# Repeated application
# ---------------------------------------------------------------------------


def validate_density(rho: np.ndarray, tol: float = 1e-12) -> None:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"density matrix must be square, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise InvalidStateError(f"density matrix trace is {np.trace(rho).real:.15g}, not 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -tol:
        raise InvalidStateError("density matrix is not positive semidefinite")


@dataclass(frozen=True)
class Evolution:
    rho: np.ndarray
    t: int
    trace_defect: float
    hermiticity_defect: float


def _finish(v: np.ndarray, t: int) -> Evolution:
    rho = unvec(v)
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    rho = 0.5 * (rho + rho.conj().T)
    return Evolution(rho, t, float(abs(np.trace(rho).real - 1)), herm)


def evolve(M: Superoperator, rho0: np.ndarray, t: int, validate: bool = True) -> Evolution:
    """``unvec(M^t vec(rho0))`` by repeated multiplication, Hermitized, not renormalized."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if validate:
        validate_density(rho0)
    v = vec(np.asarray(rho0, dtype=complex)).copy()
    for _ in range(t):
        v = M.matrix @ v
    return _finish(v, t)


def trajectory(M: Superoperator, rho0: np.ndarray, ts: Sequence[int], validate: bool = True) -> list[Evolution]:
    """States after each count in ``ts`` from a single pass of repeated application."""
    if validate:
        validate_density(rho0)
    wanted = sorted(set(int(t) for t in ts))
    if wanted and wanted[0] < 0:
        raise ValueError("operation counts must be nonnegative")
    v = vec(np.asarray(rho0, dtype=complex)).copy()
    done, cur = {}, 0
    for t in wanted:
        while cur < t:
            v = M.matrix @ v
            cur += 1
        done[t] = _finish(v, t)
    return [done[int(t)] for t in ts]


def apply_n(M: Superoperator, rho0: np.ndarray, t: int) -> np.ndarray:
    return evolve(M, rho0, t).rho


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


def choi_matrix(M: Superoperator) -> np.ndarray:
    """``J = sum_cd |c><d| kron Phi(|c><d|)``; trace equals the dimension for TP maps."""
    d = M.dim
    j = M.matrix.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)
    return j


def trace_preservation_defect(M: Superoperator) -> float:
    d = M.dim
    t = np.eye(d).reshape(-1)
    return float(np.max(np.abs(t @ M.matrix - t)))


def choi_min_eigenvalue(M: Superoperator) -> float:
    j = choi_matrix(M)
    return float(np.linalg.eigvalsh(0.5 * (j + j.conj().T)).min())


def channel_report(protocol: Protocol, quantized_mask=ALL_QUANTIZED) -> dict:
    """Build the gate and collect its diagnostics as a JSON-ready dict."""
    mask = _check_mask(protocol, quantized_mask)
    steps, m = [], np.eye(DIM * DIM, dtype=complex)
    for i, (p, q) in enumerate(zip(protocol.steps, mask), start=1):
        entry = {"step": i, "transition": p.transition, "target_ion": p.target_ion,
                 "area_pi": p.area, "phase": p.phase, "mode": "quantized" if q else "ideal"}
        if q:
            fam = kraus_from_pulse(p)
            s = superop_from_kraus(fam)
            entry.update(nbar=p.field.nbar, window=[p.field.lo, p.field.hi],
                         tail_eps=p.field.tail_eps, kraus_count=len(fam),
                         completeness_defect=fam.completeness_defect)
        else:
            s = unitary_superop(ideal_pulse(p))
            entry.update(completeness_defect=0.0)
        m = s.matrix @ m
        steps.append(entry)
    gate = Superoperator(m)
    j = choi_matrix(gate)
    return {
        "protocol": protocol.name,
        "quantized_mask": list(mask),
        "vec_convention": "row",
        "trace_preservation_defect": trace_preservation_defect(gate),
        "choi_min_eigenvalue": choi_min_eigenvalue(gate),
        "choi_trace": float(np.trace(j).real),
        "steps": steps,
    }
