"""Failure probability of repeated CNOTs against the classical-field expectation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .channel import Superoperator, trajectory
from .dynamics import DIM

ION_DIM = 6


@dataclass(frozen=True)
class InitialQubitState:
    """Amplitudes of ``|00>, |10>, |01>, |11>`` (``x`` first) with the phonon in ``|0>``."""

    amplitudes: tuple[complex, complex, complex, complex]
    name: str = ""

    def __post_init__(self):
        if len(self.amplitudes) != 4:
            raise ValueError("an initial qubit state has four amplitudes")
        norm = sum(abs(a) ** 2 for a in self.amplitudes)
        if abs(norm - 1) > 1e-10:
            raise ValueError(f"amplitudes must be normalized, squared norm is {norm:.12g}")

    @classmethod
    def normalized(cls, amplitudes: Sequence[complex], name: str = "") -> "InitialQubitState":
        a = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(a)
        if norm == 0:
            raise ValueError("amplitudes are all zero")
        return cls(tuple(complex(z) for z in a / norm), name)

    def vector(self) -> np.ndarray:
        """12-dim system vector; the four qubit states are the first basis states."""
        v = np.zeros(DIM, dtype=complex)
        v[:4] = self.amplitudes
        return v

    def density(self) -> np.ndarray:
        v = self.vector()
        return np.outer(v, v.conj())


_S = 1 / math.sqrt(2)
PRESETS = {
    "00": InitialQubitState((1, 0, 0, 0), "00"),
    "10": InitialQubitState((0, 1, 0, 0), "10"),
    "01": InitialQubitState((0, 0, 1, 0), "01"),
    "11": InitialQubitState((0, 0, 0, 1), "11"),
    "plus-x": InitialQubitState((_S, _S, 0, 0), "plus-x"),
    "plus-y": InitialQubitState((_S, 0, _S, 0), "plus-y"),
}


def preset(name: str) -> InitialQubitState:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown initial state {name!r}; choose from {', '.join(PRESETS)}") from None


def trace_out_phonon(rho: np.ndarray) -> np.ndarray:
    """Reduce a 12x12 system state to the two ions (6x6, index ``2 * y + x``)."""
    r = np.asarray(rho).reshape(2, ION_DIM, 2, ION_DIM)
    return np.einsum("aiaj->ij", r)


def expected_state(initial: InitialQubitState, t: int) -> np.ndarray:
    """Ion state a perfect gate would give after ``t`` applications (6-dim)."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    a1, a2, a3, a4 = initial.amplitudes
    psi = np.zeros(ION_DIM, dtype=complex)
    psi[:4] = (a1, a2, a3, a4) if t % 2 == 0 else (a1, a4, a3, a2)
    return psi


def success_probability(rho: np.ndarray, initial: InitialQubitState, t: int) -> float:
    psi = expected_state(initial, t)
    return float(np.real(psi.conj() @ trace_out_phonon(rho) @ psi))


@dataclass(frozen=True)
class RunResult:
    t: int
    nbar: float | None
    initial: str
    p_fail: float
    trace_defect: float
    hermiticity_defect: float


def failure_curve(M: Superoperator, initial: InitialQubitState, ts: Sequence[int],
                  nbar: float | None = None) -> list[RunResult]:
    """``p_f = 1 - <psi_e| rho_ions |psi_e>`` after each count in ``ts``."""
    out = []
    for ev in trajectory(M, initial.density(), ts):
        p_fail = 1.0 - success_probability(ev.rho, initial, ev.t)
        out.append(RunResult(ev.t, nbar, initial.name, p_fail, ev.trace_defect, ev.hermiticity_defect))
    return out


def failure_probability(M: Superoperator, initial: InitialQubitState, t: int) -> float:
    return failure_curve(M, initial, [t])[0].p_fail


@dataclass(frozen=True)
class LinearFit:
    slope: float
    relative_residual: float


def fit_through_origin(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Least squares ``y = slope * x``; residual is ``||y - fit|| / ||y||``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0 or x.shape != y.shape:
        raise ValueError("need matching, nonempty x and y")
    xx = float(x @ x)
    if xx == 0:
        raise ValueError("degenerate grid: all x are zero")
    slope = float(x @ y) / xx
    ny = float(np.linalg.norm(y))
    resid = float(np.linalg.norm(y - slope * x)) / ny if ny > 0 else 0.0
    return LinearFit(slope, resid)


@dataclass(frozen=True)
class ProportionalityReport:
    t_fits: dict           # nbar -> LinearFit of p_f against t
    nbar_fit: LinearFit    # p_f at the largest t against 1/nbar
    t_ref: int
    p_at_t_ref: dict       # nbar -> p_f(t_ref)
    ratios: dict           # (nbar_lo, nbar_hi) -> p_f(nbar_lo) / p_f(nbar_hi)


def proportionality_report(M_family: Mapping[float, Superoperator], initial: InitialQubitState,
                           t_grid: Sequence[int]) -> ProportionalityReport:
    """Check ``p_f ~ t`` per field strength and ``p_f ~ 1/nbar`` at the last ``t``."""
    ts = [int(t) for t in t_grid]
    if not ts or ts != sorted(ts) or len(set(ts)) != len(ts):
        raise ValueError("t_grid must be nonempty and strictly ascending")
    if not M_family:
        raise ValueError("need at least one superoperator")
    t_fits, p_ref = {}, {}
    for nbar, M in sorted(M_family.items()):
        curve = [r.p_fail for r in failure_curve(M, initial, ts, nbar)]
        if ts == [0]:
            raise ValueError("degenerate grid: only t = 0")
        t_fits[nbar] = fit_through_origin(ts, curve)
        p_ref[nbar] = curve[-1]
    nbars = sorted(p_ref)
    nbar_fit = fit_through_origin([1.0 / n for n in nbars], [p_ref[n] for n in nbars])
    ratios = {}
    for lo, hi in zip(nbars, nbars[1:]):
        ratios[(lo, hi)] = p_ref[lo] / p_ref[hi] if p_ref[hi] != 0 else math.inf
    return ProportionalityReport(t_fits, nbar_fit, ts[-1], p_ref, ratios)
