"""Coherent laser field: Poisson photon statistics, certified Fock windows and
Poisson-weighted trigonometric sums.

Photon-number weights are evaluated in log space with the saddle-point
decomposition ``log p(n) = -stirlerr(n) - bd0(n, nbar) - log(2 pi n) / 2``
(Loader's form of the Poisson pmf).  Unlike ``n log nbar - lgamma(n+1) - nbar``
it does not cancel two numbers of size ``nbar``, which costs about ``1e-12``
relative accuracy already at ``nbar = 1e4``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

_LOG_2PI = math.log(2.0 * math.pi)
_EPS = np.finfo(float).eps

# stirlerr(n) = lgamma(n+1) - (n+1/2) log n + n - log(2 pi)/2, exact enough below 16
_STIRLERR_SMALL = np.array(
    [0.0]
    + [math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - 0.5 * _LOG_2PI for n in range(1, 16)]
)


def _stirlerr(n: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    out = np.empty_like(n)
    small = n < 16
    if np.any(small):
        out[small] = _STIRLERR_SMALL[n[small].astype(np.int64)]
    big = ~small
    if np.any(big):
        nn = n[big]
        n2 = 1.0 / (nn * nn)
        out[big] = (
            1.0 / 12 - (1.0 / 360 - (1.0 / 1260 - (1.0 / 1680 - n2 / 1188) * n2) * n2) * n2
        ) / nn
    return out


def _bd0(x: np.ndarray, mu: float) -> np.ndarray:
    """``x log(x/mu) + mu - x`` without cancellation near ``x = mu``."""
    x = np.asarray(x, dtype=float)
    d = x - mu
    out = np.empty_like(x)
    near = np.abs(d) < 0.1 * (x + mu)
    if np.any(near):
        xn = x[near]
        dn = d[near]
        v = dn / (xn + mu)
        s = dn * v
        ej = 2.0 * xn * v
        v2 = v * v
        # |v| < 0.1, so 16 terms reach far below double rounding
        for j in range(1, 17):
            ej = ej * v2
            s = s + ej / (2 * j + 1)
        out[near] = s
    far = ~near
    if np.any(far):
        xf = x[far]
        with np.errstate(divide="ignore", invalid="ignore"):
            val = xf * np.log(xf / mu) + mu - xf
        out[far] = np.where(xf == 0, mu, val)
    return out


def log_poisson_weights(nbar: float, n) -> np.ndarray:
    """Natural log of ``exp(-nbar) nbar**n / n!`` for integer ``n >= 0``."""
    n = np.asarray(n, dtype=float)
    scalar = n.ndim == 0
    n = np.atleast_1d(n)
    out = np.empty_like(n)
    zero = n == 0
    out[zero] = -nbar
    pos = ~zero
    if np.any(pos):
        npos = n[pos]
        out[pos] = -_stirlerr(npos) - _bd0(npos, nbar) - 0.5 * (_LOG_2PI + np.log(npos))
    return out[0] if scalar else out


def poisson_weights(nbar: float, n) -> np.ndarray:
    return np.exp(log_poisson_weights(nbar, n))


# ---------------------------------------------------------------------------
# Tail certification
# ---------------------------------------------------------------------------


def log_chernoff_upper(nbar: float, a: float) -> float:
    """Log of the bound ``P(N >= a) <= exp(-nbar) (e nbar / a)**a``, ``a > nbar``."""
    if a <= nbar:
        return 0.0
    return -nbar + a + a * math.log(nbar / a)


def log_chernoff_lower(nbar: float, a: float) -> float:
    """Log of the bound ``P(N <= a) <= exp(-nbar) (e nbar / a)**a``, ``0 <= a < nbar``."""
    if a >= nbar:
        return 0.0
    if a <= 0:
        return -nbar
    return -nbar + a + a * math.log(nbar / a)


def _far_upper(nbar: float, log_target: float) -> int:
    """Smallest integer ``a > nbar`` whose upper Chernoff bound is below ``exp(log_target)``."""
    base = math.floor(nbar) + 1
    step = max(1, int(math.sqrt(nbar)))
    hi = base + step
    while log_chernoff_upper(nbar, hi) > log_target:
        step *= 2
        hi = base + step
    lo = base
    while lo < hi:
        mid = (lo + hi) // 2
        if log_chernoff_upper(nbar, mid) <= log_target:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _far_lower(nbar: float, log_target: float) -> int:
    """Largest integer ``b < nbar`` whose lower Chernoff bound is below ``exp(log_target)``; -1 if none."""
    if log_chernoff_lower(nbar, 0) > log_target:
        return -1
    lo, hi = 0, math.ceil(nbar) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if log_chernoff_lower(nbar, mid) <= log_target:
            lo = mid
        else:
            hi = mid - 1
    return lo


class _Tails(NamedTuple):
    ns_up: np.ndarray     # n = mode+1 .. far_up-1
    up: np.ndarray        # up[i] bounds P(N >= ns_up[i])
    far_up: int
    ns_lo: np.ndarray     # n = far_lo+1 .. mode-1
    lo: np.ndarray        # lo[i] bounds P(N <= ns_lo[i])
    far_lo: int


def _tails(nbar: float, tail_eps: float) -> _Tails:
    mode = math.floor(nbar)
    log_target = math.log(tail_eps) - math.log(1e6)
    a = _far_upper(nbar, log_target)
    ns_up = np.arange(mode + 1, a, dtype=np.int64)
    w_up = poisson_weights(nbar, ns_up)
    # suffix sums, smallest terms first
    up = np.cumsum(w_up[::-1])[::-1] + math.exp(log_chernoff_upper(nbar, a))
    b = _far_lower(nbar, log_target)
    ns_lo = np.arange(b + 1, mode, dtype=np.int64)
    w_lo = poisson_weights(nbar, ns_lo)
    lo = np.cumsum(w_lo) + (math.exp(log_chernoff_lower(nbar, b)) if b >= 0 else 0.0)
    return _Tails(ns_up, up, a, ns_lo, lo, b)


def tail_masses(nbar: float, lo: int, hi: int) -> tuple[float, float]:
    """Certified upper bounds on ``P(N < lo)`` and ``P(N > hi)``.

    Weights are summed directly out to where the Chernoff bound becomes
    negligible; the Chernoff bound covers the rest.
    """
    mode = math.floor(nbar)
    if not (0 <= lo <= mode <= hi):
        raise ValueError(f"window [{lo}, {hi}] does not contain the mode {mode}")
    log_target = -80.0
    a = max(_far_upper(nbar, log_target), hi + 1)
    ns = np.arange(hi + 1, a, dtype=np.int64)
    upper = math.fsum(poisson_weights(nbar, ns).tolist()) + math.exp(log_chernoff_upper(nbar, a))
    if lo == 0:
        return 0.0, upper
    b = min(_far_lower(nbar, log_target), lo - 1)
    ns = np.arange(b + 1, lo, dtype=np.int64)
    lower = math.fsum(poisson_weights(nbar, ns).tolist())
    if b >= 0:
        lower += math.exp(log_chernoff_lower(nbar, b))
    return lower, upper


def choose_window(nbar: float, tail_eps: float) -> tuple[int, int]:
    """Smallest window ``[lo, hi]`` around the Poisson mode leaving at most
    ``tail_eps / 2`` certified mass on each side."""
    if not nbar > 0:
        raise ValueError(f"nbar must be positive, got {nbar}")
    if not 0 < tail_eps < 1:
        raise ValueError(f"tail_eps must lie in (0, 1), got {tail_eps}")
    half = 0.5 * tail_eps
    t = _tails(nbar, tail_eps)
    ok = np.nonzero(t.up <= half)[0]
    hi = int(t.ns_up[ok[0]]) - 1 if ok.size else t.far_up - 1
    ok = np.nonzero(t.lo <= half)[0]
    if ok.size:
        lo = int(t.ns_lo[ok[-1]]) + 1
    else:
        lo = t.far_lo + 1 if t.far_lo >= 0 else 0
    return lo, hi


@dataclass(frozen=True)
class CoherentField:
    """A single-mode coherent field truncated to the Fock window ``[lo, hi]``.

    ``tail_eps`` is the certified bound on the photon-number mass left outside
    the window.
    """

    nbar: float
    lo: int
    hi: int
    tail_eps: float

    def __post_init__(self):
        if not self.nbar > 0:
            raise ValueError(f"nbar must be positive, got {self.nbar}")
        mode = math.floor(self.nbar)
        if not (0 <= self.lo <= mode <= self.hi):
            raise ValueError(f"window [{self.lo}, {self.hi}] must contain the mode {mode}")
        if sum(tail_masses(self.nbar, self.lo, self.hi)) > self.tail_eps:
            raise ValueError(
                f"window [{self.lo}, {self.hi}] leaves more than tail_eps={self.tail_eps:g} outside"
            )

    @classmethod
    def certified(cls, nbar: float, tail_eps: float = 1e-14) -> "CoherentField":
        lo, hi = choose_window(nbar, tail_eps)
        return cls(float(nbar), lo, hi, tail_eps)

    @property
    def window(self) -> tuple[int, int]:
        return self.lo, self.hi

    @property
    def fock(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1, dtype=np.int64)

    def weights(self) -> np.ndarray:
        return poisson_weights(self.nbar, self.fock)

    def amplitudes(self) -> np.ndarray:
        """Positive real coherent amplitudes ``sqrt(p(n))`` over the window."""
        return np.sqrt(self.weights())

    def neglected_mass(self) -> float:
        return sum(tail_masses(self.nbar, self.lo, self.hi))


def poisson_weight(field: CoherentField | float, n: int) -> float:
    nbar = field.nbar if isinstance(field, CoherentField) else float(field)
    if n < 0:
        raise ValueError(f"Fock index must be nonnegative, got {n}")
    return float(poisson_weights(nbar, n))


# ---------------------------------------------------------------------------
# Poisson-weighted trigonometric sums
# ---------------------------------------------------------------------------

PREFACTORS = (None, "sqrt_n_over_nbar", "sqrt_nbar_over_n1", "sqrt_n_over_n1")


@dataclass(frozen=True)
class Trig:
    """``func(coef * pi * sqrt(n + offset) / sqrt(nbar)) ** power``."""

    func: str
    coef: float
    offset: int = 0
    power: int = 1

    def __post_init__(self):
        if self.func not in ("cos", "sin"):
            raise ValueError(f"unknown trig function {self.func!r}")
        if self.offset not in (0, 1):
            raise ValueError("offset must be 0 or 1")


@dataclass(frozen=True)
class SumSpec:
    """One summand of the closed family ``scale * prefactor(n) * prod(factors)``."""

    factors: tuple[Trig, ...] = ()
    prefactor: str | None = None
    scale: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.prefactor not in PREFACTORS:
            raise ValueError(f"unknown prefactor {self.prefactor!r}; expected one of {PREFACTORS}")


def table_specs(k: int = 2) -> dict[str, SumSpec]:
    """The ten sums S1..S10 of the one-gate density matrix.

    ``k`` enters S4 as the angle ``k pi sqrt(n) / (4 sqrt(nbar))``.
    """
    q = 0.25
    cos0, sin0 = Trig("cos", q, 0), Trig("sin", q, 0)
    cos1, sin1 = Trig("cos", q, 1), Trig("sin", q, 1)
    return {
        "S1": SumSpec((Trig("cos", q, 0, 2),), name="S1"),
        "S2": SumSpec((cos0, sin1), "sqrt_nbar_over_n1", name="S2"),
        "S3": SumSpec((cos0, cos1), name="S3"),
        "S4": SumSpec((Trig("sin", k / 4, 0),), "sqrt_n_over_nbar", 0.5, name="S4"),
        "S5": SumSpec((Trig("sin", q, 0, 2),), name="S5"),
        "S6": SumSpec((Trig("sin", 0.5, 1),), "sqrt_nbar_over_n1", 0.5, name="S6"),
        "S7": SumSpec((sin0, sin1), "sqrt_n_over_n1", name="S7"),
        "S8": SumSpec((Trig("cos", q, 1, 2),), name="S8"),
        "S9": SumSpec((cos1, sin0), "sqrt_n_over_nbar", name="S9"),
        "S10": SumSpec((Trig("sin", q, 1, 2),), name="S10"),
    }


TABLE1_NBAR = 1e4
TABLE1_K = 2
TABLE1 = {
    "S1": "0.500009817401897928264355667147",
    "S2": "0.499997963670545683314749144417",
    "S3": "0.499990182422436977119909877501",
    "S4": "0.499978328996648238077753901338",
    "S5": "0.499990182598102071735644332853",
    "S6": "0.499978328996648238077753901338",
    "S7": "0.499984817654121934189482133164",
    "S8": "0.499970548214032003626335555500",
    "S9": "0.499958694533432311848321647856",
    "S10": "0.500029451785967996373664444500",
}


def _summand(spec: SumSpec, nbar: float, n: np.ndarray) -> np.ndarray:
    n = n.astype(float)
    out = np.full(n.shape, spec.scale)
    root = math.sqrt(nbar)
    for f in spec.factors:
        arg = f.coef * math.pi * np.sqrt(n + f.offset) / root
        val = np.cos(arg) if f.func == "cos" else np.sin(arg)
        out *= val**f.power
    if spec.prefactor == "sqrt_n_over_nbar":
        out *= np.sqrt(n / nbar)
    elif spec.prefactor == "sqrt_nbar_over_n1":
        out *= np.sqrt(nbar / (n + 1.0))
    elif spec.prefactor == "sqrt_n_over_n1":
        out *= np.sqrt(n / (n + 1.0))
    return out


def sum_tail_bound(spec: SumSpec, nbar: float, lo: int, hi: int) -> float:
    """Bound on ``|sum over n outside [lo, hi] of p(n) f(n)|``.

    The unbounded prefactors are handled by index shifts:
    ``p(n) n / nbar = p(n-1)`` and ``p(n) nbar / (n+1) = p(n+1)``.
    """
    lower, upper = tail_masses(nbar, lo, hi)
    if spec.prefactor == "sqrt_n_over_nbar":
        upper += float(poisson_weights(nbar, hi))
    elif spec.prefactor == "sqrt_nbar_over_n1":
        lower += float(poisson_weights(nbar, lo))
    return abs(spec.scale) * (lower + upper)


class SumResult(NamedTuple):
    value: float
    error_bound: float
    window: tuple[int, int]


def _sum_window(spec: SumSpec, nbar: float, budget: float, base: tuple[int, int] | None):
    lo, hi = choose_window(nbar, min(0.5, budget / (4.0 * max(1.0, abs(spec.scale)))))
    if base is not None:
        lo, hi = min(lo, base[0]), max(hi, base[1])
    return lo, hi


def evaluate_sum_certified(
    spec: SumSpec,
    field: CoherentField | float,
    abs_err: float = 1e-13,
    precision: str = "double",
) -> SumResult:
    """Sum ``p(n) f(n)`` over a window wide enough for ``abs_err``.

    Terms are accumulated in ascending ``n`` with an exactly rounded
    summation, so the result does not depend on evaluation order.
    ``error_bound`` combines the certified truncation bound with a rounding
    estimate; it is compared against ``abs_err``.
    """
    if not abs_err > 0:
        raise ValueError(f"abs_err must be positive, got {abs_err}")
    if precision not in ("double", "extended"):
        raise ValueError(f"precision must be 'double' or 'extended', got {precision!r}")
    if isinstance(field, CoherentField):
        nbar, base = field.nbar, field.window
    else:
        nbar, base = float(field), None
    if precision == "extended":
        return _evaluate_extended(spec, nbar, abs_err, base)

    lo, hi = _sum_window(spec, nbar, abs_err, base)
    ns = np.arange(lo, hi + 1, dtype=np.int64)
    logw = log_poisson_weights(nbar, ns)
    terms = np.exp(logw) * _summand(spec, nbar, ns)
    value = math.fsum(terms.tolist())
    # bd0/stirlerr carry absolute error ~eps*|log w|; trig and sqrt a few ulp
    rounding = float(np.sum(np.abs(terms) * _EPS * (np.abs(logw) + 0.5 * np.log(ns + 2.0) + 16.0)))
    bound = sum_tail_bound(spec, nbar, lo, hi) + rounding
    return SumResult(value, bound, (lo, hi))


def _evaluate_extended(spec: SumSpec, nbar: float, abs_err: float, base) -> SumResult:
    import mpmath

    lo, hi = _sum_window(spec, nbar, abs_err, base)
    with mpmath.workdps(50):
        mnbar = mpmath.mpf(nbar)
        lognbar = mpmath.log(mnbar)
        root = mpmath.sqrt(mnbar)
        pi = mpmath.pi
        terms = []
        for n in range(lo, hi + 1):
            mn = mpmath.mpf(n)
            t = mpmath.exp(-mnbar + mn * lognbar - mpmath.loggamma(mn + 1)) * spec.scale
            for f in spec.factors:
                arg = mpmath.mpf(f.coef) * pi * mpmath.sqrt(mn + f.offset) / root
                t *= (mpmath.cos(arg) if f.func == "cos" else mpmath.sin(arg)) ** f.power
            if spec.prefactor == "sqrt_n_over_nbar":
                t *= mpmath.sqrt(mn / mnbar)
            elif spec.prefactor == "sqrt_nbar_over_n1":
                t *= mpmath.sqrt(mnbar / (mn + 1))
            elif spec.prefactor == "sqrt_n_over_n1":
                t *= mpmath.sqrt(mn / (mn + 1))
            terms.append(t)
        value = mpmath.fsum(terms)
    bound = sum_tail_bound(spec, nbar, lo, hi) + 1e-40
    return SumResult(value, bound, (lo, hi))


def evaluate_sum(
    spec: SumSpec,
    field: CoherentField | float,
    abs_err: float = 1e-13,
    precision: str = "double",
):
    """Value of the Poisson-weighted sum; ``mpmath.mpf`` in extended precision."""
    return evaluate_sum_certified(spec, field, abs_err, precision).value


def evaluate_table(nbar: float = TABLE1_NBAR, k: int = TABLE1_K, abs_err: float = 1e-13,
                   precision: str = "double") -> dict[str, SumResult]:
    return {name: evaluate_sum_certified(spec, nbar, abs_err, precision)
            for name, spec in table_specs(k).items()}


def matching_digits(value, reference: str) -> int:
    """Decimal places of ``reference`` that ``value`` reproduces after rounding."""
    import mpmath

    places = len(reference.split(".")[1])
    with mpmath.workdps(80):
        diff = abs(mpmath.mpf(value) - mpmath.mpf(reference))
        if diff == 0:
            return places
        return max(0, min(places, int(mpmath.floor(-mpmath.log10(2 * diff)))))
