"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 verification failure,
3 numeric-certification failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from typing import Callable

import numpy as np

from . import channel, dynamics, field, metrics, oracle

log = logging.getLogger("czquant")

EXIT_OK, EXIT_INPUT, EXIT_VERIFY, EXIT_CERT = 0, 1, 2, 3

MASKS = {
    "quantized": channel.ALL_QUANTIZED,
    "ideal": channel.ALL_IDEAL,
    "sideband-limited": channel.SIDEBAND_LIMITED,
}


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument parsing helpers
# ---------------------------------------------------------------------------


def parse_mask(text: str) -> tuple[bool, ...]:
    if text in MASKS:
        return MASKS[text]
    bits = text.replace(",", "").strip()
    if len(bits) != 5 or set(bits) - {"0", "1"}:
        raise InputError(f"mask must be five 0/1 flags or one of {', '.join(MASKS)}; got {text!r}")
    return tuple(b == "1" for b in bits)


def parse_floats(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"not a number list: {text!r}") from None
    if not vals:
        raise InputError("empty number list")
    return vals


def parse_nbar(text: str) -> list[float]:
    vals = parse_floats(text)
    if any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise InputError(f"nbar must be positive and finite, got {text!r}")
    return vals


def parse_t(text: str) -> list[int]:
    """Comma-separated counts and inclusive ranges, e.g. ``"100"`` or ``"0,1..10,50"``."""
    ts = []
    try:
        for part in filter(None, (p.strip() for p in text.split(","))):
            if ".." in part:
                a, b = part.split("..")
                ts.extend(range(int(a), int(b) + 1))
            else:
                ts.append(int(part))
    except ValueError:
        raise InputError(f"bad operation count {text!r}") from None
    if not ts or min(ts) < 0:
        raise InputError(f"operation counts must be nonnegative, got {text!r}")
    return ts


def parse_initial(text: str) -> metrics.InitialQubitState:
    if text in metrics.PRESETS:
        return metrics.PRESETS[text]
    parts = text.split(",")
    if len(parts) != 8:
        raise InputError(
            f"unknown initial state {text!r}; use one of {', '.join(metrics.PRESETS)} "
            "or eight reals re1,im1,...,re4,im4"
        )
    vals = parse_floats(text)
    amps = [complex(vals[2 * i], vals[2 * i + 1]) for i in range(4)]
    norm = math.sqrt(sum(abs(a) ** 2 for a in amps))
    if norm == 0:
        raise InputError("initial amplitudes are all zero")
    if abs(norm - 1) > 1e-6:
        log.warning("initial amplitudes have norm %.9g; normalizing", norm)
    return metrics.InitialQubitState.normalized(amps, name=text)


def parse_initials(text: str) -> list[metrics.InitialQubitState]:
    if text == "all":
        return list(metrics.PRESETS.values())
    if text.count(",") == 7 and text.split(",")[0] not in metrics.PRESETS:
        return [parse_initial(text)]
    return [parse_initial(name.strip()) for name in text.split(",")]


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_sums(args) -> int:
    nbar = parse_nbar(args.nbar)
    if len(nbar) != 1:
        raise InputError("sums takes a single nbar")
    nbar = nbar[0]
    abs_err = args.abs_err if args.abs_err else (1e-32 if args.precision == "extended" else 1e-13)
    results = field.evaluate_table(nbar, args.k, abs_err, args.precision)
    compare = nbar == field.TABLE1_NBAR and args.k == field.TABLE1_K
    rows = []
    for name, res in results.items():
        row = {"sum": name, "value": _num(res.value, args.precision), "error_bound": res.error_bound,
               "window": f"{res.window[0]}..{res.window[1]}"}
        if compare:
            ref = field.TABLE1[name]
            row["reference"] = ref
            row["abs_diff"] = float(abs(_mp(res.value) - _mp(ref)))
            row["digits"] = field.matching_digits(res.value, ref)
        rows.append(row)
    checks = {
        "S1+S5": _num(results["S1"].value + results["S5"].value, args.precision),
        "S8+S10": _num(results["S8"].value + results["S10"].value, args.precision),
    }
    out, close = _open_out(args.out)
    try:
        if args.format == "json":
            json.dump({"nbar": nbar, "k": args.k, "precision": args.precision, "sums": rows,
                       "checks": checks}, out, indent=2)
            out.write("\n")
        else:
            w = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
            for name, val in checks.items():
                out.write(f"# {name} = {val}\n")
    finally:
        if close:
            out.close()
    return EXIT_OK


def _mp(x):
    import mpmath

    with mpmath.workdps(60):
        return mpmath.mpf(x)


def _num(x, precision: str) -> str:
    if precision == "extended":
        import mpmath

        return mpmath.nstr(x, 40)
    return _fmt(x)


def _protocol(args, nbar: float) -> dynamics.Protocol:
    return dynamics.PROTOCOLS[args.protocol](nbar, args.tail_eps)


def cmd_gate(args) -> int:
    nbar = parse_nbar(args.nbar)
    if len(nbar) != 1:
        raise InputError("gate takes a single nbar")
    mask = parse_mask(args.mask)
    report = channel.channel_report(_protocol(args, nbar[0]), mask)
    report["nbar"] = nbar[0]
    report["tail_eps"] = args.tail_eps
    out, close = _open_out(args.out)
    try:
        json.dump(report, out, indent=2)
        out.write("\n")
    finally:
        if close:
            out.close()
    return EXIT_OK


SWEEP_HEADER = ["nbar", "t", "initial", "p_fail", "trace_defect"]


def sweep_rows(nbars, initials, ts, mask, protocol: str = "cz-cnot", tail_eps: float = 1e-14):
    """Rows ordered by ``nbar``, then initial-state name, then ``t``."""
    rows = []
    for nbar in sorted(nbars):
        M = channel.gate_superop(dynamics.PROTOCOLS[protocol](nbar, tail_eps), mask)
        for init in sorted(initials, key=lambda s: s.name):
            for r in metrics.failure_curve(M, init, sorted(set(ts)), nbar):
                rows.append(r)
    return rows


def write_sweep(rows, out, fmt: str) -> None:
    if fmt == "json":
        json.dump([{"nbar": r.nbar, "t": r.t, "initial": r.initial, "p_fail": r.p_fail,
                    "trace_defect": r.trace_defect} for r in rows], out, indent=2)
        out.write("\n")
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([f"{r.nbar:g}", r.t, r.initial, _fmt(r.p_fail), _fmt(r.trace_defect)])


def cmd_sweep(args) -> int:
    nbars = parse_nbar(args.nbar)
    initials = parse_initials(args.initial)
    ts = parse_t(args.t)
    mask = parse_mask(args.mask)
    rows = sweep_rows(nbars, initials, ts, mask, args.protocol, args.tail_eps)
    out, close = _open_out(args.out)
    try:
        write_sweep(rows, out, args.format)
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_run(args) -> int:
    if len(parse_nbar(args.nbar)) != 1:
        raise InputError("run takes a single nbar; use sweep for grids")
    if len(parse_initials(args.initial)) != 1:
        raise InputError("run takes a single initial state; use sweep for grids")
    return cmd_sweep(args)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


def _check_table1() -> tuple[bool, str]:
    res = field.evaluate_table()
    worst = max(abs(r.value - float(field.TABLE1[n])) for n, r in res.items())
    return worst <= 1e-12, f"max |S_i - reference| = {worst:.2e} (limit 1e-12)"


def _check_ideal() -> tuple[bool, str]:
    M = channel.gate_superop(dynamics.cz_cnot_protocol(), channel.ALL_IDEAL)
    worst = 0.0
    for s in metrics.PRESETS.values():
        for r in metrics.failure_curve(M, s, [1, 2, 3]):
            worst = max(worst, abs(r.p_fail))
    return worst <= 1e-12, f"ideal gate max p_f = {worst:.2e} (limit 1e-12)"


def _check_matching(nbar: float) -> Callable[[], tuple[bool, str]]:
    def check():
        p = dynamics.cz_cnot_protocol(nbar)
        diff = np.max(np.abs(channel.gate_superop(p).matrix
                             - channel.superop_by_coefficient_matching(p).matrix))
        return diff <= 1e-12, f"nbar={nbar:g}: max |M_kron - M_match| = {diff:.2e} (limit 1e-12)"
    return check


def _check_oracle() -> tuple[bool, str]:
    p = dynamics.cz_cnot_protocol(4.0, 1e-14)
    M = channel.gate_superop(p)
    worst = 0.0
    for s in metrics.PRESETS.values():
        worst = max(worst, float(np.max(np.abs(oracle.oracle_density(p, s) - M.apply(s.density())))))
    return worst <= 1e-10, f"nbar=4 oracle vs channel max diff = {worst:.2e} (limit 1e-10)"


def _check_channel() -> tuple[bool, str]:
    p = dynamics.cz_cnot_protocol(1e4, 1e-14)
    rep = channel.channel_report(p)
    ok = (rep["trace_preservation_defect"] <= 1e-10 and rep["choi_min_eigenvalue"] >= -1e-10
          and all(s["completeness_defect"] <= 10 * 1e-14 for s in rep["steps"]))
    return ok, (f"TP defect {rep['trace_preservation_defect']:.1e}, Choi min eig "
                f"{rep['choi_min_eigenvalue']:.1e}")


def verification_suite(level: str) -> list[tuple[str, Callable[[], tuple[bool, str]]]]:
    checks = [("reference-sums", _check_table1), ("ideal-limit", _check_ideal),
              ("coefficient-matching nbar=1e2", _check_matching(1e2))]
    if level == "full":
        checks += [("coefficient-matching nbar=1e4", _check_matching(1e4)),
                   ("channel-sanity", _check_channel), ("oracle nbar=4", _check_oracle)]
    return checks


def cmd_verify(args) -> int:
    failed = False
    for name, check in verification_suite(args.level):
        start = time.perf_counter()
        ok, detail = check()
        failed |= not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail} [{time.perf_counter() - start:.1f}s]")
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="czquant", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, nbar_default="1e4"):
        p.add_argument("--nbar", default=nbar_default, help="mean photon number(s), comma separated")
        p.add_argument("--tail-eps", type=float, default=1e-14, help="neglected Poisson mass per field")
        p.add_argument("--protocol", default="cz-cnot", choices=sorted(dynamics.PROTOCOLS))
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("sums", help="Poisson-weighted sums S1..S10")
    p.add_argument("--nbar", default="1e4")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--precision", choices=("double", "extended"), default="double")
    p.add_argument("--abs-err", type=float, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sums)

    p = sub.add_parser("gate", help="build the one-gate channel and report diagnostics (JSON)")
    common(p)
    p.add_argument("--mask", default="quantized", help="five 0/1 flags, or quantized/ideal/sideband-limited")
    p.set_defaults(func=cmd_gate)

    for name, func, t_default, init_default in (("run", cmd_run, "100", "10"),
                                                 ("sweep", cmd_sweep, "1..100", "all")):
        p = sub.add_parser(name, help="failure probability after repeated gates (CSV)")
        common(p)
        p.add_argument("--t", default=t_default, help="count, list, or inclusive range a..b")
        p.add_argument("--initial", default=init_default,
                       help=f"preset(s) {', '.join(metrics.PRESETS)}, 'all', or eight reals")
        p.add_argument("--mask", default="quantized")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.set_defaults(func=func)

    p = sub.add_parser("verify", help="run the regression and equivalence checks")
    p.add_argument("--level", choices=("fast", "full"), default="fast")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (channel.WindowError, oracle.OracleSizeError) as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_CERT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
