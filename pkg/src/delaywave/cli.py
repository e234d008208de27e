"""Deterministic command-line front end.

Subcommands mirror the analysis modules: ``region`` (closed-form window plus
oracle-bisected boundaries), ``roots`` (isolate in a rectangle), ``count``
(disk or strip root counts), ``sweep-eps`` (delay-perturbation table),
``simulate`` (energy trace plus spectral cross-check), ``critical``
(critical gain set).  Output is CSV (header row, 12 significant digits) or
JSON with a versioned ``schema`` field.  Exit codes: 0 success, 1 usage
error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import List, Optional

import numpy as np

from . import chareq, contour, pdesim, polyform, regions, robustness
from .chareq import CharKind, DelayGains, DelaySystem, Rational

__all__ = ["main"]

SCHEMA = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(x) -> str:
    """Shortest float form capped at 12 significant digits."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def _parse_tau(args) -> tuple:
    """Returns (tau, tau_rational or None)."""
    if getattr(args, "tau", None):
        rat = Rational.from_string(args.tau)
        return rat.value, rat
    if getattr(args, "tau_real", None) is not None:
        if getattr(args, "treat_as_irrational", False):
            return args.tau_real, None
        rat = chareq.rational_from_float(args.tau_real)
        return args.tau_real, rat
    raise UsageError("provide --tau M/N or --tau-real X")


def _kind(name: str) -> CharKind:
    return {"cascade": CharKind.CASCADE_EQUAL_GAINS, "direct": CharKind.DIRECT_DELAY_FEEDBACK}[name]


def _open_out(path: Optional[str]):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_csv(path, header, rows):
    fh, close = _open_out(path)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    finally:
        if close:
            fh.close()


def _write_json(path, payload):
    fh, close = _open_out(path)
    try:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    finally:
        if close:
            fh.close()


def _jsonable(x):
    if x is None or isinstance(x, (bool, int, str)):
        return x
    return float(fmt(x))


def cmd_region(args) -> int:
    tau, rat = _parse_tau(args)
    kind = _kind(args.kind)
    closed = regions.stability_region(tau, kind)
    if args.treat_as_irrational:
        bisected = None
    else:
        bisected = regions.region_boundaries_bisect(tau, kind, tol=args.tol, tau_rational=rat)
    scan_rows: Optional[List] = None
    if args.scan:
        try:
            lo, hi, step = (float(v) for v in args.scan.split(":"))
        except ValueError:
            raise UsageError(f"--scan expects lo:hi:step, got {args.scan!r}")
        scan_rows = []
        for i in range(int(round((hi - lo) / step)) + 1):
            c = round(lo + i * step, 12)
            sysd = regions._system_for(kind, c, tau, rat)
            verdict = regions.classify(sysd, treat_as_irrational=args.treat_as_irrational)
            scan_rows.append((c, verdict.state.value))
    if args.format == "json":
        payload = {
            "schema": SCHEMA,
            "command": "region",
            "kind": args.kind,
            "tau": str(rat) if rat else _jsonable(tau),
            "closed_form": {
                "empty": closed.empty,
                "lower": None if closed.empty else _jsonable(closed.lower),
                "upper": None if closed.empty else _jsonable(closed.upper),
            },
            "bisected": None
            if bisected is None
            else {"lower": _jsonable(bisected[0]), "upper": _jsonable(bisected[1])},
            "scan": None if scan_rows is None else [{"c": _jsonable(c), "state": s} for c, s in scan_rows],
        }
        _write_json(args.output, payload)
    else:
        if scan_rows is not None:
            _write_csv(args.output, ["c", "state"], scan_rows)
        else:
            _write_csv(
                args.output,
                ["empty", "lower", "upper", "bisected_lower", "bisected_upper"],
                [
                    (
                        closed.empty,
                        None if closed.empty else closed.lower,
                        None if closed.empty else closed.upper,
                        None if bisected is None else bisected[0],
                        None if bisected is None else bisected[1],
                    )
                ],
            )
    return 0


def cmd_roots(args) -> int:
    tau, rat = _parse_tau(args)
    sysd = DelaySystem(DelayGains(args.c1, args.c2), tau, rat, CharKind.CASCADE_FULL)
    rect = contour.ComplexRect(*args.rect)
    roots = contour.isolate_and_refine(sysd, rect)
    rows = [(r.lam.real, r.lam.imag, r.residual, r.multiplicity) for r in roots]
    _write_csv(args.output, ["re", "im", "residual", "multiplicity"], rows)
    return 0


def cmd_count(args) -> int:
    tau, rat = _parse_tau(args)
    sysd = chareq.equal_gain_system(args.c, tau, rat)
    if args.disk:
        if rat is None:
            raise UsageError("--disk needs a rational delay")
        count = contour.count_in_disk(polyform.reduce_to_polynomial(sysd))
    else:
        a, b = args.strip
        count = contour.count_in_strip(sysd, int(a), int(b))
    if args.format == "json":
        _write_json(args.output, {"schema": SCHEMA, "command": "count", "count": count})
    else:
        fh, close = _open_out(args.output)
        try:
            fh.write(f"{count}\n")
        finally:
            if close:
                fh.close()
    return 0


def cmd_sweep_eps(args) -> int:
    eps_list = [float(v) for v in args.eps.split(",")]
    base = float(args.base)
    l = int(round(base / 2)) if base else None
    template = robustness.PerturbationCase(base, eps_list[0], args.c, l)
    rows = robustness.sweep(template, eps_list)
    _write_csv(
        args.output,
        ["eps", "lambda_eps", "eps_lambda_eps", "low_freq_clear", "error"],
        [(r.eps, r.lambda_eps, r.eps_lambda_eps, r.low_freq_clear, r.error or "") for r in rows],
    )
    return 0


def cmd_simulate(args) -> int:
    try:
        rat = Rational.from_string(args.tau)
    except ValueError:
        raise UsageError(
            f"simulate needs an exact rational delay M/N (got {args.tau!r}); "
            "pick a convergent such as 41/20 for 2.05 - interpolating a "
            "non-commensurate delay would add artificial dissipation"
        )
    try:
        ic = pdesim.named_ic(args.ic)
    except ValueError as exc:
        raise UsageError(str(exc))
    config = pdesim.SimConfig(
        rat,
        DelayGains(args.c1, args.c2),
        args.K,
        args.T,
        ic,
        args.sample_every,
    )
    trace = pdesim.simulate(config)
    _write_csv(args.output, ["t", "E"], list(trace.samples))
    if args.dump_state:
        _write_json(args.dump_state, pdesim.state_dict(trace.final_state))
    if args.c1 == args.c2:
        sysd = chareq.equal_gain_system(args.c1, rat.value, rat)
    else:
        sysd = DelaySystem(DelayGains(args.c1, args.c2), rat.value, rat, CharKind.CASCADE_FULL)
    s_abs = contour.spectral_abscissa(sysd)
    two_s = None if s_abs == contour.NO_ROOTS else 2.0 * s_abs
    t0, t1 = pdesim.default_fit_window(two_s or 0.0, args.T)
    rate = pdesim.decay_rate(trace, t0, t1)
    fitted = None if rate == pdesim.EXTINCT else rate
    gap = None
    if fitted is not None and two_s not in (None, 0.0):
        gap = abs(fitted - two_s) / abs(two_s)
    summary = {
        "schema": SCHEMA,
        "command": "simulate",
        "fitted_rate": _jsonable(fitted),
        "two_s": _jsonable(two_s),
        "relative_gap": _jsonable(gap),
        "extinct": rate == pdesim.EXTINCT,
        "fit_window": [_jsonable(t0), _jsonable(t1)],
    }
    if args.output not in (None, "-"):
        _write_json("-", summary)
    return 0


def cmd_critical(args) -> int:
    cs = regions.critical_set_E(args.m, args.n, validate=args.validate)
    _write_csv(args.output, ["c"], [(v,) for v in cs.values])
    return 0


def build_parser() -> _Parser:
    p = _Parser(prog="delaywave", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, tau=True, fmt=False):
        if fmt:
            sp.add_argument("--format", choices=["csv", "json"], default=sp.get_default("format") or "csv")
        sp.add_argument("--output", default="-", help="output path, '-' for stdout")
        if tau:
            sp.add_argument("--tau", help="rational delay M/N")
            sp.add_argument("--tau-real", type=float, help="delay as a decimal")
            sp.add_argument(
                "--treat-as-irrational",
                action="store_true",
                help="use the two-delay criterion instead of the rational reduction",
            )

    sp = sub.add_parser("region", help="stability window for the gain")
    sp.set_defaults(func=cmd_region, format="json")
    add_common(sp, fmt=True)
    sp.add_argument("--kind", choices=["cascade", "direct"], default="cascade")
    sp.add_argument("--scan", help="lo:hi:step grid of gains to classify (use --scan=-1:1:0.1 for negative lo)")
    sp.add_argument("--tol", type=float, default=1e-7, help="bisection tolerance")

    sp = sub.add_parser("roots", help="characteristic roots in a rectangle")
    sp.set_defaults(func=cmd_roots)
    add_common(sp)
    sp.add_argument("--c1", type=float, required=True)
    sp.add_argument("--c2", type=float, required=True)
    sp.add_argument("--rect", type=float, nargs=4, required=True, metavar=("RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"))

    sp = sub.add_parser("count", help="root counts in the disk or a strip")
    sp.set_defaults(func=cmd_count)
    add_common(sp, fmt=True)
    sp.add_argument("--c", type=float, required=True)
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--disk", action="store_true")
    group.add_argument("--strip", type=int, nargs=2, metavar=("A", "B"))

    sp = sub.add_parser("sweep-eps", help="delay-perturbation sweep")
    sp.set_defaults(func=cmd_sweep_eps)
    add_common(sp, tau=False)
    sp.add_argument("--base", type=float, required=True, help="0 or an even integer 2l")
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--eps", required=True, help="comma-separated perturbations")

    sp = sub.add_parser("simulate", help="energy trace of the exact simulator")
    sp.set_defaults(func=cmd_simulate)
    add_common(sp, tau=False)
    sp.add_argument("--tau", required=True, help="rational delay M/N")
    sp.add_argument("--c1", type=float, required=True)
    sp.add_argument("--c2", type=float, required=True)
    sp.add_argument("--K", type=int, default=40, help="cells per unit length")
    sp.add_argument("--T", type=float, default=40.0, help="final time")
    sp.add_argument("--ic", default="mixed", help="named initial condition")
    sp.add_argument("--sample-every", type=float, default=1.0)
    sp.add_argument("--dump-state", help="write the final state as JSON to this path")

    sp = sub.add_parser("critical", help="critical gain set for tau = m/n")
    sp.set_defaults(func=cmd_critical)
    add_common(sp, tau=False)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--validate", action="store_true", help="certify and scan for completeness")

    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, chareq.NearSpectrum) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
