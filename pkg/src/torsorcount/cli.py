"""Command-line entry point: torsorcount <command> [options]."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from decimal import Decimal, InvalidOperation

from ._parallel import THREADS_ENV, default_workers
from .archimedean import MONTE_CARLO, omega_inf, omega_inf_crosscheck
from .arith import as_fraction, fmt_fraction, is_prime
from .counting import (DEFAULT_WORK_BUDGET, ConsistencyError, FiberKey, WorkBudgetExceeded,
                       enumerate_count, naive_count)
from .invariants import Boundary, Setup, invariants
from .local_densities import MAX_BRUTE_P, omega_p, x_count_closed_form
from .predict import compare, fiber_report, leading_constant

COMMANDS = ("count", "constants", "compare", "fp-check", "fiber")


class UsageError(Exception):
    pass


def parse_bound(text: str) -> int:
    """A positive integer height bound; exponent forms like 1e6 are allowed if exact."""
    try:
        v = Decimal(text.strip())
    except InvalidOperation as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not v.is_finite() or v != v.to_integral_value() or v < 1:
        raise argparse.ArgumentTypeError(f"B must be a positive integer, got {text!r}")
    return int(v)


def parse_bound_list(text: str) -> list[int]:
    return [parse_bound(x) for x in text.split(",") if x.strip()]


def parse_rational(text: str):
    try:
        return as_fraction(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def parse_fiber(text: str) -> FiberKey:
    try:
        return FiberKey.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="torsorcount", allow_abbrev=False,
                description="Integral points of bounded height on a spherical threefold family.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--boundary", choices=[b.value for b in Boundary])
    p.add_argument("--l1", type=parse_rational, help="rational p/q or integer")
    p.add_argument("--l2", type=parse_rational, help="rational p/q or integer")
    p.add_argument("--B", type=parse_bound)
    p.add_argument("--B-list", dest="B_list", type=parse_bound_list, help="comma separated, ascending")
    p.add_argument("--output", choices=("json", "csv"), default="json")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker processes (default from ${THREADS_ENV}, else 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--work-budget", dest="work_budget", type=int, default=DEFAULT_WORK_BUDGET)
    p.add_argument("--p-max", dest="p_max", type=int, default=11)
    p.add_argument("--fiber", type=parse_fiber)
    p.add_argument("--oracle", action="store_true", help="count: also run the naive enumeration")
    p.add_argument("--method", choices=("adaptive", "monte_carlo"), default="adaptive",
                   help="constants: extra omega_inf route to report next to the adaptive one")
    p.add_argument("--samples", type=int, default=10**6, help="constants: Monte Carlo samples")
    p.add_argument("--crosscheck", action="store_true",
                   help="constants: compare W(B) against alpha * omega_inf / a")
    p.add_argument("--timing", action="store_true", help="count: include elapsed seconds")
    return p


def _setup(args) -> Setup:
    missing = [f"--{k}" for k in ("boundary", "l1", "l2") if getattr(args, k) is None]
    if missing:
        raise UsageError(f"{args.command} needs {', '.join(missing)}")
    try:
        return Setup(args.n, Boundary.parse(args.boundary), args.l1, args.l2)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def _bounds(args) -> list[int]:
    if args.B is not None and args.B_list is not None:
        raise UsageError("give --B or --B-list, not both")
    Bs = [args.B] if args.B is not None else args.B_list
    if not Bs:
        raise UsageError(f"{args.command} needs --B or --B-list")
    if Bs != sorted(Bs):
        raise UsageError("--B-list must be ascending")
    return Bs


def _setup_fields(s: Setup) -> dict:
    return {"n": s.n, "boundary": s.boundary.value,
            "l1": fmt_fraction(s.l1), "l2": fmt_fraction(s.l2)}


# --- commands: each returns (header, rows) for tables or a flat dict ----------------


def cmd_count(args, workers):
    s = _setup(args)
    if args.B is None:
        raise UsageError("count needs --B")
    res = enumerate_count(s, args.B, workers)
    out = _setup_fields(s)
    out.update(res.as_dict(timing=args.timing))
    if args.oracle:
        naive = naive_count(s, args.B, args.work_budget, workers)
        if naive.count != res.count:
            raise ConsistencyError(f"closed form {res.count} != naive {naive.count} at B={args.B}")
        out["naive_count"] = naive.count
    return out


def cmd_constants(args, workers):
    s = _setup(args)
    out = _setup_fields(s)
    out.update(invariants(s).as_dict())
    pred = leading_constant(s, workers).as_dict()
    pred.pop("alpha")  # already in the invariant bundle
    out.update(pred)
    if pred["omega_inf"] is not None:
        if args.method == "monte_carlo":
            out["omega_inf_mc"] = omega_inf(s, MONTE_CARLO, args.samples, args.seed, workers).as_dict()
        if args.crosscheck:
            out["crosscheck"] = omega_inf_crosscheck(s, workers=workers).as_dict()
    return out


def cmd_compare(args, workers):
    s = _setup(args)
    rows = [r.as_dict() for r in compare(s, _bounds(args), workers)]
    return ["B", "exact", "predicted", "ratio", "supported"], rows, _setup_fields(s)


def cmd_fp_check(args, workers):
    if args.p_max < 2 or args.p_max > MAX_BRUTE_P:
        raise UsageError(f"--p-max must lie in [2, {MAX_BRUTE_P}]")
    if args.n < 2:
        raise UsageError("n must be >= 2")
    kinds = [Boundary.parse(args.boundary)] if args.boundary else list(Boundary)
    rows = []
    for p in range(2, args.p_max + 1):
        if not is_prime(p):
            continue
        for kind in kinds:
            # omega_p does not involve the polarization
            d = omega_p(Setup(args.n, kind, 1, 1), p)
            rows.append({"p": p, "boundary": kind.value, "x_count": d.x_count,
                         "x_closed_form": x_count_closed_form(p), "u_count": d.u_count,
                         "lambda": d.lambda_exponent, "omega_p": fmt_fraction(d.omega)})
    header = ["p", "boundary", "x_count", "x_closed_form", "u_count", "lambda", "omega_p"]
    return header, rows, {"n": args.n}


def cmd_fiber(args, workers):
    s = _setup(args)
    if args.fiber is None:
        raise UsageError("fiber needs --fiber a:c:z")
    try:
        rows = fiber_report(s, args.fiber, _bounds(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = [{"fiber": str(args.fiber), **r.as_dict()} for r in rows]
    return ["fiber", "B", "exact", "predicted", "ratio", "supported"], out, _setup_fields(s)


HANDLERS = {"count": cmd_count, "constants": cmd_constants, "compare": cmd_compare,
            "fp-check": cmd_fp_check, "fiber": cmd_fiber}


# --- emission --------------------------------------------------------------------------


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if r.get(k) is None else r.get(k) for k in header])
    return buf.getvalue()


def render(args, result) -> str:
    if isinstance(result, dict):
        if args.output == "csv":
            return _csv(["key", "value"], [{"key": k, "value": json.dumps(v) if isinstance(v, list) else v}
                                           for k, v in result.items()])
        return json.dumps(result) + "\n"
    header, rows, meta = result
    if args.output == "csv":
        return _csv(header, rows)
    return json.dumps({**meta, "command": args.command, "rows": rows}) + "\n"


def run(argv=None) -> tuple[int, str]:
    args = build_parser().parse_args(argv)
    workers = args.threads if args.threads is not None else default_workers()
    try:
        if workers < 1:
            raise UsageError("--threads must be >= 1")
        text = render(args, HANDLERS[args.command](args, workers))
    except UsageError as exc:
        print(f"torsorcount: error: {exc}", file=sys.stderr)
        return 2, ""
    except WorkBudgetExceeded as exc:
        print(f"torsorcount: error: {exc}", file=sys.stderr)
        return 2, ""
    except ConsistencyError as exc:
        print(f"torsorcount: consistency failure: {exc}", file=sys.stderr)
        return 1, ""
    return 0, text


def main(argv=None) -> int:
    code, text = run(argv)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
