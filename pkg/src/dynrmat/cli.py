"""Command-line front end: ``verify``, ``eval`` and ``simulate``.

Exit codes: 0 success, 1 a check failed, 2 usage error, 3 the simulation
halted on a collision.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .coeffield import RatFun, VarSpace
from .identities import UnknownCheck, run_suite, select_checks
from .models import REGISTRY
from .numerics import COLLISION_TOL, CollisionDetected, simulate_rs
from .opalgebra import MatOperator
from .tensoralg import RMat

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_HALT = 0, 1, 2, 3
PARAMS = ("hbar", "gamma")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 already; route the message through UsageError so
    # main() controls the stream and the exit code in one place
    def error(self, message):
        raise UsageError(message)


def parse_n_range(text: str) -> list:
    """``"3"``, ``"2..4"`` or ``"2,4"`` -> list of ranks (all >= 2)."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
            ns = list(range(lo, hi + 1))
        else:
            ns = [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"bad --n value {text!r}") from None
    if not ns:
        raise UsageError(f"empty range {text!r}")
    if min(ns) < 2:
        raise UsageError("N >= 2 required")
    return ns


def parse_sets(items) -> dict:
    """``["hbar=1/2", "gamma=3"]`` (or comma-joined) -> {name: Fraction}."""
    out = {}
    for item in items or ():
        for part in item.split(","):
            if not part:
                continue
            name, sep, val = part.partition("=")
            name = name.strip()
            if not sep or name not in PARAMS:
                raise UsageError(f"--set expects hbar=<rational> or gamma=<rational>, got {part!r}")
            try:
                out[name] = Fraction(val.strip())
            except (ValueError, ZeroDivisionError):
                raise UsageError(f"not a rational number: {val!r}") from None
    return out


def _suite_tags(text: str) -> list:
    return [t.strip() for t in text.split(",") if t.strip()]


# -- verify ------------------------------------------------------------------------------

def _text_table(reports) -> str:
    w = max([len(r.check_id) for r in reports] + [8])
    lines = [f"{'check':<{w}}  n  {'status':<7}  residual  ms"]
    for r in reports:
        lines.append(f"{r.check_id:<{w}}  {r.n}  {r.status:<7}  {r.residual_terms:>8}  {r.elapsed_ms}")
    npass = sum(r.status == "pass" for r in reports)
    nfail = sum(r.status == "fail" for r in reports)
    lines.append(f"{len(reports)} reports: {npass} pass, {nfail} fail, "
                 f"{len(reports) - npass - nfail} skipped")
    return "\n".join(lines)


def cmd_verify(args) -> int:
    ns = parse_n_range(args.n)
    params = parse_sets(args.set)
    tags = _suite_tags(args.suite)
    try:
        select_checks(tags)
    except UnknownCheck as exc:
        raise UsageError(f"unknown suite or check: {exc.args[0]}") from None
    if args.workers is not None and args.workers < 1:
        raise UsageError("--workers must be >= 1")
    reports = run_suite(tags, ns, hbar=params.get("hbar"), gamma=params.get("gamma"),
                        workers=args.workers, seed=args.seed)
    if args.format == "json":
        print(json.dumps([r.to_dict() for r in reports], indent=2))
    else:
        print(_text_table(reports))
    return EXIT_FAIL if any(r.status == "fail" for r in reports) else EXIT_OK


# -- eval --------------------------------------------------------------------------------

def _label(mat: RMat, i: int) -> str:
    n, digits = mat.n, []
    for _ in range(mat.legs):
        i, d = divmod(i, n)
        digits.append(str(d + 1))
    return ("" if n < 10 else ".").join(reversed(digits)) or "1"


def _mat_entries(mat: RMat, prefix: str) -> list:
    return [(f"{prefix}[{_label(mat, r)},{_label(mat, c)}]", str(v))
            for (r, c), v in sorted(mat.entries.items())]


def object_entries(name: str, obj) -> list:
    """Flatten a registry object into ``(label, canonical string)`` pairs."""
    if isinstance(obj, RMat):
        return _mat_entries(obj, name)
    if isinstance(obj, RatFun):
        return [(name, str(obj))]
    if isinstance(obj, MatOperator):
        sym = "S" if obj.flavor == "shift" else "d"
        out = []
        for mono in sorted(obj.terms):
            op = "*".join(f"{sym}{i + 1}^{k}" if k != 1 else f"{sym}{i + 1}"
                          for i, k in enumerate(mono) if k) or "1"
            out.extend(_mat_entries(obj.terms[mono], f"{name}<{op}>"))
        return out
    if isinstance(obj, dict):
        out = []
        for key in sorted(obj):
            idx = "".join(str(k + 1) for k in key)
            out.extend(object_entries(f"{name}{idx}", obj[key]))
        return out
    if isinstance(obj, (list, tuple)):
        return [(f"{name}[{i + 1}]", str(v)) for i, v in enumerate(obj)]
    raise TypeError(f"cannot print {type(obj).__name__}")


def cmd_eval(args) -> int:
    entry = REGISTRY.get(args.name)
    if entry is None:
        raise UsageError(f"unknown object {args.name!r}; known: {', '.join(REGISTRY)}")
    if args.n < 2:
        raise UsageError("N >= 2 required")
    params = parse_sets(args.set)
    space = VarSpace(args.n, flavor=entry.flavor, **params)
    rows = object_entries(entry.name, entry.build(space))
    if args.format == "json":
        doc = {"object": entry.name, "n": args.n, "flavor": entry.flavor,
               "entries": [{"index": k, "value": v} for k, v in rows]}
        print(json.dumps(doc, indent=2))
    else:
        for k, v in rows:
            print(f"{k} = {v}")
    return EXIT_OK


# -- simulate ----------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.n < 2:
        raise UsageError("N >= 2 required")
    if not args.dt > 0 or not args.horizon > 0:
        raise UsageError("--dt and --horizon must be positive")
    q0 = p0 = None
    if args.q0 or args.p0:
        if not (args.q0 and args.p0):
            raise UsageError("--q0 and --p0 go together")
        try:
            q0 = [float(x) for x in args.q0.split(",")]
            p0 = [float(x) for x in args.p0.split(",")]
        except ValueError:
            raise UsageError("--q0/--p0 take comma-separated floats") from None
        if len(q0) != args.n or len(p0) != args.n:
            raise UsageError(f"--q0/--p0 need {args.n} values")
    code = EXIT_OK
    try:
        traj = simulate_rs(args.n, args.gamma, q0=q0, p0=p0, dt=args.dt, horizon=args.horizon,
                           seed=args.seed, record_every=args.record_every, collision_tol=args.collision_tol)
        msg = f"ok: N={args.n} steps={len(traj.t) - 1} max_drift={max(traj.max_drift()):.3e}"
    except CollisionDetected as exc:
        traj, code = exc.trajectory, EXIT_HALT
        msg = f"halted: {exc}"
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = traj.to_csv()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(msg, file=sys.stderr)
    return code


# -- entry point -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dynrmat", description="Exact identity checks for dynamical R-matrices "
                "and numerical checks of the Ruijsenaars-Schneider flow.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    v = sub.add_parser("verify", help="run identity checks")
    v.add_argument("--n", default="2..3", help="rank, range a..b or list a,b (default 2..3)")
    v.add_argument("--suite", default="all", help="comma-separated tags or check ids (default all)")
    v.add_argument("--format", choices=("json", "text"), default="text")
    v.add_argument("--set", action="append", metavar="NAME=VALUE",
                   help="specialize hbar or gamma to a rational; repeatable")
    v.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    v.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $DYNRMAT_WORKERS or CPU count)")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("eval", help="print the entries of a model object")
    e.add_argument("name")
    e.add_argument("--n", type=int, default=2)
    e.add_argument("--set", action="append", metavar="NAME=VALUE")
    e.add_argument("--format", choices=("json", "text"), default="text")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("simulate", help="integrate the classical RS flow, CSV output")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--horizon", type=float, default=10.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--q0", help="comma-separated initial positions (increasing)")
    s.add_argument("--p0", help="comma-separated initial momenta")
    s.add_argument("--record-every", type=int, default=1)
    s.add_argument("--collision-tol", type=float, default=COLLISION_TOL)
    s.add_argument("--out", help="CSV path (default: stdout)")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"dynrmat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
