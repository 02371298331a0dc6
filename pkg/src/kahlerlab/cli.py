"""Command-line front end: every verification as a subcommand with a JSON report.

The JSON report goes to stdout (or ``--json PATH``) and a short table to
stderr. Exit codes: 0 pass, 2 numeric failure, 3 numerically inconclusive,
64 usage error. Identical flags give byte-identical JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import catalog, geometry, kernel
from .invariants import InvariantError, poly_to_json, rho
from .transgression import TransgressionError, euler_lagrange_check

SCHEMA = 1
EXIT_PASS, EXIT_FAIL, EXIT_UNSTABLE, EXIT_USAGE = 0, 2, 3, 64

# documented thresholds for the variational check, keyed by degree k
EL_THRESHOLDS = {1: 1e-5, 2: 1e-3}
EL_DEFAULT_THRESHOLD = 1e-3
RICHARDSON_TOL = 1e-6

CHAR_TOLERANCES = {("cp1", "c1"): 1e-8}
CHAR_DEFAULT_TOL = 1e-6
CLASS_ALIASES = {"tr1": "c1", "c1^2": "c1c1", "tr1^2": "c1c1", "tr1tr1": "c1c1"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _check(name: str, value: float, tol: float, passed: bool, **extra) -> dict:
    return dict({"name": name, "value": value, "tol": tol, "passed": bool(passed)}, **extra)


def _report(sub: str, params: dict, checks: list, **extra) -> dict:
    return dict(
        {"schema": SCHEMA, "subcommand": sub, "parameters": params, "checks": checks, "passed": all(c["passed"] for c in checks)},
        **extra,
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify_identities(args) -> tuple:
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    if args.tol < 0:
        raise UsageError("--tol must be non-negative")
    try:
        rows = catalog.identity_table(args.dim, args.samples, args.seed, args.tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    checks = [_check(f'{r["check"]} (dim {r["dim"]})', r["value"], r["tol"], r["passed"]) for r in rows]
    params = {"dim": args.dim, "samples": args.samples, "seed": args.seed, "tol": args.tol}
    rep = _report("verify-identities", params, checks)
    return rep, EXIT_PASS if rep["passed"] else EXIT_FAIL


def cmd_kernel_dim(args) -> tuple:
    if args.k < 1 or args.dim < 1:
        raise UsageError("--k and --dim must be positive")
    if args.valued == "tensor" and args.dim < args.k + 1:
        raise UsageError("tensor-valued kernels need --dim > --k")
    if args.dim < args.k:
        raise UsageError("--dim must be at least --k")
    params = {"k": args.k, "dim": args.dim, "valued": args.valued, "include_order3": args.include_order3, "seed": args.seed}
    try:
        rep = kernel.verify_xi_spans(args.k, args.dim, args.valued, args.include_order3, args.seed)
    except kernel.RankInstabilityError as exc:
        return _report("kernel-dim", params, [], passed=False, inconclusive=str(exc)), EXIT_UNSTABLE
    patterns = kernel.enumerate_patterns(args.k, args.valued, args.include_order3)
    checks = [_check("kernel dimension equals rho(k)", rep.kernel_dim, rep.rho, rep.kernel_dim == rep.rho)]
    for label, r in sorted(rep.residuals.items()):
        checks.append(_check(f"membership residual {label}", r, 1e-8, r < 1e-8))
    for label, r in sorted(rep.restricted_residuals.items()):
        checks.append(_check(f"restricted residual {label}", r, 1e-8, r < 1e-8))
    if rep.order3_coefficient is not None:
        checks.append(_check("order-3 coefficient", rep.order3_coefficient, 1e-8, rep.order3_coefficient < 1e-8))
    out = _report(
        "kernel-dim",
        params,
        checks,
        patterns=[p.label() for p in patterns],
        pattern_count=rep.pattern_count,
        rank_full=rep.rank_full,
        rank_restricted=rep.rank_restricted,
        kernel_dim=rep.kernel_dim,
        rho=rho(args.k),
        singular_values=rep.singular_values,
    )
    return out, EXIT_PASS if out["passed"] else EXIT_FAIL


def _el_setup(args):
    m, k = args.dim, args.k
    if m < 2 or k < 1 or k + 1 > m:
        raise UsageError("need --dim >= 2 and 1 <= --k < --dim")
    return geometry.variation_experiment(m, args.seed, args.model, args.grid, args.zero_variation)


def cmd_euler_lagrange(args) -> tuple:
    if args.step <= 0:
        raise UsageError("--step must be positive")
    if args.grid is not None and args.grid < 2:
        raise UsageError("--grid must be at least 2")
    try:
        S = geometry.class_polynomial(args.poly, args.dim)
    except geometry.GeometryError as exc:
        raise UsageError(str(exc)) from None
    if S.k != args.k:
        raise UsageError(f"--poly {args.poly} has degree {S.k}, not --k {args.k}")
    model, variation, grid = _el_setup(args)
    rep = euler_lagrange_check(S, args.k, model, variation, grid, step=args.step)
    tol = EL_THRESHOLDS.get(args.k, EL_DEFAULT_THRESHOLD)
    err = rep.details["scale_normalized_err"] if rep.degenerate else rep.rel_err
    name = "scale-normalized error (degenerate: both sides vanish)" if rep.degenerate else "relative error"
    checks = [_check(name, err, tol, err < tol)]
    richardson = rep.details["halving_change"]
    rtol = RICHARDSON_TOL * max(abs(rep.lhs), rep.scale, 1e-300)
    params = {"dim": args.dim, "k": args.k, "poly": args.poly, "grid": grid.describe(), "step": args.step, "seed": args.seed, "model": args.model, "zero_variation": args.zero_variation}
    out = _report("euler-lagrange", params, checks, polynomial=poly_to_json(S), report=rep.to_dict(), richardson_tol=rtol)
    if richardson > rtol:
        out["inconclusive"] = "finite-difference estimates disagree between step and step/2"
        return out, EXIT_UNSTABLE
    return out, EXIT_PASS if out["passed"] else EXIT_FAIL


def cmd_char_number(args) -> tuple:
    try:
        model = geometry.space_model(args.space)
        S = geometry.class_polynomial(args.cls, model.m)
        if S.k != model.m:
            raise UsageError(f"class {args.cls} has degree {S.k} but {args.space} has dimension {model.m}")
        value = geometry.characteristic_number(model, S, normalized=args.normalized)
    except (geometry.GeometryError, InvariantError) as exc:
        raise UsageError(str(exc)) from None
    key = (args.space.lower(), CLASS_ALIASES.get(args.cls.lower(), args.cls.lower()))
    target = None
    if all(f.kind == "torus" for f in model.factors):
        target = 0.0
    elif args.normalized:
        target = geometry.KNOWN_CHARACTERISTIC_NUMBERS.get(key)
    checks = []
    if target is not None:
        tol = CHAR_TOLERANCES.get(key, CHAR_DEFAULT_TOL)
        dev = abs(value - target)
        checks.append(_check("deviation from known value", dev, tol, dev < tol, target=target))
    params = {"space": args.space, "class": args.cls, "normalized": args.normalized}
    volumes = [geometry.factor_volume(f) for f in model.factors]
    out = _report("char-number", params, checks, value=value, polynomial=poly_to_json(S), factor_volumes=volumes)
    return out, EXIT_PASS if out["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kahlerlab", description="Numerical checks of Kähler curvature identities.")
    p.add_argument("--json", metavar="PATH", default="-", help="write the JSON report here (default stdout)")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("verify-identities", help="vanishing, genericity and closed-form checks")
    s.add_argument("--dim", type=int, default=None, help="only the tensor identities at this complex dimension")
    s.add_argument("--samples", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--json", metavar="PATH", default=argparse.SUPPRESS)
    s.set_defaults(func=cmd_verify_identities)

    s = sub.add_parser("kernel-dim", help="dimension of the space of universal identities")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--valued", choices=("scalar", "tensor"), default="scalar")
    s.add_argument("--include-order3", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--json", metavar="PATH", default=argparse.SUPPRESS)
    s.set_defaults(func=cmd_kernel_dim)

    s = sub.add_parser("euler-lagrange", help="first variation of the action against the transgression")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--poly", required=True, help="tr1, tr2, tr1tr1, c1, c2, ...")
    s.add_argument("--grid", type=int, default=None, help="points per periodic direction")
    s.add_argument("--step", type=float, default=1e-4)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--model", choices=("product", "torus"), default="product")
    s.add_argument("--zero-variation", action="store_true")
    s.add_argument("--json", metavar="PATH", default=argparse.SUPPRESS)
    s.set_defaults(func=cmd_euler_lagrange)

    s = sub.add_parser("char-number", help="integral of a top-degree class")
    s.add_argument("--space", required=True, help="cp1, cp2, cp1xcp1, torus2, cp1xtorus1, ...")
    s.add_argument("--class", dest="cls", required=True, help="c1, c1c1, c2, tr1, tr2, tr1tr1")
    s.add_argument("--normalized", action="store_true")
    s.add_argument("--json", metavar="PATH", default=argparse.SUPPRESS)
    s.set_defaults(func=cmd_char_number)
    return p


def _summary(rep: dict, code: int, seconds: float) -> str:
    lines = [f'{rep["subcommand"]}: {"PASS" if code == 0 else {2: "FAIL", 3: "INCONCLUSIVE"}.get(code, "ERROR")} ({seconds:.2f} s)']
    for c in rep["checks"]:
        lines.append(f'  {"ok  " if c["passed"] else "FAIL"} {c["name"]}: {c["value"]:.3e} (tol {c["tol"]:.1e})')
    if "value" in rep:
        lines.append(f'  value = {rep["value"]!r}')
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        start = time.perf_counter()
        rep, code = args.func(args)
    except UsageError as exc:
        print(f"kahlerlab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TransgressionError, geometry.GeometryError) as exc:
        print(f"kahlerlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = json.dumps(rep, sort_keys=True, indent=2)
    if args.json == "-":
        print(text)
    else:
        with open(args.json, "w") as fh:
            fh.write(text + "\n")
    print(_summary(rep, code, time.perf_counter() - start), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
