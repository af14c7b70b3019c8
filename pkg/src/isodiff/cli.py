"""Command-line front end: run, check, limit and transform.

Exit codes: 0 success, 1 an invariant is false, 2 invalid input,
3 genericity abort, 4 a tolerance could not be met.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import checks as suites
from .continuum import (
    EmbeddingConfig,
    limit_compare,
    transform_limit_check,
    unit_shift,
)
from .errors import GenericityError, InconsistencyError, IntegrationError, ValidationError
from .flows import (
    DivisorState,
    check_factor_residuals,
    check_residuals,
    divisor_path,
    factor_path,
    schlesinger_action,
)
from .generate import random_continuous, random_state
from .matpoly import default_groups, eigenvalues, formal_exponents, match_spectrum
from .refactor import Twist
from .serialization import (
    SystemConfig,
    continuous_from_json,
    dumps,
    load_json,
    load_system,
    table_csv,
    trajectory_csv,
    trajectory_json,
)

EXIT_OK, EXIT_FALSE, EXIT_VALIDATION, EXIT_GENERICITY, EXIT_TOLERANCE = 0, 1, 2, 3, 4


def _ints(text):
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text):
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _write(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _system(args) -> SystemConfig:
    """Configured system, or a random one from --seed."""
    if args.system:
        cfg = load_system(args.system)
        if args.variant:
            cfg.variant = args.variant
            Twist.parse(cfg.variant)
    else:
        seed = 0 if args.seed is None else args.seed
        twist = Twist.parse(args.variant or "difference")
        cfg = SystemConfig.from_state(random_state(seed, args.m, args.n, twist), str(twist), seed)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# run

def cmd_run(args) -> int:
    cfg = _system(args)
    tol = cfg.tol()
    target = tuple(args.target) if args.target is not None else (0,) * cfg.n
    if len(target) != cfg.n:
        raise ValidationError(f"target needs {cfg.n} coordinates")
    threshold = args.tol
    if args.mode == "divisor":
        path = divisor_path(cfg.divisor_state(tol), target, tol)
    else:
        path = factor_path(cfg.factor_state(tol), target, tol)
    per_point, worst = {}, {}
    for a, b in zip(path[:-1], path[1:]):
        pair = {_point(a): a, _point(b): b}
        if args.mode == "divisor":
            rep = check_residuals(pair, polynomial_steps=cfg.twist.kind == "difference", tol=tol)
        else:
            rep = check_factor_residuals(pair, tol)
        per_point[_point(b)] = rep
        for name, v in rep.items():
            worst[name] = max(worst.get(name, 0.0), v)
    limits = {name: (threshold if threshold is not None else (1e-6 if name == "spectra" else 1e-8))
              for name in worst}
    failed = sorted(name for name, v in worst.items() if v > limits[name])
    if args.format == "csv":
        text = trajectory_csv(path)
    else:
        text = dumps({
            "mode": args.mode,
            "variant": cfg.variant,
            "target": list(target),
            "system": cfg.to_json(),
            "trajectory": trajectory_json(path, per_point),
            "residual_summary": worst,
            "thresholds": limits,
            "failed": failed,
        })
    _write(text, args.out)
    if failed:
        print(f"residuals above tolerance: {', '.join(failed)}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def _point(s):
    return tuple(s.k) if isinstance(s, DivisorState) else tuple(s.l)


# ---------------------------------------------------------------------------
# check

def cmd_check(args) -> int:
    cfg = _system(args)
    tol = cfg.tol()
    names = suites.SUITES if args.suite == "all" else (args.suite,)
    report = {}
    for name in names:
        if name == "continuum":
            seed = cfg.seed if cfg.seed is not None else (args.seed or 0)
            res = suites.continuum_suite(seed, cfg.m, cfg.n, tol, args.tol)
        else:
            fn = suites.refactor_suite if name == "refactor" else suites.flows_suite
            res = fn(cfg.divisor_state(tol), tol, args.tol)
        report[name] = [c.to_json() for c in res]
    statuses = [c["status"] for res in report.values() for c in res]
    overall = "pass" if all(s == "pass" for s in statuses) else ("fail" if "fail" in statuses else "unreachable")
    _write(dumps({"overall": overall, "suites": report}), args.out)
    for res in report.values():
        for c in res:
            if c["status"] != "pass":
                print(f"{c['status']}: {c['name']} = {c['value']:.3e} > {c['threshold']:.1e}", file=sys.stderr)
    return {"pass": EXIT_OK, "fail": EXIT_FALSE, "unreachable": EXIT_TOLERANCE}[overall]


# ---------------------------------------------------------------------------
# limit

def _continuous(args):
    if args.system:
        obj = load_json(args.system)
        if obj.get("kind") != "continuous":
            raise ValidationError('limit needs a continuous system file ("kind": "continuous")')
        return continuous_from_json(obj)
    return random_continuous(0 if args.seed is None else args.seed, args.m, args.n), None


def cmd_limit(args) -> int:
    csys, y = _continuous(args)
    cfg = EmbeddingConfig(args.epsilon, None if y is None else tuple(y))
    out = {"experiment": args.experiment, "epsilon": args.epsilon, "halvings": args.halvings}
    status = EXIT_OK
    if args.experiment == "conjecture":
        target = args.target if args.target is not None else [0.1 * v for v in ([2, 1] + list(range(3, csys.n + 1)))][:csys.n]
        rows, failures = limit_compare(csys, cfg, target, args.halvings)
        header = ["epsilon", "index", "error"]
        table = [[r.epsilon, r.index, r.error] for r in rows]
        out.update(target=list(map(float, target)), rows=_rows(header, table), rates=_rates(rows),
                   aborts={repr(k): v for k, v in failures.items()})
        if failures:
            status = EXIT_GENERICITY
    elif args.experiment == "elementary":
        rows, _ = transform_limit_check(csys, cfg, args.pole, args.eig, args.row, args.sign, args.halvings)
        header = ["epsilon", "index", "error", "block_R0", "block_R1"]
        table = [[r.epsilon, r.index, r.error, r.block_R0, r.block_R1] for r in rows]
        out.update(pole=args.pole, eig=args.eig, row=args.row, sign=args.sign, rows=_rows(header, table))
    else:
        new = unit_shift(csys, args.pole, args.sign)
        header = ["index", "error"]
        table = []
        for l in range(csys.n):
            expected = csys.B[l] + (args.sign if l == args.pole else 0) * np.eye(csys.m)
            table.append([l, float(np.max(np.abs(new.B[l] - expected)))])
        out.update(pole=args.pole, sign=args.sign, rows=_rows(header, table))
    _write(table_csv(header, table) if args.format == "csv" else dumps(out), args.out)
    return status


def _rows(header, table):
    return [dict(zip(header, row)) for row in table]


def _rates(rows):
    """error(eps) / error(eps / 2) with errors combined over the index."""
    tot = {}
    for r in rows:
        tot[r.epsilon] = np.hypot(tot.get(r.epsilon, 0.0), r.error)
    eps = sorted(tot, reverse=True)
    return [float(tot[a] / tot[b]) for a, b in zip(eps[:-1], eps[1:])]


# ---------------------------------------------------------------------------
# transform

def cmd_transform(args) -> int:
    cfg = _system(args)
    tol = cfg.tol()
    if cfg.twist.kind != "difference":
        raise ValidationError("transform acts on the difference variant only")
    A = cfg.polynomial()
    groups = cfg.groups if cfg.groups is not None else (
        default_groups(A, tol) if cfg.representation == "coefficients" else cfg.divisor_state(tol).spectra())
    roots = np.asarray(groups).ravel()
    kappa = np.asarray(args.kappa if args.kappa is not None else [0] * len(roots), dtype=int)
    delta = np.asarray(args.delta if args.delta is not None else [0] * cfg.m, dtype=int)
    d0 = formal_exponents(A, tol=tol)
    res = schlesinger_action(A, kappa, delta, roots=roots, tol=tol)
    _, root_err = match_spectrum(eigenvalues(res.A, tol), res.roots, tol)
    d1 = formal_exponents(res.A, tol=tol)
    new = SystemConfig(cfg.m, cfg.n, res.A.leading, "coefficients", res.A.coeffs[1:],
                       res.roots.reshape(cfg.n, cfg.m), "difference", cfg.seed, cfg.tolerances)
    cert = {
        "kappa": kappa.tolist(),
        "delta": delta.tolist(),
        "roots_before": roots,
        "roots_after": res.roots,
        "root_shift_error": root_err,
        "exponents_before": d0,
        "exponents_after": d1,
        "exponent_shift_measured": d1 - d0,
        "exponent_shift_error": float(np.max(np.abs(d1 - d0 - delta))),
        "leading_change": float(np.max(np.abs(res.A.leading - A.leading))),
        "moves": [list(m) for m in res.moves],
    }
    _write(dumps({"system": new.to_json(), "certificate": cert}), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isodiff", description="Isomonodromy transformations of linear difference systems.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mn=True):
        sp.add_argument("--system", metavar="PATH", help="JSON system file (default: random system from --seed)")
        sp.add_argument("--seed", type=int, help="seed for a random generic system")
        if mn:
            sp.add_argument("--m", type=int, default=2, help="matrix size of a random system")
            sp.add_argument("--n", type=int, default=2, help="degree / number of poles of a random system")
        sp.add_argument("--out", metavar="PATH", help="output file (default: stdout)")

    r = sub.add_parser("run", help="compute a lattice trajectory")
    common(r)
    r.add_argument("--mode", choices=("divisor", "factor"), default="divisor")
    r.add_argument("--target", type=_ints, help="lattice point k1,...,kn")
    r.add_argument("--variant", help="difference | q=VALUE | autonomous")
    r.add_argument("--tol", type=float, help="threshold for the per-step residuals")
    r.add_argument("--format", choices=("json", "csv"), default="json")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="run invariant suites")
    common(c)
    c.add_argument("--suite", choices=("refactor", "flows", "continuum", "all"), default="all")
    c.add_argument("--variant", help="difference | q=VALUE | autonomous")
    c.add_argument("--tol", type=float, help="replace every check threshold")
    c.set_defaults(func=cmd_check)

    lm = sub.add_parser("limit", help="continuum-limit experiments")
    common(lm)
    lm.add_argument("--experiment", choices=("conjecture", "elementary", "unit-shift"), default="conjecture")
    lm.add_argument("--epsilon", type=float, default=0.1)
    lm.add_argument("--halvings", type=int, default=3)
    lm.add_argument("--target", type=_floats, help="pole displacement x1,...,xn (conjecture)")
    lm.add_argument("--pole", type=int, default=0, help="0-based pole index")
    lm.add_argument("--eig", type=int, default=0, help="0-based index into the sorted residue spectrum")
    lm.add_argument("--row", type=int, default=0, help="0-based exponent index at infinity")
    lm.add_argument("--sign", type=int, choices=(1, -1), default=1)
    lm.add_argument("--format", choices=("json", "csv"), default="csv")
    lm.set_defaults(func=cmd_limit)

    t = sub.add_parser("transform", help="apply a Schlesinger transformation")
    common(t)
    t.add_argument("--kappa", type=_ints, help="root shifts, aligned with the flattened groups")
    t.add_argument("--delta", type=_ints, help="exponent shifts")
    t.set_defaults(func=cmd_transform, variant=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "halvings", 0) is not None and getattr(args, "halvings", 0) < 0:
        parser.error("--halvings must be non-negative")
    start = time.perf_counter()
    try:
        code = args.func(args)
    except GenericityError as exc:
        print(f"genericity abort: {exc}", file=sys.stderr)
        code = EXIT_GENERICITY
    except (IntegrationError, InconsistencyError) as exc:
        print(f"abort: {exc}", file=sys.stderr)
        code = EXIT_GENERICITY
    except (ValidationError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        code = EXIT_VALIDATION
    print(f"[{args.command}] {time.perf_counter() - start:.3f} s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
