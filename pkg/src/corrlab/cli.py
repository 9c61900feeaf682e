"""Command-line front door.

Subcommands: validate, make, gamma, morita, fill, subdivide, extend,
selftest.  Flags --eps, --seed, --out and --trace are accepted both before
and after the subcommand.  Values travel as JSON files in the schemas of
the serialize module; everything is deterministic given (seed, eps, input
files).

Exit codes: 0 all checks passed, 1 a validation failed, 2 usage or parse
error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .acceptance import SUITES, _iso_residuals, report_json, run_suite
from .algebra import make_star_hom
from .bicategory import equivalence_inverse, gamma_of_hom
from .errors import (
    CorrLabError,
    DimensionTooLarge,
    ParseError,
    SchemaError,
    ValidationError,
)
from .extension import K0Simplex, K0Oracle, NCorrOracle, extend_bar_G, gamma_functor, k0_functor
from .generators import (
    random_algebra,
    random_correspondence,
    random_simplex,
    random_unital_hom,
)
from .linalg import frob
from .modules import (
    CorrIso,
    Correspondence,
    HilbertModule,
    identity_corr,
    corr_close,
    iso_distance,
    left_unitor,
    right_unitor,
    make_correspondence,
)
from .algebra import FdCstarAlgebra, StarHom, make_algebra
from .nerve import HornSpec, NCorrSimplex, pentagon_residual, fill_inner_horn, fill_special_outer_horn
from .serialize import (
    corr_to_json,
    hom_to_json,
    iso_to_json,
    algebra_to_json,
    simplex_to_json,
    load_value,
    value_to_json,
)
from .subdivision import subdivision_functor

_CLI_MAX_N = 3


def _emit(doc: dict, out) -> None:
    text = json.dumps(doc)
    if out:
        with open(out, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# validate: one line per invariant, residuals included


def _line(label: str, ok: bool, residual=None) -> bool:
    tail = "" if residual is None else f" (residual {residual:.3e})"
    print(f"{label}: {'ok' if ok else 'FAIL'}{tail}")
    return ok


def _hom_checks(phi: StarHom, eps: float) -> bool:
    m = phi.matrix
    ps = phi.src.adjoint_perm()
    pd = phi.dst.adjoint_perm()
    r_star = frob(m[:, ps] - m.conj()[pd, :])
    ok = _line("star-preserving", r_star <= eps, r_star)
    r_mult = 0.0
    for p, i, a, b in phi.src.basis_triples():
        x = phi.src.matrix_unit(i, a, b)
        fx = phi.apply(x)
        for q, i2, c, d in phi.src.basis_triples():
            y = phi.src.matrix_unit(i2, c, d)
            lhs = phi.apply(x @ y)
            rhs = fx @ phi.apply(y)
            r_mult = max(r_mult, (lhs - rhs).norm())
    ok = _line("multiplicative", r_mult <= eps, r_mult) and ok
    print(f"unital: {phi.unital}")
    return ok


def _corr_checks(c: Correspondence, eps: float) -> bool:
    ok = _line("left action unital", c.lam.unital)
    try:
        make_star_hom(c.src, c.module.compacts, c.lam.matrix, eps=eps)
        ok = _line("left action is a star-hom", True) and ok
    except ValidationError as err:
        print(f"left action is a star-hom: FAIL ({err})")
        ok = False
    return ok


def _iso_checks(u: CorrIso, eps: float) -> bool:
    r1, r2, r3 = _iso_residuals(u)
    ok = _line("unitary", max(r1, r2) <= eps, max(r1, r2))
    return _line("intertwining", r3 <= eps, r3) and ok


def _simplex_checks(s: NCorrSimplex, eps: float) -> bool:
    n = s.n
    r_unit = 0.0
    for i in range(n + 1):
        if not corr_close(s.edges[(i, i)], identity_corr(s.algebras[i]), eps):
            return _line("identity edges", False)
        for k in range(i, n + 1):
            r_unit = max(r_unit, iso_distance(s.cells[(i, i, k)], left_unitor(s.tp(i, i, k), eps=eps)))
            r_unit = max(r_unit, iso_distance(s.cells[(i, k, k)], right_unitor(s.tp(i, k, k), eps=eps)))
    ok = _line("unit cells", r_unit <= eps, r_unit)
    worst, where = 0.0, None
    for i in range(n + 1):
        for j in range(i, n + 1):
            for k in range(j, n + 1):
                for l in range(k, n + 1):
                    r = pentagon_residual(s, i, j, k, l)
                    if r > worst:
                        worst, where = r, (i, j, k, l)
    if worst > eps:
        print(f"pentagon: FAIL at {where} (residual {worst:.3e})")
        return False
    return _line("pentagon", True, worst) and ok


def cmd_validate(args) -> int:
    value = load_value(args.path, eps=args.eps, validate=False)
    kind = type(value).__name__
    print(f"parsed: {kind}")
    if isinstance(value, FdCstarAlgebra):
        ok = _line("block shape", True)
    elif isinstance(value, StarHom):
        ok = _hom_checks(value, args.eps)
    elif isinstance(value, HilbertModule):
        ok = _line("module shape", True)
    elif isinstance(value, Correspondence):
        ok = _corr_checks(value, args.eps)
    elif isinstance(value, CorrIso):
        ok = _iso_checks(value, args.eps)
    elif isinstance(value, NCorrSimplex):
        ok = _simplex_checks(value, args.eps)
    elif isinstance(value, HornSpec):
        ok = True
        for j in sorted(value.faces):
            print(f"face {j}:")
            ok = _simplex_checks(value.faces[j], args.eps) and ok
    else:
        raise SchemaError(f"no checks for {kind}")
    print("all invariants pass" if ok else "validation failed")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# construction commands


def cmd_make(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "algebra":
        if args.blocks:
            a = make_algebra([int(x) for x in args.blocks.split(",")], args.label)
        else:
            a = random_algebra(rng, label=args.label)
        _emit(algebra_to_json(a), args.out)
    elif args.kind == "hom":
        src = load_value(args.src, eps=args.eps) if args.src else random_algebra(rng)
        if not isinstance(src, FdCstarAlgebra):
            raise SchemaError("--src must be an algebra file")
        _emit(hom_to_json(random_unital_hom(src, rng, max_mult=args.max_mult)), args.out)
    elif args.kind == "corr":
        src = load_value(args.src, eps=args.eps) if args.src else random_algebra(rng)
        dst = load_value(args.dst, eps=args.eps) if args.dst else random_algebra(rng)
        if not (isinstance(src, FdCstarAlgebra) and isinstance(dst, FdCstarAlgebra)):
            raise SchemaError("--src and --dst must be algebra files")
        _emit(corr_to_json(random_correspondence(src, dst, rng)), args.out)
    elif args.kind == "simplex":
        if args.n > _CLI_MAX_N:
            raise DimensionTooLarge(f"simplex dimension is capped at {_CLI_MAX_N}")
        s = random_simplex(rng, args.n, twist=args.twist, max_mult=args.max_mult)
        _emit(simplex_to_json(s), args.out)
    return 0


def cmd_gamma(args) -> int:
    phi = load_value(args.hom, eps=args.eps)
    if not isinstance(phi, StarHom):
        raise SchemaError(f"{args.hom}: expected a star_hom file")
    _emit(corr_to_json(gamma_of_hom(phi, eps=args.eps)), args.out)
    return 0


def cmd_morita(args) -> int:
    corr = load_value(args.module, eps=args.eps)
    if not isinstance(corr, Correspondence):
        raise SchemaError(f"{args.module}: expected a correspondence file")
    w = equivalence_inverse(corr, eps=args.eps)
    _emit(
        {
            "inverse": corr_to_json(w.inverse),
            "counit_left": iso_to_json(w.counit_left),
            "counit_right": iso_to_json(w.counit_right),
        },
        args.out,
    )
    return 0


def cmd_fill(args) -> int:
    horn = load_value(args.horn, eps=args.eps)
    if not isinstance(horn, HornSpec):
        raise SchemaError(f"{args.horn}: expected a horn file")
    if 0 < horn.k < horn.n:
        filled = fill_inner_horn(horn, eps=args.eps)
    elif horn.k == horn.n:
        filled = fill_special_outer_horn(horn, eps=args.eps)
    else:
        raise SchemaError("only inner horns and final-vertex outer horns can be filled")
    _emit(simplex_to_json(filled), args.out)
    return 0


def cmd_subdivide(args) -> int:
    s = load_value(args.simplex, eps=args.eps)
    if not isinstance(s, NCorrSimplex):
        raise SchemaError(f"{args.simplex}: expected an ncorr_simplex file")
    if args.n is not None and args.n != s.n:
        raise SchemaError(f"--n {args.n} does not match the simplex dimension {s.n}")
    if s.n > _CLI_MAX_N:
        raise DimensionTooLarge(f"subdivision is capped at n = {_CLI_MAX_N} here")
    sd = subdivision_functor(s, eps=args.eps)
    doc = {
        "vertices": [list(sub) for sub in sd.subsets],
        "algebras": [algebra_to_json(sd.algebra(sub)) for sub in sd.subsets],
        "homs": [
            {"s": list(a), "t": list(b), "hom": hom_to_json(sd.hom(a, b))}
            for a in sd.subsets
            for b in sd.subsets
            if set(a) <= set(b)
        ],
    }
    _emit(doc, args.out)
    return 0


def _k0_to_json(s: K0Simplex) -> dict:
    return {
        "ranks": list(s.ranks),
        "edges": [
            {"i": i, "j": j, "matrix": [[int(x) for x in row] for row in m]}
            for (i, j), m in sorted(s.mats.items())
        ],
    }


def cmd_extend(args) -> int:
    s = load_value(args.simplex, eps=args.eps)
    if not isinstance(s, NCorrSimplex):
        raise SchemaError(f"{args.simplex}: expected an ncorr_simplex file")
    pairs = {"k0": "k0nerve", "gamma": "ncorr"}
    if pairs[args.functor] != args.target:
        raise SchemaError(f"functor {args.functor} extends over target {pairs[args.functor]}")
    if args.functor == "k0":
        F, D = k0_functor(), K0Oracle()
    else:
        F, D = gamma_functor(eps=args.eps), NCorrOracle(eps=args.eps)
    ext = extend_bar_G(s, F, D, {}, guided=args.guided, eps=args.eps)
    top = ext.top()
    if args.trace:
        fills = [
            {
                "chain": e["chain"],
                "horn": list(e["horn"]),
                "kind": e["kind"],
                "guided": e["guided"],
                "certificate": e["certificate"],
            }
            for e in ext.trace
        ]
        with open(args.trace, "w") as f:
            json.dump({"simplex_dim": s.n, "fills": fills}, f)
            f.write("\n")
    _emit(_k0_to_json(top) if isinstance(top, K0Simplex) else simplex_to_json(top), args.out)
    return 0


def cmd_selftest(args) -> int:
    names = args.suite or list(SUITES)
    for name in names:
        if name not in SUITES:
            raise SchemaError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    reports = []
    for name in names:
        r = run_suite(name, seed=args.seed, eps=args.eps)
        reports.append(r)
        print(
            f"{name}: {'pass' if r.ok else 'FAIL'}"
            f" ({len(r.cases)} cases, worst residual {r.worst:.3e}, {r.seconds:.1f}s)",
            file=sys.stderr,
        )
    _emit(report_json(reports, seed=args.seed, eps=args.eps), args.out)
    return 0 if all(r.ok for r in reports) else 1


# ---------------------------------------------------------------------------
# wiring


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps", type=float, default=argparse.SUPPRESS,
                        help="residual tolerance (default 1e-9)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="generator seed (default 42)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="write JSON output here")
    common.add_argument("--trace", default=argparse.SUPPRESS, help="write a fill trace here")

    p = argparse.ArgumentParser(prog="corrlab", parents=[common],
                                description="correspondence nerve toolkit")
    p.set_defaults(eps=1e-9, seed=42, out=None, trace=None)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common], help="check every invariant of a JSON file")
    v.add_argument("path", nargs="?", help="file to check")
    v.add_argument("--simplex", dest="simplex_path", help="alias for the positional path")
    v.set_defaults(fn=cmd_validate)

    m = sub.add_parser("make", parents=[common], help="emit a seeded random value")
    m.add_argument("kind", choices=["algebra", "hom", "corr", "simplex"])
    m.add_argument("--blocks", help="algebra blocks, e.g. 2,1")
    m.add_argument("--label", default="")
    m.add_argument("--src", help="source algebra file (hom, corr)")
    m.add_argument("--dst", help="target algebra file (corr)")
    m.add_argument("--n", type=int, default=2, help="simplex dimension")
    m.add_argument("--twist", action="store_true", help="conjugate an edge off the chain image")
    m.add_argument("--max-mult", type=int, default=1, dest="max_mult")
    m.set_defaults(fn=cmd_make)

    g = sub.add_parser("gamma", parents=[common], help="correspondence of a star-hom")
    g.add_argument("--hom", required=True)
    g.set_defaults(fn=cmd_gamma)

    mo = sub.add_parser("morita", parents=[common], help="inverse and counits of an equivalence")
    mo.add_argument("--module", required=True, help="correspondence file")
    mo.set_defaults(fn=cmd_morita)

    f = sub.add_parser("fill", parents=[common], help="fill a horn file")
    f.add_argument("--horn", required=True)
    f.set_defaults(fn=cmd_fill)

    sd = sub.add_parser("subdivide", parents=[common], help="vertex algebras and connecting homs")
    sd.add_argument("--simplex", required=True)
    sd.add_argument("--n", type=int, default=None, help="expected simplex dimension")
    sd.set_defaults(fn=cmd_subdivide)

    e = sub.add_parser("extend", parents=[common], help="run the extension engine on a simplex")
    e.add_argument("--simplex", required=True)
    e.add_argument("--functor", choices=["k0", "gamma"], required=True)
    e.add_argument("--target", choices=["k0nerve", "ncorr"], required=True)
    e.add_argument("--guided", action="store_true")
    e.set_defaults(fn=cmd_extend)

    st = sub.add_parser("selftest", parents=[common], help="run the acceptance sweeps")
    st.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    st.set_defaults(fn=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.fn is cmd_validate:
        args.path = args.path or getattr(args, "simplex_path", None)
        if not args.path:
            print("validate: a file path is required", file=sys.stderr)
            return 2
    try:
        return args.fn(args)
    except (ParseError, SchemaError, DimensionTooLarge) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except CorrLabError as err:
        print(f"validation error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
