"""
``ncstable`` command line.

Exit codes: 0 stable (or check passed), 1 unstable (or witness found, or
check failed), 2 indeterminate, 3 input error.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import io
from .core import eval_pencil, eval_poly
from .engine import (
    DEFAULT_WITNESS_BUDGET,
    StabilityCertificate,
    Verdict,
    check_stable,
    find_witness,
)
from .errors import EvalError, InputError
from .generators import random_purely_stable
from .numerics import ToleranceConfig, min_singular_value
from .realization import check_stable_poly, detrep, gen_stable_poly, verify_detrep
from .transforms import check_hurwitz, check_roesser, check_schur, verify_reduced

EXIT_STABLE, EXIT_UNSTABLE, EXIT_INDETERMINATE, EXIT_INPUT = 0, 1, 2, 3
VERDICT_EXIT = {Verdict.STABLE: EXIT_STABLE, Verdict.UNSTABLE: EXIT_UNSTABLE,
                Verdict.INDETERMINATE: EXIT_INDETERMINATE}


def _cfg(args) -> ToleranceConfig:
    return ToleranceConfig.from_env(rank_tol=args.tol_rank, psd_tol=args.tol_psd,
                                    residual_tol=args.tol_residual, sdp_tol=args.tol_sdp)


def _emit(args, payload: dict, lines: list[str]) -> None:
    if getattr(args, "out", None):
        io.write_json(args.out, payload)
    if getattr(args, "json", False):
        print(io.dumps(payload))
    else:
        print("\n".join(lines))


def _report(cert: StabilityCertificate, title: str) -> list[str]:
    lines = [f"{title}: {cert.verdict.value}", f"  reason: {cert.reason}"]
    if cert.stages:
        lines.append(f"  stages: {len(cert.stages)} (kernel dims {[st.V.shape[1] for st in cert.stages]})")
    if cert.triangular is not None:
        lines.append(f"  triangular blocks: {[b.size for b in cert.triangular.blocks]}")
    if cert.witness is not None:
        lines.append(f"  witness ({cert.witness_domain}, n={cert.witness.n}):")
        for j, Xj in enumerate(cert.witness, 1):
            lines.append(f"    X_{j} = {np.array2string(Xj, precision=6)}")
    for key in ("alpha", "relaxation", "reduction", "seed"):
        if key in cert.meta:
            lines.append(f"  {key}: {cert.meta[key]}")
    return lines


def _finish(args, cert: StabilityCertificate, title: str) -> int:
    _emit(args, io.certificate_to_json(cert), _report(cert, title))
    return VERDICT_EXIT[cert.verdict]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_check(args) -> int:
    cfg = _cfg(args)
    obj = io.load_json(args.path)
    if isinstance(obj, dict) and "terms" in obj:
        cert = check_stable_poly(io.poly_from_json(obj), cfg, args.seed, args.witness_budget)
        return _finish(args, cert, "polynomial")
    cert = check_stable(io.pencil_from_json(obj), cfg, args.seed, args.witness_budget)
    return _finish(args, cert, "pencil")


def cmd_hurwitz(args) -> int:
    L = io.pencil_from_json(io.load_json(args.path))
    return _finish(args, check_hurwitz(L, _cfg(args), args.seed, args.witness_budget), "Hurwitz")


def cmd_schur(args) -> int:
    L = io.pencil_from_json(io.load_json(args.path))
    return _finish(args, check_schur(L, _cfg(args), args.seed, args.witness_budget), "Schur")


def cmd_roesser(args) -> int:
    spec = io.roesser_from_json(io.load_json(args.path))
    return _finish(args, check_roesser(spec, _cfg(args), args.seed, args.witness_budget), "Roesser (matricial)")


def cmd_detrep(args) -> int:
    cfg = _cfg(args)
    f = io.poly_from_json(io.load_json(args.path))
    rep, cert = detrep(f, cfg, args.seed)
    if rep is None:
        payload = {"detrep": None, "certificate": io.certificate_to_json(cert)}
        lines = [f"no determinantal representation constructed ({cert.verdict.value}: {cert.reason})"]
        _emit(args, payload, lines)
        return EXIT_STABLE if cert.verdict is Verdict.STABLE else VERDICT_EXIT[cert.verdict]
    sizes = list(range(1, args.max_size + 1))
    ok, worst = verify_detrep(f, rep.pencil, sizes, args.samples, args.seed, cfg)
    payload = {"L": io.pencil_to_json(rep.pencil),
               "verification": {"sizes": sizes, "samples": args.samples, "max_residual": worst, "passed": ok},
               "provenance": io._plain(rep.provenance)}
    lines = [f"purely stable determinantal representation of size {rep.pencil.rows}",
             f"  provenance: {rep.provenance}",
             f"  max relative determinant residual over sizes {sizes}: {worst:.3e} ({'pass' if ok else 'FAIL'})"]
    _emit(args, payload, lines)
    return EXIT_STABLE if ok else EXIT_INDETERMINATE


def cmd_witness(args) -> int:
    cfg = _cfg(args)
    L = io.pencil_from_json(io.load_json(args.path))
    X = find_witness(L, args.mode, args.budget, args.seed, cfg, args.size_cap)
    if X is None:
        payload = {"witness": None, "mode": args.mode, "budget": args.budget, "seed": args.seed}
        _emit(args, payload, ["none found within budget (this is not a stability proof)"])
        return EXIT_STABLE
    sv = min_singular_value(eval_pencil(L, X))
    payload = {"witness": {**io.tuple_to_json(X), "domain": args.mode}, "min_singular_value": sv,
               "seed": args.seed}
    lines = [f"witness found ({args.mode}, n={X.n}), smallest singular value {sv:.3e}"]
    lines += [f"  X_{j} = {np.array2string(Xj, precision=6)}" for j, Xj in enumerate(X, 1)]
    _emit(args, payload, lines)
    return EXIT_UNSTABLE


def cmd_certify(args) -> int:
    cfg = _cfg(args)
    L = io.pencil_from_json(io.load_json(args.pencil))
    cert = io.certificate_from_json(io.load_json(args.certificate))
    check = verify_reduced(L, cert, cfg, args.seed)
    lines = [f"certificate ({cert.verdict.value}): {'VALID' if check.ok else 'INVALID'}"]
    width = max((len(k) for k in check.checks), default=0)
    for key, val in check.checks.items():
        shown = f"{val:.3e}" if isinstance(val, float) else str(val)
        lines.append(f"  {key:<{width}}  {shown}")
    lines += [f"  failure: {msg}" for msg in check.failures]
    payload = {"valid": check.ok, "checks": io._plain(check.checks), "failures": check.failures}
    _emit(args, payload, lines)
    return EXIT_STABLE if check.ok else EXIT_UNSTABLE


def cmd_eval(args) -> int:
    obj = io.load_json(args.object)
    X = io.tuple_from_json(io.load_json(args.tuple))
    if isinstance(obj, dict) and "terms" in obj:
        M = eval_poly(io.poly_from_json(obj), X)
    else:
        M = eval_pencil(io.pencil_from_json(obj), X)
    sv = min_singular_value(M)
    payload = {"value": io.matrix_to_json(M), "min_singular_value": sv}
    _emit(args, payload, [np.array2string(M, precision=6), f"smallest singular value: {sv:.6e}"])
    return EXIT_STABLE


def cmd_gen(args) -> int:
    if args.purely_stable is not None:
        delta, d = args.purely_stable
        payload = io.pencil_to_json(random_purely_stable(delta, d, args.seed))
    elif args.alphas is not None and args.betas is not None:
        payload = io.poly_to_json(gen_stable_poly(args.alphas, args.betas))
    else:
        raise InputError("give --alphas and --betas, or --purely-stable DELTA D")
    if args.out:
        io.write_json(args.out, payload)
    else:
        print(io.dumps(payload))
    return EXIT_STABLE


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, out: bool = True) -> None:
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--tol-rank", type=float, default=None)
    p.add_argument("--tol-psd", type=float, default=None)
    p.add_argument("--tol-residual", type=float, default=None)
    p.add_argument("--tol-sdp", type=float, default=None)
    p.add_argument("--json", action="store_true", help="print the machine-readable report")
    if out:
        p.add_argument("--out", help="write the JSON report or certificate here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncstable", description="Stability of linear matrix pencils "
                                     "and noncommutative polynomials on the matricial positive orthant.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, what in [("check", cmd_check, "pencil or polynomial file"),
                           ("hurwitz", cmd_hurwitz, "pencil file"),
                           ("schur", cmd_schur, "pencil file"),
                           ("roesser", cmd_roesser, "Roesser file {A, dims}")]:
        p = sub.add_parser(name, help=f"{name} stability of a {what}")
        p.add_argument("path", help=what)
        p.add_argument("--witness-budget", type=int,
                       default=0 if name in ("check", "hurwitz") else DEFAULT_WITNESS_BUDGET,
                       help="evaluations spent searching for a witness after an unstable verdict")
        _common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("detrep", help="purely stable determinantal representation of a polynomial")
    p.add_argument("path")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--max-size", type=int, default=4)
    _common(p)
    p.set_defaults(func=cmd_detrep)

    p = sub.add_parser("witness", help="search for a point of rank loss")
    p.add_argument("path")
    p.add_argument("--mode", choices=["upper", "polydisk"], default="upper")
    p.add_argument("--budget", type=int, default=DEFAULT_WITNESS_BUDGET)
    p.add_argument("--size-cap", type=int, default=None)
    _common(p)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("certify", help="re-verify a certificate against a pencil")
    p.add_argument("pencil")
    p.add_argument("certificate")
    _common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("eval", help="evaluate a pencil or polynomial at a tuple")
    p.add_argument("object")
    p.add_argument("tuple")
    _common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen", help="generate stable instances")
    p.add_argument("--alphas", type=float, nargs="+")
    p.add_argument("--betas", type=float, nargs="+")
    p.add_argument("--purely-stable", type=int, nargs=2, metavar=("DELTA", "D"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, EvalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
