"""Command-line front end.

Exit codes: 0 all pass / injective, 1 usage error, 2 deficiency found,
3 numerical error state (verdict mismatch, block leak).
"""
from __future__ import annotations

import argparse
import json
import sys

from .avcore import PolarizationType, load_period_file
from .errors import BlockLeak, ThetaMulError, VerdictMismatch
from .experiments import (
    TAU_MODES,
    SweepConfig,
    random_siegel,
    default_fixtures,
    run_sweep,
    verify_identities,
)
from .groups import group_report
from .multmap import (
    RANK_TOL,
    block_structure_check,
    dumps_matrix,
    injectivity_report,
    mult_matrix_formula,
    mult_matrix_interpolation,
)
from .theta import DEFAULT_EPS

EXIT_OK, EXIT_USAGE, EXIT_DEFICIENT, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _type(text):
    try:
        return PolarizationType.parse(text)
    except (ValueError, ThetaMulError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common(p, with_tau=True):
    p.add_argument("--type", dest="D", type=_type, help="polarization type, e.g. 1,2")
    if with_tau:
        p.add_argument("--tau", help="period-matrix file (overrides --type)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--rank-tol", type=float, default=RANK_TOL)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="thetamul", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="injectivity report for one period matrix")
    _common(p)
    p.add_argument("--spread", type=float, default=1.0)

    p = sub.add_parser("sweep", help="seeded sweep over random period matrices")
    _common(p)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--mode", choices=TAU_MODES, default="random")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--out", help="output directory (default: $THETAMUL_OUT)")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("verify", help="run the identity checks on the fixture set")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--g1-only", action="store_true")
    p.add_argument("--sabotage", action="store_true", help="perturb one formula entry (self-test)")

    p = sub.add_parser("dump-groups", help="print the finite groups for a type")
    p.add_argument("--type", dest="D", type=_type, required=True)

    p = sub.add_parser("dump-matrix", help="print the Sym^2 multiplication matrix")
    _common(p)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--interpolation", action="store_true", help="use the sampling oracle instead of the formula")
    return ap


def _resolve_tau(args):
    if args.tau:
        pm, D = load_period_file(args.tau)
        return pm, D
    if args.D is None:
        raise SystemExit(_usage("either --type or --tau is required"))
    return random_siegel(args.D.g, args.seed, args.spread), args.D


def _usage(msg):
    print(f"thetamul: error: {msg}", file=sys.stderr)
    return EXIT_USAGE


def cmd_check(args) -> int:
    pm, D = _resolve_tau(args)
    try:
        rep = injectivity_report(D, pm, args.eps, args.rank_tol)
        leak = block_structure_check(D, pm, args.eps)
    except (VerdictMismatch, BlockLeak) as exc:
        print(json.dumps({"d": list(D.d), "error": f"{type(exc).__name__}: {exc}"}))
        return EXIT_NUMERIC
    doc = {
        "d": list(D.d),
        "tau_fingerprint": pm.fingerprint(),
        "verdict": rep.verdict,
        "block_margin": rep.block_margin,
        "svd_margin": rep.svd_margin,
        "block_leak": leak,
        "blocks": [
            {
                "u": list(b.u.c),
                "rho": list(b.rho.signs),
                "shape": list(b.shape),
                "rank": b.rank,
                "margin": b.margin,
                "singular_values": [float(s) for s in b.singular_values],
            }
            for b in rep.blocks
        ],
    }
    print(json.dumps(doc, indent=1))
    return EXIT_OK if rep.injective else EXIT_DEFICIENT


def cmd_sweep(args) -> int:
    if args.D is None and not args.tau:
        return _usage("either --type or --tau is required")
    D = load_period_file(args.tau)[1] if args.tau else args.D
    mode = "file" if args.tau else args.mode
    cfg = SweepConfig(D, args.samples, args.seed, args.eps, args.rank_tol, mode, args.delta, args.spread, args.tau)
    report = run_sweep(cfg, max(1, args.jobs), args.out)
    print(json.dumps(report.summary(), sort_keys=True, indent=1))
    agg = report.aggregate
    if agg["n_mismatch"] or agg["n_block_leak"] or agg["n_errors"]:
        return EXIT_NUMERIC
    return EXIT_DEFICIENT if agg["n_deficient"] else EXIT_OK


def cmd_verify(args) -> int:
    results = verify_identities(default_fixtures(args.g1_only), args.seed, args.eps, args.sabotage)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  residual={r.residual:.3e}  tol={r.tol:.0e}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def cmd_dump_groups(args) -> int:
    print(json.dumps(group_report(args.D), indent=1))
    return EXIT_OK


def cmd_dump_matrix(args) -> int:
    pm, D = _resolve_tau(args)
    mm = mult_matrix_interpolation(D, pm, args.eps, seed=args.seed) if args.interpolation else mult_matrix_formula(D, pm, args.eps)
    print(dumps_matrix(mm))
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "dump-groups": cmd_dump_groups,
    "dump-matrix": cmd_dump_matrix,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except ValueError as exc:
        return _usage(str(exc))
    except ThetaMulError as exc:
        print(f"thetamul: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
