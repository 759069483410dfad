"""Command-line entry point: ``recyclecg solve`` and ``recyclecg condest``."""

from __future__ import annotations

import argparse
import json
import os
import logging
import sys

from .driver import RunConfig, emit_reports, run_sequence
from .errors import ICBreakdown, MatrixMarketError, NotSPDError, SolverBreakdown
from .sparse import read_matrix_market

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BREAKDOWN = 3
EXIT_NOT_CONVERGED = 4


def _rhs(text):
    if text == "ones":
        return ("ones", 1)
    kind, _, seed = text.partition(":")
    if kind != "random":
        raise argparse.ArgumentTypeError("rhs must be 'ones' or 'random:<seed>'")
    try:
        return ("random", int(seed) if seed else 1)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed in {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="recyclecg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve a sequence of systems with one matrix")
    solve.add_argument("--matrix", required=True, help="Matrix Market file")
    solve.add_argument("--method", default="iccg",
                       choices=["iccg", "es-sc-iccg", "es-d-iccg", "cg", "condest"])
    solve.add_argument("--k-t", type=int, default=6, help="number of systems in the sequence")
    solve.add_argument("--m", type=int, default=20, help="sample slots")
    solve.add_argument("--theta", type=float, nargs="+", default=[1e-3],
                       help="Ritz-value threshold(s); several values run a sweep")
    solve.add_argument("--sampling", choices=["A", "B"], default="A")
    solve.add_argument("--rhs", type=_rhs, default=("ones", 1), help="ones | random:<seed>")
    solve.add_argument("--eps", type=float, default=1e-8)
    solve.add_argument("--max-iter", type=int, default=10_000)
    solve.add_argument("--blocks", type=int, default=1, help="block-Jacobi IC block count")
    solve.add_argument("--b-m", type=float, default=1e10, help="memory bandwidth in bytes/s")
    solve.add_argument("--out", help="report directory")
    solve.add_argument("--history", action="store_true", help="write per-solve residual CSVs")
    solve.add_argument("--serial", action="store_true", help="serial kernels (the only mode)")
    solve.add_argument("--strict", action="store_true", help="exit 4 if any solve fails to converge")

    cond = sub.add_parser("condest", help="estimate the condition number during a CG solve")
    cond.add_argument("--matrix", required=True)
    cond.add_argument("--m", type=int, default=20)
    cond.add_argument("--eps", type=float, default=1e-8)
    cond.add_argument("--max-iter", type=int, default=10_000)
    cond.add_argument("--seed", type=int, default=42, help="power-iteration start vector seed")
    cond.add_argument("--out", help="directory for condest.json")
    return parser


def _configs(args):
    if args.command == "condest":
        yield RunConfig(matrix_path=args.matrix, method="condest", m=args.m, eps=args.eps,
                        max_iter=args.max_iter, condest_seed=args.seed)
        return
    kind, seed = args.rhs
    for theta in args.theta:
        yield RunConfig(matrix_path=args.matrix, method=args.method, k_t=args.k_t, m=args.m,
                        theta=theta, sampling=args.sampling, rhs=kind, rhs_seed=seed,
                        eps=args.eps, max_iter=args.max_iter, blocks=args.blocks, b_m=args.b_m,
                        record_history=args.history)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        configs = list(_configs(args))
        A = read_matrix_market(args.matrix)
    except (MatrixMarketError, NotSPDError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    status = EXIT_OK
    for cfg in configs:
        try:
            rep = run_sequence(cfg, A)
        except (SolverBreakdown, ICBreakdown, NotSPDError) as exc:
            print(f"solver breakdown: {exc}", file=sys.stderr)
            return EXIT_BREAKDOWN

        if args.command == "condest":
            result = rep.condest
            print(json.dumps(result, indent=2))
            if args.out:
                os.makedirs(args.out, exist_ok=True)
                with open(os.path.join(args.out, "condest.json"), "w") as fh:
                    json.dump(result, fh, indent=2)
        else:
            out = args.out
            if out and len(configs) > 1:
                out = f"{out}/theta_{cfg.theta:g}"
            if out:
                emit_reports(rep, out)
            iters = " ".join(str(s.iterations) for s in rep.solves)
            print(f"{cfg.method} theta={cfg.theta:g} m_bar={rep.m_bar} m_tilde={rep.m_tilde} "
                  f"iterations=[{iters}] avg={rep.average_iterations():.1f}")
        if getattr(args, "strict", False) and not all(s.converged for s in rep.solves):
            status = EXIT_NOT_CONVERGED
    return status


if __name__ == "__main__":
    sys.exit(main())
