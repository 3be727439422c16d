"""Command-line entry point: ``nmfkit {factorize,spa,bench,gen}``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .bench import load_bench_spec, run_benchmark, write_rows
from .datasets import GenSpec, gen_lowrank, gen_near_separable
from .initialization import init_clustering, init_colsubset, init_random, init_svd_split
from .matrix import load_matrix_market, save_matrix_market
from .separable import recover_h, spa, spa_refine
from .solvers import RULES, SolverConfig, run_cd

INITS = ("random", "nndsvd", "kmeans", "spa")


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def _nonneg_float(s):
    v = float(s)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {s}")
    return v


class _Parser(argparse.ArgumentParser):
    """Report flag errors on a single stderr line."""

    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nmfkit", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    f = sub.add_parser("factorize", help="compute X ~ WH with a coordinate-descent rule")
    f.add_argument("--input", required=True, help="Matrix Market file")
    f.add_argument("--rank", type=_positive_int, required=True)
    f.add_argument("--algo", choices=RULES, default="hals")
    f.add_argument("--init", choices=INITS, default="random")
    f.add_argument("--max-time", type=_positive_float, default=math.inf, help="seconds")
    f.add_argument("--max-iter", type=_positive_int, default=500)
    f.add_argument("--tol", type=_nonneg_float, default=1e-12,
                   help="KKT and relative error-change tolerance")
    f.add_argument("--inner", type=_positive_int, default=1,
                   help="inner repetitions per block (mu and hals)")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out-w")
    f.add_argument("--out-h")
    f.add_argument("--trace", help="CSV trace output")

    s = sub.add_parser("spa", help="successive projection anchor extraction")
    s.add_argument("--input", required=True)
    s.add_argument("--rank", type=_positive_int, required=True)
    s.add_argument("--normalize", action="store_true", help="l1-normalize columns first")
    s.add_argument("--refine", action="store_true", help="one post-processing pass")
    s.add_argument("--out-indices", required=True, help="text file, one 0-based index per line")
    s.add_argument("--out-h", help="Matrix Market file for the recovered H")

    b = sub.add_parser("bench", help="run a JSON-described benchmark")
    b.add_argument("--spec", required=True, help="JSON benchmark config")
    b.add_argument("--out", help="CSV output (overrides the config's 'out')")

    g = sub.add_parser("gen", help="generate a synthetic matrix")
    g.add_argument("--kind", choices=("dense", "sparse", "separable"), required=True)
    g.add_argument("--p", type=_positive_int, required=True)
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--rank", type=_positive_int, required=True)
    g.add_argument("--noise", type=_nonneg_float, default=0.0)
    g.add_argument("--density", type=_positive_float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--out-truth", help="directory for W.mtx, H.mtx (and anchors.txt)")
    return ap


def _initial(X, r, how, seed):
    p, n = X.shape
    if how == "random":
        return init_random(p, n, r, seed=seed, X=X)
    if how == "nndsvd":
        return init_svd_split(X, r, seed=seed)
    if how == "kmeans":
        return init_clustering(X, r, seed=seed)
    return init_colsubset(X, r)


def cmd_factorize(args) -> int:
    X = load_matrix_market(args.input, nonnegative=True)
    cfg = SolverConfig(rule=args.algo, max_iter=args.max_iter, max_time=args.max_time,
                       kkt_tol=args.tol, err_tol=args.tol, inner=args.inner, seed=args.seed)
    init = _initial(X, args.rank, args.init, args.seed)
    fac, trace = run_cd(X, args.rank, cfg, init)
    if args.out_w:
        save_matrix_market(args.out_w, fac.W)
    if args.out_h:
        save_matrix_market(args.out_h, fac.H)
    if args.trace:
        name = Path(args.input).stem
        write_rows(args.trace, [
            {"dataset": name, "algorithm": args.algo, "seed": args.seed, "iteration": e.iteration,
             "elapsed_s": e.elapsed, "rel_error": e.rel_error, "kkt_total": e.kkt_total}
            for e in trace.entries])
    print(f"iterations={len(trace) - 1} rel_error={trace.final_error:.6e} "
          f"stop={trace.stop_reason}")
    return 0


def cmd_spa(args) -> int:
    X = load_matrix_market(args.input)
    K = spa(X, args.rank, normalize=args.normalize)
    if args.refine:
        K = spa_refine(X, K)
    Path(args.out_indices).write_text("".join(f"{k}\n" for k in K.indices))
    if args.out_h:
        save_matrix_market(args.out_h, recover_h(X, K))
    print(" ".join(str(k) for k in K.indices))
    return 0


def cmd_bench(args) -> int:
    spec = load_bench_spec(args.spec)
    if args.out:
        spec.out = args.out
    if not spec.out:
        raise ValueError("no output path: pass --out or set 'out' in the config")
    rows = run_benchmark(spec)
    print(f"wrote {len(rows)} rows to {spec.out}")
    return 0


def cmd_gen(args) -> int:
    spec = GenSpec(kind=args.kind, p=args.p, n=args.n, r=args.rank, noise=args.noise,
                   density=args.density, seed=args.seed)
    anchors = None
    if spec.kind == "separable":
        X, anchors, truth = gen_near_separable(spec)
    else:
        X, truth = gen_lowrank(spec)
    save_matrix_market(args.out, X)
    if args.out_truth:
        d = Path(args.out_truth)
        d.mkdir(parents=True, exist_ok=True)
        save_matrix_market(d / "W.mtx", truth.W)
        save_matrix_market(d / "H.mtx", truth.H)
        if anchors is not None:
            (d / "anchors.txt").write_text("".join(f"{k}\n" for k in anchors.indices))
    return 0


COMMANDS = {"factorize": cmd_factorize, "spa": cmd_spa, "bench": cmd_bench, "gen": cmd_gen}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.seterr(all="ignore")
    try:
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore")
            return COMMANDS[args.command](args)
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"nmfkit {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
