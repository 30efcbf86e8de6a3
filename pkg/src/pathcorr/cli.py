"""Command-line entry point: ``sigma``, ``gen``, ``stat``, ``test`` and ``mc``.

Exit status is 0 on success (a zero-sigma outcome is still a report), 1 on
domain errors and 2 on usage or I/O errors. Machine-readable output goes to
stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from typing import Optional, Sequence

from .constants import DEFAULT_CONFIG, QuadratureConfig, limit_constants
from .core import GridError, ModelSpec, PathCorrError, dump_pair, read_pair
from .inference import Mode, TestConfig, run_test
from .montecarlo import McConfig, export_summary, run_mc
from .simulate import Method, simulate

log = logging.getLogger("pathcorr")

SEED_ENV = "PATHCORR_SEED"
SIGMA_COLUMNS = ("H", "alpha", "sigma_h_sq", "sigma_h", "sigma_h_d", "lower_bound",
                 "err_sq", "err_d", "sigma_h_d_sq")


class UsageError(Exception):
    pass


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def _emit(text: str, out: Optional[str]):
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)
        log.info("wrote %s", out)


def _load(args):
    try:
        pair = read_pair(args.infile)
    except (OSError, GridError, json.JSONDecodeError, KeyError) as exc:
        raise UsageError(f"cannot read pair from {args.infile}: {exc}") from None
    if args.model is not None:
        model = ModelSpec(args.model, args.hurst if args.model == "fbm" else None,
                          pair.model.true_r, pair.model.seed)
        pair = type(pair)(pair.first, pair.second, model)
    return pair


def _test_config(args, pair) -> TestConfig:
    mode = Mode(args.mode)
    ff = args.fine_factor
    if ff is None:
        if mode is Mode.CONTINUOUS:
            if pair.n % args.n:
                raise GridError(f"n={args.n} does not divide the file grid {pair.n}")
            ff = pair.n // args.n
        else:
            ff = 100
    return TestConfig(null_r=args.null_rho, alpha_level=args.alpha, mode=mode,
                      coarse_n=args.n, fine_factor=ff)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_sigma(args) -> int:
    cfg = QuadratureConfig(abs_tol=args.tol) if args.tol is not None else DEFAULT_CONFIG
    rows = []
    for H in args.hurst:
        log.info("computing constants for H=%s", H)
        c = limit_constants(H, cfg)
        rows.append({
            "H": c.hurst, "alpha": c.alpha, "sigma_h_sq": c.sigma_h_sq,
            "sigma_h": c.sigma_h, "sigma_h_d": c.sigma_h_d,
            "lower_bound": c.lower_bound, "err_sq": c.err_sq, "err_d": c.err_d,
            "sigma_h_d_sq": c.sigma_h_d_sq,
        })
    if args.json or args.format == "json":
        _emit(json.dumps(rows), args.out)
        return 0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SIGMA_COLUMNS)
    for r in rows:
        w.writerow([repr(float(r[k])) for k in SIGMA_COLUMNS])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_gen(args) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    pair = simulate(args.model, args.n, args.rho, args.hurst, seed, args.method)
    fmt = args.format
    if fmt is None:
        fmt = "json" if args.json or (args.out or "").lower().endswith(".json") else "csv"
    _emit(dump_pair(pair, fmt), args.out)
    return 0


def cmd_stat(args) -> int:
    pair = _load(args)
    rep = run_test(pair, _test_config(args, pair))
    doc = {
        "n": rep.n, "mode": rep.mode, "null_rho": rep.null_r,
        "rho_n": rep.rho_n, "rho": rep.rho, "mu": rep.mu, "sigma": rep.sigma,
        "triple": dict(zip(("a", "d1", "d2"), rep.reference_triple)),
        "coarse_triple": dict(zip(("a", "d1", "d2"), rep.coarse_triple)),
        "bias_vector": list(rep.bias_vector), "status": rep.status,
    }
    _emit(json.dumps(doc), args.out)
    return 0


def cmd_test(args) -> int:
    pair = _load(args)
    rep = run_test(pair, _test_config(args, pair))
    _emit(json.dumps(rep.to_dict()), args.out)
    return 0


def cmd_mc(args) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    cfg = McConfig(
        model=args.model, hurst=args.hurst if args.model == "fbm" else None,
        rho=args.rho, null_rho=args.null_rho, coarse_n=args.n,
        fine_factor=args.fine_factor, mode=Mode(args.mode), reps=args.reps,
        seed=seed, bins=args.bins, hist_range=(args.range[0], args.range[1]),
        workers=args.workers, method=Method(args.method),
    )
    log.info("running %d replications of %s at n=%d", cfg.reps, cfg.statistic, cfg.coarse_n)
    s = run_mc(cfg)
    log.info("mean=%.4f std=%.4f ks=%.4f pass=%s", s.mean, s.std, s.ks_distance, s.ks_pass)
    fmt = "json" if args.json else args.format
    _emit(export_summary(s, fmt), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_model_flags(p, required_rho=True):
    p.add_argument("--model", choices=["bm", "fbm"], default="bm", help="generating model (default: bm)")
    p.add_argument("--hurst", type=float, default=None, help="Hurst index for fbm, in (0.5, 1)")
    if required_rho:
        p.add_argument("--rho", type=float, default=0.0, help="true correlation r (default: 0)")


def _add_pair_flags(p):
    p.add_argument("--in", dest="infile", required=True, help="pair file (.csv or .json)")
    p.add_argument("--n", type=int, required=True, help="coarse grid size n")
    p.add_argument("--fine-factor", type=int, default=None,
                   help="reference grid is fine_factor*n (default: file grid / n)")
    p.add_argument("--null-rho", type=float, default=0.0, help="null correlation r0 (default: 0)")
    p.add_argument("--mode", choices=[m.value for m in Mode], default="continuous",
                   help="continuous proxy or n-vs-2n discrete (default: continuous)")
    p.add_argument("--alpha", type=float, default=0.05, help="test level (default: 0.05)")
    p.add_argument("--model", choices=["bm", "fbm"], default=None,
                   help="override the model stored in the file")
    p.add_argument("--hurst", type=float, default=None, help="Hurst index with --model fbm")
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="pathcorr", description=__doc__.splitlines()[0])
    top.add_argument("--json", action="store_true", help="force JSON output everywhere")
    top.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="force JSON output")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sigma", parents=[common], help="fBm limit constants table")
    p.add_argument("--hurst", type=float, nargs="+", required=True, help="one or more H in (0.5, 1)")
    p.add_argument("--tol", type=float, default=None,
                   help=f"absolute quadrature tolerance (default: {DEFAULT_CONFIG.abs_tol:g})")
    p.add_argument("--format", choices=["csv", "json"], default="csv", help="default: csv")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.set_defaults(func=cmd_sigma)

    p = sub.add_parser("gen", parents=[common], help="simulate a correlated pair")
    _add_model_flags(p)
    p.add_argument("--n", type=int, required=True, help="grid size of the written pair")
    p.add_argument("--seed", type=int, default=None, help=f"seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--method", choices=[m.value for m in Method], default="auto", help="default: auto")
    p.add_argument("--format", choices=["csv", "json"], default=None,
                   help="default: from --out extension, else csv")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("stat", parents=[common], help="functionals, rho_n, rho proxy, mu and sigma of a pair")
    _add_pair_flags(p)
    p.set_defaults(func=cmd_stat)

    p = sub.add_parser("test", parents=[common], help="standardized statistic and test decision")
    _add_pair_flags(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo distribution of a statistic")
    _add_model_flags(p)
    p.add_argument("--null-rho", type=float, default=None, help="null r0 (default: --rho)")
    p.add_argument("--n", type=int, default=64, help="coarse grid size (default: 64)")
    p.add_argument("--fine-factor", type=int, default=100, help="default: 100")
    p.add_argument("--mode", choices=[m.value for m in Mode], default="continuous", help="default: continuous")
    p.add_argument("--reps", type=int, default=1000, help="replications, >= 100 (default: 1000)")
    p.add_argument("--seed", type=int, default=None, help=f"base seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--bins", type=int, default=61, help="histogram bins (default: 61)")
    p.add_argument("--range", type=float, nargs=2, default=(-4.0, 4.0), metavar=("LO", "HI"),
                   help="histogram range (default: -4 4)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default: 1)")
    p.add_argument("--method", choices=[m.value for m in Method], default="auto", help="default: auto")
    p.add_argument("--format", choices=["csv", "json"], default="csv", help="default: csv")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.set_defaults(func=cmd_mc)
    return top


def _configure_logging(verbose: bool):
    for h in list(log.handlers):
        log.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if verbose else logging.WARNING)
    log.propagate = False


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"pathcorr: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pathcorr: {exc}", file=sys.stderr)
        return 2
    except (PathCorrError, ValueError, ArithmeticError) as exc:
        print(f"pathcorr: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
