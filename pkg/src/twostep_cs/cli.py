"""Command line: ``twostep-cs <command> [options]``.

Exit status is 0 on success, 2 on a usage error and 1 when the computation
itself fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import __version__
from .analysis import RobustnessConfig
from .experiments import (BOUNDS_HEADER, ORDERSTATS_HEADER, SWEEP_HEADER, ExperimentConfig,
                          manifest, rows_to_csv, run_bound_curves, run_orderstats, run_overlap,
                          run_sweep)
from .numerics import RandomStream, gaussian_matrix
from .recovery import recover_two_step, recovery_success, support_overlap_fraction
from .signals import generate_sparse, get_distribution
from .thresholds import (ThresholdSearchConfig, WeightedThresholdQuery, certified_improvement,
                         delta_sectional, lambda_c, weak_threshold_mu)

log = logging.getLogger("twostep_cs")


class UsageError(Exception):
    pass


def _int_range(text):
    """``a:b:s`` (inclusive), ``a:b`` or a comma list."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            a, b, s = parts
            if s <= 0:
                raise ValueError
            return tuple(range(a, b + 1, s))
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer range {text!r}") from None


def _float_list(text):
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _log_range(text):
    """``lo:hi:count`` on a log scale, or a comma list."""
    if ":" in text:
        try:
            lo, hi, cnt = text.split(":")
            return tuple(np.logspace(math.log10(float(lo)), math.log10(float(hi)), int(cnt)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad log range {text!r}") from None
    return _float_list(text)


def _name_list(text):
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for trials")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="twostep-cs", parents=[common],
                                     description="Two-step reweighted l1 recovery experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def trial_opts(p, weighted):
        p.add_argument("--n", type=int, default=200)
        p.add_argument("--m", type=int, default=112)
        p.add_argument("--dist", default="gaussian")
        p.add_argument("--k", type=_int_range, default=tuple(range(30, 71, 5)),
                       help="sparsity levels, a:b:step or a comma list")
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--fix-matrix", action="store_true",
                       help="one sensing matrix for all trials")
        p.add_argument("--timing", action="store_true",
                       help="fill the wall_ms column (makes output run-dependent)")
        if weighted:
            p.add_argument("--omega", type=_float_list, default=(2.0, 3.0, 5.0, 10.0))
            p.add_argument("--algos", type=_name_list, default=("l1", "two_step"))

    trial_opts(sub.add_parser("sweep", parents=[common], help="recovery rate versus k"), True)
    trial_opts(sub.add_parser("overlap", parents=[common],
                              help="support overlap of the l1 solution versus k"), False)

    b = sub.add_parser("bounds", parents=[common], help="overlap lower bounds versus eps0")
    b.add_argument("--delta", type=float, default=0.5555)
    b.add_argument("--dists", type=_name_list, default=("gaussian", "uniform", "rayleigh"))
    b.add_argument("--eps", type=_log_range, default=tuple(np.logspace(-6, -2, 21)),
                   help="eps0 values, lo:hi:count (log spaced) or a comma list")
    b.add_argument("--kappa", type=float, default=math.sqrt(3.0))

    o = sub.add_parser("orderstats", parents=[common], help="top-M share of |X| draws")
    o.add_argument("--dist", default="gaussian")
    o.add_argument("--N", type=int, default=20000)
    o.add_argument("--ratios", type=_float_list,
                   default=tuple(round(0.1 * i, 1) for i in range(1, 11)))

    t = sub.add_parser("threshold", parents=[common], help="threshold calculator")
    tsub = t.add_subparsers(dest="kind", required=True)
    grid_opts = argparse.ArgumentParser(add_help=False)
    grid_opts.add_argument("--tau-grid", type=int, default=200)
    grid_opts.add_argument("--refine", type=int, default=2)
    tw = tsub.add_parser("weak", parents=[common, grid_opts])
    tw.add_argument("--delta", type=float, required=True)
    tq = tsub.add_parser("weighted", parents=[common, grid_opts])
    tq.add_argument("--gamma1", type=float, required=True)
    tq.add_argument("--f1", type=float, required=True)
    tq.add_argument("--f2", type=float, required=True)
    tq.add_argument("--omega", type=float, default=1.0)
    tl = tsub.add_parser("lambda", parents=[common, grid_opts])
    tl.add_argument("--k-frac", type=float, required=True)
    tl.add_argument("--omega", type=float, required=True)
    tl.add_argument("--f1", type=float, default=1.0)
    ti = tsub.add_parser("improvement", parents=[common, grid_opts])
    ti.add_argument("--delta", type=float, default=0.5555)
    ti.add_argument("--dist", default="gaussian")
    ti.add_argument("--omega", type=float, default=10.0)
    ti.add_argument("--kappa", type=float, default=math.sqrt(3.0))

    r = sub.add_parser("recover", parents=[common], help="one two-step recovery, as JSON")
    r.add_argument("--n", type=int, default=200)
    r.add_argument("--m", type=int, default=112)
    r.add_argument("--k", type=int, default=45)
    r.add_argument("--dist", default="gaussian")
    r.add_argument("--omega", type=float, default=10.0)
    return parser


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table(args, config, rows, header):
    if args.format == "json":
        return manifest(config, args.seed, rows) + "\n"
    return rows_to_csv(rows, header)


def _experiment_config(args, weighted):
    return ExperimentConfig(n=args.n, m=args.m, k_values=args.k, trials=args.trials,
                            distribution=args.dist,
                            omegas=args.omega if weighted else (),
                            seed=args.seed,
                            algorithms=args.algos if weighted else ("l1",),
                            fix_matrix=args.fix_matrix, threads=args.threads,
                            timing=args.timing)


def _search_cfg(args):
    return ThresholdSearchConfig(tau_grid=args.tau_grid, refine_levels=args.refine)


def _cmd_threshold(args):
    cfg = _search_cfg(args)
    if args.kind == "weak":
        row = {"delta": args.delta, "value": weak_threshold_mu(args.delta, cfg)}
    elif args.kind == "weighted":
        q = WeightedThresholdQuery(args.gamma1, 1.0 - args.gamma1, args.f1, args.f2, args.omega)
        res = delta_sectional(q, cfg)
        if not res.found:
            log.warning("no threshold below 1 for %s", q)
        row = {**q.as_row(), "value": res.value}
    elif args.kind == "lambda":
        row = {"k_frac": args.k_frac, "omega": args.omega, "f1": args.f1,
               "value": lambda_c(args.k_frac, args.omega, f1=args.f1, cfg=cfg)}
    else:
        rc = RobustnessConfig(kappa_star=args.kappa)
        row = {"delta": args.delta, "dist": args.dist, "omega": args.omega,
               "kappa_star": args.kappa,
               "value": certified_improvement(args.delta, get_distribution(args.dist),
                                              args.omega, rc, cfg)}
    rows = [{k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()}]
    return _table(args, {"command": f"threshold {args.kind}", **row}, rows, list(row))


def _cmd_recover(args):
    stream = RandomStream(args.seed, 0)
    A = gaussian_matrix(args.m, args.n, stream)
    x = generate_sparse(args.n, args.k, get_distribution(args.dist), stream)
    res = recover_two_step(A, A @ x.values, args.k, args.omega)
    out = {
        "n": args.n, "m": args.m, "k": args.k, "dist": args.dist, "omega": args.omega,
        "seed": args.seed, "version": __version__,
        "l1_status": res.l1_status, "weighted_status": res.weighted_status,
        "l1_success": recovery_success(res.l1_solution, x.values),
        "two_step_success": recovery_success(res.final_solution, x.values),
        "l1_overlap": support_overlap_fraction(x, res.l1_solution) if args.k else 1.0,
        "support_estimate": res.support_estimate.tolist(),
        "true_support": x.support.tolist(),
        "l1_solution": res.l1_solution.tolist(),
        "final_solution": res.final_solution.tolist(),
    }
    return json.dumps(out, indent=2) + "\n"


def run(args) -> str:
    if args.command in ("sweep", "overlap"):
        weighted = args.command == "sweep"
        cfg = _experiment_config(args, weighted)
        rows = run_sweep(cfg) if weighted else run_overlap(cfg)
        return _table(args, {"command": args.command, **cfg.as_dict()}, rows, SWEEP_HEADER)
    if args.command == "bounds":
        rows = run_bound_curves(args.delta, args.dists, args.eps,
                                RobustnessConfig(kappa_star=args.kappa))
        config = {"command": "bounds", "delta": args.delta, "dists": list(args.dists),
                  "epsilon0": list(args.eps), "kappa_star": args.kappa}
        return _table(args, config, rows, BOUNDS_HEADER)
    if args.command == "orderstats":
        rows = run_orderstats(args.dist, args.N, args.ratios, args.seed)
        config = {"command": "orderstats", "dist": args.dist, "N": args.N,
                  "ratios": list(args.ratios)}
        return _table(args, config, rows, ORDERSTATS_HEADER)
    if args.command == "threshold":
        return _cmd_threshold(args)
    return _cmd_recover(args)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    try:
        text = run(args)
    except (ValueError, UsageError) as exc:
        parser.print_usage(sys.stderr)
        print(f"twostep-cs: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - any failure of the computation
        print(f"twostep-cs: failed: {exc}", file=sys.stderr)
        return 1
    _emit(text, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
