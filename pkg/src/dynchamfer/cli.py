"""``dynchamfer`` command line: run, verify, bench.

Exit codes: 0 success, 1 usage error, 2 data error, 3 property failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys

import numpy as np

from . import synthetic
from .harness import ALGORITHMS, DataError, ExperimentConfig, load_dataset, run_sliding_window, write_csv
from .verify import run_all

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PROPERTY = 0, 1, 2, 3
SEED_ENV = "CHAMFER_SEED"

log = logging.getLogger("dynchamfer")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _int_list(text):
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _algos(text):
    out = [t.strip() for t in text.split(",") if t.strip()]
    bad = [a for a in out if a not in ALGORITHMS]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"algorithms must be drawn from {','.join(ALGORITHMS)}")
    return out


def _ratio(text):
    try:
        ka, kb = (int(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected KA:KB, e.g. 3:2") from None
    if ka < 1 or kb < 1:
        raise argparse.ArgumentTypeError("ratio parts must be >= 1")
    return ka, kb


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _add_experiment_flags(p, defaults_window=100):
    p.add_argument("--format", choices=("csv", "fvecs"), default="csv")
    p.add_argument("--window", type=_positive, default=defaults_window, help="sliding window size w")
    p.add_argument("--samples", type=_positive, default=150, help="samples per query m")
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--boost", type=_positive, default=1, help="median-boost repetitions (odd)")
    p.add_argument("--seeds", type=_int_list, default=[0, 1, 2, 3, 4],
                   help=f"comma-separated seeds; ${SEED_ENV} overrides")
    p.add_argument("--outlier", action="store_true", help="append the far outlier to A")
    p.add_argument("--mode", choices=("b", "ab"), default="b",
                   help="b: window over B with A static; ab: interleave A and B inserts")
    p.add_argument("--ab-ratio", type=_ratio, default=None, help="KA:KB interleave pattern for --mode ab")
    p.add_argument("--algos", type=_algos, default=list(ALGORITHMS))
    p.add_argument("--report-every", type=_positive, default=None, help="default w/4")
    p.add_argument("--max-steps", type=_positive, default=None, help="stop after this many window steps")
    p.add_argument("--extent", type=int, default=2**20, help="grid side U (power of two)")
    p.add_argument("--oracle", choices=("auto", "scan", "kdtree"), default="auto")


def build_parser():
    parser = _Parser(prog="dynchamfer", description="Dynamic Chamfer distance estimation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="sliding-window experiment, CSV of per-report errors")
    run.add_argument("--a", required=True, help="dataset A")
    run.add_argument("--b", required=True, help="dataset B (the stream)")
    _add_experiment_flags(run)
    run.add_argument("--out", default="-", help="output CSV (default stdout)")

    ver = sub.add_parser("verify", help="run the randomised property checks")
    ver.add_argument("--quick", action="store_true", help="reduced trial counts")
    ver.add_argument("--inject-fault", choices=("gamma",), default=None, help=argparse.SUPPRESS)

    bench = sub.add_parser("bench", help="update/query latency per algorithm")
    bench.add_argument("--a", help="dataset A (omit to use --synthetic)")
    bench.add_argument("--b", help="dataset B")
    bench.add_argument("--synthetic", default="shapenet",
                       choices=sorted(synthetic.SURROGATES) + ["cube"],
                       help="generated data when no files are given")
    bench.add_argument("--n-a", type=_positive, default=None)
    bench.add_argument("--n-b", type=_positive, default=None)
    bench.add_argument("--dim", type=_positive, default=None, help="dimension for cube / mixture data")
    _add_experiment_flags(bench)
    bench.add_argument("--csv", default=None, help="also write the summary CSV here")
    bench.set_defaults(seeds=[0])
    return parser


def _seeds(args):
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return args.seeds
    try:
        return _int_list(env)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"${SEED_ENV}: {exc}") from None


def _config(args, **extra) -> ExperimentConfig:
    try:
        return ExperimentConfig(
            a_path=getattr(args, "a", None), b_path=getattr(args, "b", None), fmt=args.format,
            window=args.window, samples=args.samples, eps=args.eps, alpha=args.alpha,
            boost_reps=args.boost, seeds=_seeds(args), report_every=args.report_every,
            outlier=args.outlier, mode="dynamic_B" if args.mode == "b" else "dynamic_AB",
            ab_ratio=args.ab_ratio, algorithms=args.algos, extent=args.extent,
            oracle=args.oracle, max_steps=args.max_steps, **extra)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_params(cfg):
    # surface parameter problems as usage errors before any data is read
    from .core import EstimatorParams, InstanceConfig
    try:
        EstimatorParams(cfg.eps, cfg.alpha, cfg.samples, cfg.boost_reps)
        InstanceConfig(d=1, extent=cfg.extent)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_run(args) -> int:
    cfg = _config(args)
    _check_params(cfg)
    rows = run_sliding_window(cfg)
    if args.out == "-":
        write_csv(rows, sys.stdout)
    else:
        write_csv(rows, args.out)
        log.info("wrote %d rows to %s", len(rows), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_all(quick=args.quick, corrupt_gamma=args.inject_fault == "gamma",
                      report=lambda r: print(r.line(), file=sys.stderr, flush=True))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"failed properties: {', '.join(failed)}", file=sys.stderr)
        return EXIT_PROPERTY
    print(f"all {len(results)} properties hold", file=sys.stderr)
    return EXIT_OK


def _bench_data(args, seed):
    if args.a or args.b:
        if not (args.a and args.b):
            raise UsageError("--a and --b must be given together")
        return load_dataset(args.a, args.format), load_dataset(args.b, args.format)
    name = args.synthetic
    if name == "cube":
        rng = np.random.default_rng(seed)
        d = args.dim or 3
        return rng.random((args.n_a or 2000, d)), rng.random((args.n_b or 2000, d))
    sur = synthetic.SURROGATES[name]
    n_a, n_b = args.n_a or sur.n_a, args.n_b or sur.n_b
    if name == "shapenet":
        return synthetic.shape_pair(n_a, n_b, seed)
    return synthetic.mixture_pair(n_a, n_b, args.dim or sur.d, seed=seed)


def summarize(rows, algorithms):
    """Per algorithm: mean update latency, mean query latency, report count."""
    out = []
    for alg in algorithms:
        mine = [r for r in rows if r.algorithm == alg]
        upd = [r.update_time_ns for r in mine if r.update_index > 0]
        qry = [r.query_time_ns for r in mine]
        out.append({
            "algorithm": alg,
            "update_ns": sum(upd) / len(upd) if upd else math.nan,
            "query_ns": sum(qry) / len(qry) if qry else math.nan,
            "reports": len(mine),
        })
    return out


def _fmt_ns(v):
    if math.isnan(v):
        return "n/a"
    return f"{v / 1e3:,.1f} us"


def cmd_bench(args) -> int:
    cfg = _config(args, compute_exact=False)
    _check_params(cfg)
    seed = cfg.seeds[0]
    A, B = _bench_data(args, seed)
    rows = run_sliding_window(cfg, A, B)
    summary = summarize(rows, [a for a in ALGORITHMS if a in cfg.algorithms])

    print(f"|A|={len(A)} |B stream|={len(B)} d={np.asarray(A).shape[1]} w={cfg.window} m={cfg.samples}")
    print(f"{'algorithm':<10} {'update/window step':>20} {'query':>14} {'reports':>8}")
    for s in summary:
        print(f"{s['algorithm']:<10} {_fmt_ns(s['update_ns']):>20} {_fmt_ns(s['query_ns']):>14} {s['reports']:>8}")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["algorithm", "update_ns", "query_ns", "reports"])
    w.writeheader()
    w.writerows(summary)
    print()
    print(buf.getvalue(), end="")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(buf.getvalue())
    return EXIT_OK


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"dynchamfer: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"dynchamfer: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, KeyError, TypeError) as exc:
        # malformed points, out-of-grid values, short streams
        print(f"dynchamfer: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
