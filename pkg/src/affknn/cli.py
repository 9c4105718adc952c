"""Command-line interface.

Exit codes: 0 success, 1 input error, 2 invariant violation.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time

from . import __version__
from .estimator import EstimatorConfig, predict_batch
from .geometry import as_point
from .io import InputError, format_rational, predictions_csv, read_dataset, read_points, write_atomic
from .metric import HyperplaneTable, rho_exact, rho_sampled
from .synth import (
    RegressionScenario,
    generate_sample,
    run_consistency_experiment,
    run_invariance_suite,
)

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _point(text: str):
    try:
        return as_point(text.split(","))
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"bad point {text!r}: {exc}") from None


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"need positive integers, got {text!r}")
    return values


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _config(args, n: int) -> EstimatorConfig:
    if args.metric == "sampled" and args.m is None:
        raise InputError("--metric sampled requires --m")
    if args.k > n:
        raise InputError(f"--k {args.k} exceeds the number of samples n={n}")
    return EstimatorConfig(k=args.k, metric=args.metric, m=args.m, seed=args.seed)


def cmd_distance(args) -> int:
    data = read_dataset(args.dataset)
    for p in (args.a, args.b):
        if len(p) != data.dim:
            raise InputError(f"point has dimension {len(p)}, dataset has {data.dim}")
    if args.metric == "sampled":
        if args.m is None:
            raise InputError("--metric sampled requires --m")
        est = rho_sampled(data, args.a, args.b, args.m, args.seed)
        print("metric=sampled")
        print(f"value={format_rational(est.estimate)}")
        print(f"cut_count={est.cut_count}")
        print(f"m={est.m}")
        print(f"seed={est.seed}")
        print(f"total_subsets={est.total_subsets}")
        print(f"degenerate_subsets={est.degenerate_subsets}")
    else:
        count = rho_exact(data, args.a, args.b)
        print("metric=exact")
        print(f"value={count.value}")
        print(f"total_subsets={data.n_subsets}")
        print(f"degenerate_subsets={count.degenerate_subsets}")
    return EXIT_OK


def cmd_predict(args) -> int:
    data = read_dataset(args.dataset)
    queries = read_points(args.queries)
    if any(len(q) != data.dim for q in queries):
        raise InputError(f"queries must have dimension {data.dim}")
    config = _config(args, data.n)
    preds = predict_batch(data, queries, config, n_jobs=args.jobs)
    text = predictions_csv(preds, config.tag)
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_invariance(args) -> int:
    kwargs = {}
    if args.data:
        data = read_dataset(args.data)
        queries = read_points(args.query_file) if args.query_file else list(data.points)
        kwargs.update(data=data, queries=queries)
        n, d = data.n, data.dim
    else:
        n, d = args.n, args.d
        if n < d:
            raise InputError(f"need n >= d, got n={n}, d={d}")
    if args.k > n:
        raise InputError(f"--k {args.k} exceeds n={n}")
    mode = "float" if args.unsafe_float_predicates else "filtered"
    report = run_invariance_suite(
        n, d, args.maps, [args.seed], k=args.k, n_queries=args.queries,
        identity=args.identity, mode=mode, **kwargs,
    )
    print(report.summary())
    print(f"{report.exact_violations} violations")
    return EXIT_OK if report.passed else EXIT_VIOLATION


_EXPERIMENT_KEYS = {
    "d", "design", "function", "noise", "seed", "bound",
    "n_grid", "k_schedule", "p", "queries", "replicates", "metric", "m",
}


def load_experiment_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InputError(f"{path}: top level must be an object")
    unknown = set(cfg) - _EXPERIMENT_KEYS
    if unknown:
        raise InputError(f"{path}: unknown keys {sorted(unknown)}")
    try:
        scenario = RegressionScenario(
            d=cfg.get("d", 2),
            design=cfg.get("design", "uniform"),
            function=cfg.get("function", "quadratic"),
            noise=cfg.get("noise", 0.1),
            seed=cfg.get("seed", 0),
            bound=cfg.get("bound"),
        )
    except (ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    options = dict(
        n_grid=cfg.get("n_grid", [50, 100, 200, 400]),
        schedule=cfg.get("k_schedule", "sqrt"),
        p=cfg.get("p", 2.0),
        n_queries=cfg.get("queries", 50),
        replicates=cfg.get("replicates", 10),
        metric=cfg.get("metric", "auto"),
        m=cfg.get("m", 2000),
    )
    if options["metric"] not in ("auto", "exact", "sampled", "euclidean", "rank"):
        raise InputError(f"{path}: unknown metric {options['metric']!r}")
    if not isinstance(options["n_grid"], list) or not options["n_grid"]:
        raise InputError(f"{path}: n_grid must be a non-empty list")
    for n in options["n_grid"]:
        if not isinstance(n, int) or n < scenario.d:
            raise InputError(f"{path}: every n in n_grid must be an integer >= d, got {n!r}")
    return scenario, options


def cmd_experiment(args) -> int:
    scenario, options = load_experiment_config(args.config)
    try:
        report = run_consistency_experiment(scenario, n_jobs=args.jobs, **options)
    except (ValueError, TypeError) as exc:
        raise InputError(f"{args.config}: {exc}") from exc
    write_atomic(args.out, report.to_csv(include_runtime=args.timings))
    summary = report.summary()
    if args.summary:
        write_atomic(args.summary, summary)
    sys.stdout.write(summary)
    return EXIT_OK


def cmd_bench(args) -> int:
    print(f"{'n':>6} {'d':>3} {'path':>8} {'seconds':>10} {'sign_evals':>14}")
    for n in args.n:
        if n < args.d:
            raise InputError(f"need n >= d, got n={n}, d={args.d}")
        scenario = RegressionScenario(d=args.d, function="constant", noise=0.0, seed=args.seed)
        data = generate_sample(scenario, n)
        x = data.points[0]
        paths = [("exact", lambda: HyperplaneTable.exact(data))]
        if args.m:
            paths.append(("sampled", lambda: HyperplaneTable.sampled(data, args.m, args.seed)))
        for name, build in paths:
            best = math.inf
            for _ in range(args.repeat):
                start = time.perf_counter()
                profile = build().profile(x)
                best = min(best, time.perf_counter() - start)
            print(f"{n:>6} {args.d:>3} {name:>8} {best:>10.4f} {profile.sign_evaluations:>14}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="affknn", description="Affine-invariant k-NN regression tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("distance", help="hyperplane-crossing distance between two points")
    p.add_argument("dataset")
    p.add_argument("--a", type=_point, required=True, help="comma-separated coordinates")
    p.add_argument("--b", type=_point, required=True)
    p.add_argument("--metric", choices=("exact", "sampled"), default="exact")
    p.add_argument("--m", type=_positive)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("predict", help="k-NN predictions for a query file")
    p.add_argument("dataset")
    p.add_argument("queries")
    p.add_argument("--k", type=_positive, required=True)
    p.add_argument("--metric", choices=("exact", "sampled", "euclidean", "rank"), default="exact")
    p.add_argument("--m", type=_positive)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=_positive, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("invariance", help="check exact affine invariance on random maps")
    p.add_argument("--n", type=_positive, default=30)
    p.add_argument("--d", type=_positive, default=2)
    p.add_argument("--k", type=_positive, default=5)
    p.add_argument("--maps", type=_positive, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--queries", type=_positive, default=5, help="generated queries per seed")
    p.add_argument("--data", help="dataset CSV to use instead of a generated one")
    p.add_argument("--query-file", help="query CSV for --data (default: the data points)")
    p.add_argument("--identity", action="store_true", help="use identity maps only")
    p.add_argument(
        "--unsafe-float-predicates", action="store_true",
        help="disable the exact fallback (mutation testing only)",
    )
    p.set_defaults(func=cmd_invariance)

    p = sub.add_parser("experiment", help="run a consistency experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.add_argument("--summary", help="also write the key=value summary here")
    p.add_argument("--timings", action="store_true", help="add a runtime column (not reproducible)")
    p.add_argument("--jobs", type=_positive, default=1)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bench", help="time exact and sampled distance profiles")
    p.add_argument("--n", type=_int_list, default=[20, 40, 80])
    p.add_argument("--d", type=_positive, default=2)
    p.add_argument("--m", type=int, default=500, help="sampled hyperplanes; 0 skips the sampled path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeat", type=_positive, default=1)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, TypeError) as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
