"""Command-line interface.

Subcommands: ``generate`` (synthetic datasets), ``fit`` (one clustering
run), ``bench`` (config-driven benchmark) and ``metrics`` (compare two
label files).  Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness, metrics
from .baselines import gmm_em, kmeans
from .elliptic import builtin_setup, generate_setup, save_dataset_csv
from .fem import FitConfig, fit


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="flexem",
                     description="Robust EM clustering for elliptical mixtures")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic benchmark dataset")
    gen.add_argument("--setup", type=int, required=True, choices=range(1, 6),
                     help="builtin setup number")
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.add_argument("--seed", type=int, default=0)

    fit_p = sub.add_parser("fit", help="cluster a CSV dataset")
    fit_p.add_argument("--in", dest="data", required=True, help="input CSV path")
    fit_p.add_argument("--k", type=int, required=True, help="number of clusters")
    fit_p.add_argument("--algo", default="fem", choices=("fem", "gmm", "kmeans"))
    fit_p.add_argument("--version", type=int, default=1, choices=(1, 2, 3, 4),
                       help="fixed-point update variant (fem only)")
    fit_p.add_argument("--seed", type=int, default=0)
    fit_p.add_argument("--labels", action="store_true",
                       help="input has a final label column to strip")
    fit_p.add_argument("--out", help="write the fit report as JSON")

    bench = sub.add_parser("bench", help="run a config-driven benchmark")
    bench.add_argument("--config", required=True, help="TOML or JSON config file")
    bench.add_argument("--out", help="output prefix (overrides the config)")
    bench.add_argument("--jobs", type=int, help="parallel repetitions")

    met = sub.add_parser("metrics", help="score predicted labels against truth")
    met.add_argument("--pred", required=True, help="CSV of predicted labels")
    met.add_argument("--truth", required=True, help="CSV of true labels")
    met.add_argument("--exclude-noise", action="store_true",
                     help="drop rows labelled -1 before scoring")
    return parser


def _read_labels(path) -> np.ndarray:
    data, _ = harness.load_csv(path)
    column = data[:, -1]
    if not np.all(column == np.round(column)):
        raise ValueError(f"{path}: labels must be integers")
    return column.astype(int)


def _cmd_generate(args) -> int:
    spec = builtin_setup(args.setup)
    sample = generate_setup(spec, np.random.default_rng(args.seed))
    save_dataset_csv(sample.data, sample.labels, args.out)
    print(f"wrote {sample.data.shape[0]} x {sample.data.shape[1]} dataset to {args.out}")
    return 0


def _cmd_fit(args) -> int:
    X, _ = harness.load_csv(args.data, has_labels=args.labels)
    if args.algo == "kmeans":
        res = kmeans(X, args.k, seed=args.seed)
        report = {"schema": 1, "algorithm": "kmeans",
                  "labels": [int(v) for v in res.labels],
                  "centers": res.centers.tolist(),
                  "inertia": res.inertia}
    else:
        cfg = FitConfig(version=args.version, seed=args.seed)
        fitted = fit(X, args.k, cfg) if args.algo == "fem" else gmm_em(X, args.k, cfg)
        report = fitted.to_dict()
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote fit report to {args.out}")
    else:
        print(text)
    return 0


def _cmd_bench(args) -> int:
    cfg = harness.load_config(args.config)
    from dataclasses import replace

    if args.out:
        cfg = replace(cfg, output=args.out)
    if args.jobs:
        cfg = replace(cfg, jobs=args.jobs)
    result = harness.run_experiment(cfg)
    prefix = cfg.output or "bench"
    paths = harness.emit_results(result, prefix)
    for algo, stats in sorted(result.aggregates["algorithms"].items()):
        cells = []
        for name in ("ari", "ami", "accuracy"):
            if name in stats:
                cells.append(f"{name} median={stats[name]['median']:.4f}")
        print(f"{algo}: " + (", ".join(cells) if cells else "done")
              + (f", failures={stats['failures']}" if stats["failures"] else ""))
    print("wrote " + ", ".join(paths))
    return 0


def _cmd_metrics(args) -> int:
    pred = _read_labels(args.pred)
    truth = _read_labels(args.truth)
    values = {
        "ari": metrics.ari(truth, pred, exclude_noise=args.exclude_noise),
        "ami": metrics.ami(truth, pred, exclude_noise=args.exclude_noise),
        "accuracy": metrics.accuracy(pred, truth, exclude_noise=args.exclude_noise),
    }
    print(json.dumps(values, indent=2))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    handlers = {"generate": _cmd_generate, "fit": _cmd_fit,
                "bench": _cmd_bench, "metrics": _cmd_metrics}
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 2
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
