"""Command line: run one optimizer, sweep a benchmark suite, plot traces.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Optional

from . import report
from .config import (ConfigError, RunConfig, SuiteConfig, build_run_config,
                     config_hash, load_run_config, load_suite_config)
from .runner import RunReport, run_config

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _write_run_artifacts(cfg: RunConfig, rep: RunReport) -> str:
    os.makedirs(cfg.outdir, exist_ok=True)
    trace_path = os.path.join(cfg.outdir, "trace.csv")
    report.write_trace(trace_path, rep.rows)
    report.write_summary(os.path.join(cfg.outdir, "summary.json"), rep,
                         config_hash(cfg),
                         extra={"function": cfg.function, "algorithm": cfg.algorithm,
                                "n": cfg.n, "seed": cfg.seed})
    if cfg.figures and rep.rows:
        label = f"{cfg.function}/{cfg.algorithm} seed {cfg.seed}"
        report.plot_traces([(label, rep.rows)],
                           os.path.join(cfg.outdir, "trace.svg"),
                           title=f"{cfg.function} (n={cfg.n})")
    return trace_path


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_run_config(args.config, profile=args.profile)
    rep = run_config(cfg)
    _write_run_artifacts(cfg, rep)
    print(f"{cfg.function} {cfg.algorithm} n={cfg.n} seed={cfg.seed}: "
          f"f*={rep.f_star:.6e} evals={rep.total_evals} "
          f"wall={rep.total_wall_s:.1f}s -> {cfg.outdir}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    suite = load_suite_config(args.suite, profile=args.profile)
    os.makedirs(suite.outdir, exist_ok=True)
    median_rows: list[dict] = []
    curves_by_function: dict[str, list[tuple[str, list]]] = {}
    for function in suite.functions:
        for algorithm in suite.algorithms:
            traces = []
            for seed in suite.seeds:
                cell = dict(suite.base)
                cell_dir = os.path.join(suite.outdir, function, algorithm, f"seed{seed}")
                cell.update(function=function, algorithm=algorithm, seed=seed,
                            outdir=cell_dir)
                cfg = build_run_config(cell, profile=args.profile)
                try:
                    rep = run_config(cfg)
                except Exception as exc:
                    print(f"cell {function}/{algorithm}/seed{seed} failed: {exc}",
                          file=sys.stderr)
                    median_rows.append({"function": function, "algorithm": algorithm,
                                        "status": f"failed seed={seed}"})
                    continue
                _write_run_artifacts(cfg, rep)
                traces.append(rep.rows)
            curve = report.median_curves(traces)
            for idx, med_evals, med_best in curve:
                median_rows.append({"function": function, "algorithm": algorithm,
                                    "epoch": idx, "median_evals": repr(med_evals),
                                    "median_best_f": repr(med_best), "status": "ok"})
            if curve:
                from .runner import EpochRecord
                rows = [EpochRecord(int(i), int(e), 0.0, b, math.nan)
                        for i, e, b in curve]
                curves_by_function.setdefault(function, []).append((algorithm, rows))
    report.write_medians(os.path.join(suite.outdir, "medians.csv"), median_rows)
    for function, labeled in curves_by_function.items():
        report.plot_traces(labeled,
                           os.path.join(suite.outdir, f"{function}_medians.svg"),
                           title=f"{function}: median best cost across seeds")
    print(f"suite done -> {suite.outdir}")
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    labeled = []
    for path in args.traces:
        rows = report.read_trace(path)
        stem = os.path.splitext(os.path.basename(path))[0]
        parent = os.path.basename(os.path.dirname(path))
        labeled.append((f"{parent}/{stem}" if parent else stem, rows))
    report.plot_traces(labeled, args.output, x_axis=args.x_axis, floor=args.floor)
    print(f"wrote {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metaes",
        description="Island-parallel limited-memory CMA optimizer and benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured optimization")
    p_run.add_argument("config", help="YAML run config")
    p_run.add_argument("--profile", choices=["paper"], default=None,
                       help="preset defaults merged under the config file")
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="run a functions x algorithms x seeds suite")
    p_bench.add_argument("suite", help="YAML suite config")
    p_bench.add_argument("--profile", choices=["paper"], default=None)
    p_bench.set_defaults(func=cmd_bench)

    p_plot = sub.add_parser("plot", help="plot recorded traces to an image file")
    p_plot.add_argument("traces", nargs="+", help="trace.csv files")
    p_plot.add_argument("-o", "--output", required=True, help="output image path (.svg)")
    p_plot.add_argument("--x-axis", choices=["evals", "wall_s"], default="evals")
    p_plot.add_argument("--floor", type=float, default=report.PLOT_FLOOR,
                        help="clip costs below this value for log plotting")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except report.TraceFormatError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
