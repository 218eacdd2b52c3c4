"""Command-line interface: dataset catalog, estimator runs, evaluation
harnesses, and figure emission (CSV always, static SVG on request)."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bias import bias_curve, beta_bias_summary
from .catalog import available_datasets, load_dataset
from .data import CellProbabilities, DataError, Dataset, serialize_dataset, \
    simulate_counts, summarize_dataset
from .estimate import config_fingerprint
from .estimators import ESTIMATOR_NAMES, make_estimator
from .evaluation import SWEEP_KINDS, consistency_csv_rows, consistency_metrics, \
    estimate_trajectory, run_internal_consistency, sensitivity_sweep, sweep_csv_rows, \
    trajectory_csv_rows
from .graphs import enumerate_decomposable_graphs
from .svgfig import render_figure


@dataclass
class RunRecord:
    command_line: list[str]
    fingerprint: str
    seed: Optional[int]
    wall_time_s: float
    version: str
    outputs: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"


def _csv_text(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return out.getvalue()


def _emit(text: str, output: Optional[str], outputs: list[str]) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
        outputs.append(output)


def _resolve_seed(args) -> int:
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().generate_state(1)[0] % 2**31)
    print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _parse_grid(text: str) -> list[float]:
    """Comma list, or start:stop[:lin|log[:count]] (count defaults to 50)."""
    if ":" in text:
        parts = text.split(":")
        start, stop = float(parts[0]), float(parts[1])
        scale = parts[2] if len(parts) > 2 else "lin"
        count = int(parts[3]) if len(parts) > 3 else 50
        if scale == "log":
            if start <= 0:
                raise DataError("log grid needs a positive start")
            return list(np.geomspace(start, stop, count))
        if scale != "lin":
            raise DataError(f"unknown grid scale {scale!r}; use lin or log")
        return list(np.linspace(start, stop, count))
    return [float(v) for v in text.split(",") if v.strip()]


def _load(name: str) -> Dataset:
    try:
        return load_dataset(name)
    except DataError:
        raise SystemExitError(
            f"unknown dataset {name!r}; catalog: {', '.join(available_datasets())}"
        )


class SystemExitError(RuntimeError):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msekit",
        description="Multiple systems estimation: estimators, bias analysis, "
                    "and robustness diagnostics for list-overlap count data.",
    )
    parser.add_argument("--version", action="version", version=f"msekit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed=True):
        p.add_argument("--format", choices=["csv", "json", "svg"], default="csv")
        p.add_argument("--output", help="write the result here instead of stdout")
        p.add_argument("--record", help="write a JSON run record here")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker pool size for independent subtasks "
                            "(default: available parallelism)")
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="random seed; drawn and printed when omitted")

    p = sub.add_parser("datasets", help="list the embedded dataset catalog")
    add_common(p, seed=False)

    p = sub.add_parser("estimate", help="run one estimator on one dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--estimator", required=True)
    p.add_argument("--threshold", type=float, default=0.02,
                   help="sparsemse selection p-value threshold (default 0.02)")
    p.add_argument("--kappa", type=float, default=0.5,
                   help="dga prior-count inclusion probability (default 0.5)")
    p.add_argument("--edge-beta", type=float, default=0.5,
                   help="dga graph-prior edge probability (default 0.5)")
    p.add_argument("--nmax", type=int, default=None,
                   help="dga population grid bound (default 100x observed)")
    p.add_argument("--chains", type=int, default=200,
                   help="lcmcr chain count (default 200)")
    p.add_argument("--iters", type=int, default=100000,
                   help="lcmcr iterations per chain (default 100000)")
    p.add_argument("--thin", type=int, default=100,
                   help="lcmcr retained draws per chain (default 100)")
    p.add_argument("--kmax", type=int, default=10,
                   help="lcmcr latent class cap (default 10)")
    p.add_argument("--replicates", type=int, default=1000,
                   help="bootstrap replicates (default 1000)")
    p.add_argument("--level", type=float, default=0.95,
                   help="interval level (default 0.95)")
    p.add_argument("--dump-draws", default=None, metavar="PATH",
                   help="lcmcr only: write raw retained draws as CSV")
    add_common(p)

    p = sub.add_parser("consistency", help="reference-list internal consistency harness")
    p.add_argument("--data", default=",".join(available_datasets()),
                   help="comma list of datasets (default: all)")
    p.add_argument("--estimators", default=",".join(ESTIMATOR_NAMES))
    p.add_argument("--budget", choices=["reduced", "full"], default="reduced")
    p.add_argument("--min-obs", type=int, default=30,
                   help="exclusion floor for conditioned tables (default 30)")
    p.add_argument("--metrics", action="store_true",
                   help="emit per-estimator summary metrics instead of rows")
    add_common(p)

    p = sub.add_parser("trajectory", help="estimates along a hypothetical observation order")
    p.add_argument("--data", required=True)
    p.add_argument("--estimator", required=True)
    p.add_argument("--budget", choices=["reduced", "full"], default="reduced")
    p.add_argument("--checkpoints", default=None,
                   help="comma list or start:stop[:lin|log[:count]]; default 50 points")
    p.add_argument("--truth", type=float, default=None,
                   help="horizontal truth rule for svg output")
    add_common(p)

    p = sub.add_parser("sweep", help="hyperparameter sensitivity sweep")
    p.add_argument("--data", required=True)
    p.add_argument("--kind", required=True, choices=SWEEP_KINDS)
    p.add_argument("--grid", required=True)
    p.add_argument("--budget", choices=["reduced", "full"], default="reduced")
    add_common(p)

    p = sub.add_parser("bias", help="heterogeneity-induced asymptotic bias")
    p.add_argument("--curve", action="store_true",
                   help="emit the bias-vs-precision curve table")
    p.add_argument("--p0", type=float, default=0.75,
                   help="target unobserved probability (default 0.75)")
    p.add_argument("--lists", default="2,3,4,5,6",
                   help="comma list of list counts (default 2,3,4,5,6)")
    p.add_argument("--precision", default="0.5:100:log",
                   help="precision grid (default 0.5:100:log)")
    p.add_argument("--beta", default=None, metavar="A,B",
                   help="single Beta model report instead of a curve")
    add_common(p, seed=False)

    p = sub.add_parser("graphs", help="enumerate decomposable graphs")
    p.add_argument("--lists", type=int, required=True)
    p.add_argument("--include-complete", action="store_true")
    p.add_argument("--cache", default=None, help="bitmask cache file")
    add_common(p, seed=False)

    p = sub.add_parser("simulate", help="simulate an observed count table")
    p.add_argument("--lists", type=int, required=True)
    p.add_argument("--per-list", default=None,
                   help="comma list of per-list inclusion probabilities (independence)")
    p.add_argument("--beta", default=None, metavar="A,B",
                   help="Beta heterogeneity model for the cell probabilities")
    p.add_argument("--n", type=int, required=True, help="population size")
    add_common(p)
    return parser


def _cmd_datasets(args, outputs) -> None:
    rows = []
    for name in available_datasets():
        d = load_dataset(name)
        s = summarize_dataset(d)
        rows.append({"name": name, "n_obs": s.n_obs, "overlap": s.overlap,
                     "n_lists": d.table.n_lists, "timeframe": d.timeframe})
    if args.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", args.output, outputs)
    else:
        _emit(_csv_text(rows), args.output, outputs)


def _cmd_estimate(args, outputs) -> None:
    if args.estimator not in ESTIMATOR_NAMES:
        raise SystemExitError(
            f"unknown estimator {args.estimator!r}; choose from: "
            + ", ".join(ESTIMATOR_NAMES)
        )
    dataset = _load(args.data)
    seed = _resolve_seed(args)
    overrides = {
        "independence": {"bootstrap": args.replicates, "level": args.level},
        "sparsemse": {"threshold": args.threshold, "bootstrap": args.replicates,
                      "level": args.level},
        "dga": {"kappa": args.kappa, "edge_beta": args.edge_beta,
                "n_max": args.nmax, "level": args.level},
        "lcmcr": {"chains": args.chains, "iterations": args.iters, "keep": args.thin,
                  "max_classes": args.kmax, "level": args.level},
    }[args.estimator]
    if args.estimator == "lcmcr" and args.dump_draws:
        from .lcmcr import LcmcrConfig, draws_csv, multi_chain_posterior
        config = LcmcrConfig(max_classes=args.kmax, iterations=args.iters,
                             keep=args.thin, chains=args.chains, seed=seed)
        estimate, samples = multi_chain_posterior(dataset.table, config,
                                                  level=args.level)
        with open(args.dump_draws, "w", encoding="utf-8") as fh:
            fh.write(draws_csv(samples))
        outputs.append(args.dump_draws)
    else:
        estimator = make_estimator(args.estimator, **overrides)
        estimate = estimator.run(dataset.table, seed)
    payload = estimate.to_json_dict()
    payload["dataset"] = dataset.name
    if args.format == "json":
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.output, outputs)
    else:
        row = {k: payload[k] for k in
               ("dataset", "estimator", "point", "lower", "upper", "level", "seed",
                "fingerprint")}
        _emit(_csv_text([row]), args.output, outputs)


def _cmd_consistency(args, outputs) -> None:
    seed = _resolve_seed(args)
    datasets = [_load(n.strip()) for n in args.data.split(",") if n.strip()]
    names = [n.strip() for n in args.estimators.split(",") if n.strip()]
    for n in names:
        if n not in ESTIMATOR_NAMES:
            raise SystemExitError(f"unknown estimator {n!r}; choose from: "
                                  + ", ".join(ESTIMATOR_NAMES))
    estimators = [make_estimator(n, budget=args.budget) for n in names]
    results = run_internal_consistency(datasets, estimators, min_obs=args.min_obs,
                                       seed=seed, jobs=args.jobs)
    if args.metrics:
        metrics = consistency_metrics(results)
        rows = [{"estimator": m.estimator, "mean": m.mean, "rmse": m.rmse,
                 "median": m.median, "coverage": m.coverage, "n_rows": m.n_rows,
                 "coverage_all_rows": m.coverage_all_rows, "n_rows_all": m.n_rows_all}
                for m in metrics.values()]
    else:
        rows = consistency_csv_rows(results)
    if args.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", args.output, outputs)
    elif args.format == "svg":
        _emit(render_figure(rows, "consistency-dots"), args.output, outputs)
    else:
        _emit(_csv_text(rows), args.output, outputs)


def _cmd_trajectory(args, outputs) -> None:
    if args.estimator not in ESTIMATOR_NAMES:
        raise SystemExitError(f"unknown estimator {args.estimator!r}; choose from: "
                              + ", ".join(ESTIMATOR_NAMES))
    dataset = _load(args.data)
    seed = _resolve_seed(args)
    estimator = make_estimator(args.estimator, budget=args.budget)
    checkpoints = None
    if args.checkpoints:
        checkpoints = [int(v) for v in _parse_grid(args.checkpoints)]
    series = estimate_trajectory(dataset, estimator, checkpoints=checkpoints,
                                 seed=seed, jobs=args.jobs)
    rows = trajectory_csv_rows(series)
    if args.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", args.output, outputs)
    elif args.format == "svg":
        _emit(render_figure(rows, "trajectory", truth=args.truth), args.output, outputs)
    else:
        _emit(_csv_text(rows), args.output, outputs)


def _cmd_sweep(args, outputs) -> None:
    dataset = _load(args.data)
    seed = _resolve_seed(args)
    grid = _parse_grid(args.grid)
    budget_kwargs = {}
    if args.kind == "sparsemse-threshold":
        budget_kwargs["bootstrap"] = 1000 if args.budget == "full" else 200
    points = sensitivity_sweep(dataset, args.kind, grid, seed=seed, jobs=args.jobs,
                               **budget_kwargs)
    rows = sweep_csv_rows(args.kind, points)
    if args.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", args.output, outputs)
    elif args.format == "svg":
        _emit(render_figure(rows, "sweep-band"), args.output, outputs)
    else:
        _emit(_csv_text(rows), args.output, outputs)


def _cmd_bias(args, outputs) -> None:
    if args.beta is not None:
        a, b = (float(v) for v in args.beta.split(","))
        lists = [int(v) for v in args.lists.split(",")]
        rows = []
        for L in lists:
            report = beta_bias_summary(a, b, L)
            rows.append({"L": L, "a": a, "b": b, "gamma": report.gamma,
                         "p0": report.p_zero, "relative_bias": report.relative_bias})
    else:
        lists = [int(v) for v in args.lists.split(",")]
        grid = _parse_grid(args.precision)
        points = bias_curve(args.p0, lists, grid)
        rows = [{"L": p.n_lists, "precision": p.precision, "a": p.a, "b": p.b,
                 "gamma": p.gamma, "p0": p.p_zero, "relative_bias": p.relative_bias}
                for p in points]
    if args.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", args.output, outputs)
    elif args.format == "svg":
        _emit(render_figure(rows, "bias-curve"), args.output, outputs)
    else:
        _emit(_csv_text(rows), args.output, outputs)


def _cmd_graphs(args, outputs) -> None:
    graphs = enumerate_decomposable_graphs(args.lists,
                                           include_complete=args.include_complete,
                                           cache_path=args.cache)
    rows = [{"index": i, "n_edges": g.n_edges, "bitmask": g.edge_bitmask(),
             "cliques": ";".join("".join(str(v) for v in sorted(c)) for c in g.cliques)}
            for i, g in enumerate(graphs)]
    if args.cache:
        outputs.append(args.cache)
    if args.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", args.output, outputs)
    else:
        _emit(_csv_text(rows), args.output, outputs)


def _cmd_simulate(args, outputs) -> None:
    seed = _resolve_seed(args)
    if (args.per_list is None) == (args.beta is None):
        raise SystemExitError("give exactly one of --per-list or --beta")
    if args.per_list is not None:
        probs = [float(v) for v in args.per_list.split(",")]
        if len(probs) != args.lists:
            raise SystemExitError(f"expected {args.lists} per-list probabilities")
        cells = CellProbabilities.independent(probs)
    else:
        from .bias import BetaHeterogeneity, heterogeneity_cell_probs
        a, b = (float(v) for v in args.beta.split(","))
        cells = heterogeneity_cell_probs(BetaHeterogeneity(a, b, args.lists))
    table = simulate_counts(cells, args.n, seed)
    text = serialize_dataset(Dataset(name="simulated", table=table))
    _emit(text, args.output, outputs)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    start = time.monotonic()
    outputs: list[str] = []
    handlers = {
        "datasets": _cmd_datasets,
        "estimate": _cmd_estimate,
        "consistency": _cmd_consistency,
        "trajectory": _cmd_trajectory,
        "sweep": _cmd_sweep,
        "bias": _cmd_bias,
        "graphs": _cmd_graphs,
        "simulate": _cmd_simulate,
    }
    try:
        handlers[args.command](args, outputs)
    except SystemExitError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except DataError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if args.record:
        record = RunRecord(
            command_line=["msekit", *argv],
            fingerprint=config_fingerprint({"argv": argv, "version": __version__}),
            seed=getattr(args, "seed", None),
            wall_time_s=round(time.monotonic() - start, 3),
            version=__version__,
            outputs=outputs,
        )
        with open(args.record, "w", encoding="utf-8") as fh:
            fh.write(record.to_json())
    return 0


if __name__ == "__main__":
    sys.exit(main())
