#!/usr/bin/env python3
"""Estimate trajectories: how the estimate would have evolved had the cases
arrived in a random order, extended to twice the observed count."""

import argparse
import csv
import pathlib
import sys

from msekit.catalog import load_dataset
from msekit.estimators import make_estimator
from msekit.evaluation import estimate_trajectory, trajectory_csv_rows
from msekit.svgfig import render_figure


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", default="uk")
    parser.add_argument("--estimator", default="dga")
    parser.add_argument("--budget", choices=["reduced", "full"], default="reduced")
    parser.add_argument("--seeds", type=int, default=50)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--outdir", default="results")
    args = parser.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(args.data)
    estimator = make_estimator(args.estimator, budget=args.budget)
    rows = []
    for seed in range(args.seeds):
        series = estimate_trajectory(dataset, estimator, seed=seed, jobs=args.jobs)
        rows.extend(trajectory_csv_rows(series))
        print(f"seed {seed}: {sum(p.estimate is not None for p in series.points)}"
              f"/{len(series.points)} checkpoints")
    name = f"{dataset.name}_{estimator.name}_trajectories"
    with open(outdir / f"{name}.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    with open(outdir / f"{name}.svg", "w", encoding="utf-8") as fh:
        fh.write(render_figure(rows, "trajectory"))
    print(f"wrote {outdir}/{name}.csv and .svg")
    return 0


if __name__ == "__main__":
    sys.exit(main())
