#!/usr/bin/env python3
"""Hyperparameter sensitivity sweeps: the stepwise selection threshold, and
the two graphical-model prior parameters."""

import argparse
import csv
import pathlib
import sys

import numpy as np

from msekit.catalog import load_dataset
from msekit.evaluation import sensitivity_sweep, sweep_csv_rows
from msekit.svgfig import render_figure


def write(outdir, name, rows):
    with open(outdir / f"{name}.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    with open(outdir / f"{name}.svg", "w", encoding="utf-8") as fh:
        fh.write(render_figure(rows, "sweep-band"))
    print(f"wrote {outdir}/{name}.csv and .svg")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", default="uk")
    parser.add_argument("--seed", type=int, default=90)
    parser.add_argument("--bootstrap", type=int, default=1000)
    parser.add_argument("--points", type=int, default=21)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--outdir", default="results")
    args = parser.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(args.data)

    grid = np.linspace(0.001, 0.1, args.points)
    points = sensitivity_sweep(dataset, "sparsemse-threshold", grid, seed=args.seed,
                               jobs=args.jobs, bootstrap=args.bootstrap)
    write(outdir, f"{dataset.name}_threshold_sweep",
          sweep_csv_rows("sparsemse-threshold", points))

    grid = np.linspace(0.02, 0.5, args.points)
    points = sensitivity_sweep(dataset, "dga-kappa", grid, seed=args.seed,
                               jobs=args.jobs, edge_beta=0.5)
    write(outdir, f"{dataset.name}_kappa_sweep", sweep_csv_rows("dga-kappa", points))

    grid = np.linspace(0.02, 0.98, args.points)
    for kappa, label in [(0.5, "beta_sweep_kappa05"), (0.1, "beta_sweep_kappa01")]:
        points = sensitivity_sweep(dataset, "dga-beta", grid, seed=args.seed,
                                   jobs=args.jobs, kappa=kappa)
        write(outdir, f"{dataset.name}_{label}", sweep_csv_rows("dga-beta", points))
    return 0


if __name__ == "__main__":
    sys.exit(main())
