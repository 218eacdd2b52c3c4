#!/usr/bin/env python3
"""Heterogeneity bias curve: asymptotic relative bias of estimators that
assume no highest-order interaction, as a function of the Beta precision
parameter, plus a Monte Carlo spot check of the closed form."""

import argparse
import csv
import pathlib
import sys

import numpy as np

from msekit.bias import BetaHeterogeneity, bias_curve, empirical_bias_check, \
    heterogeneity_cell_probs
from msekit.loglinear import LogLinearModel, fit_loglinear
from msekit.svgfig import render_figure


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--p0", type=float, default=0.75)
    parser.add_argument("--lists", default="2,3,4,5,6")
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--check", action="store_true",
                        help="Monte Carlo spot check at two-list Beta(1, 8)")
    args = parser.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    lists = [int(v) for v in args.lists.split(",")]
    grid = np.geomspace(0.5, 100, 50)
    points = bias_curve(args.p0, lists, grid)
    rows = [{"L": p.n_lists, "precision": p.precision, "a": p.a, "b": p.b,
             "gamma": p.gamma, "p0": p.p_zero, "relative_bias": p.relative_bias}
            for p in points]
    with open(outdir / "bias_curve.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    with open(outdir / "bias_curve.svg", "w", encoding="utf-8") as fh:
        fh.write(render_figure(rows, "bias-curve"))
    print(f"wrote {outdir}/bias_curve.csv and .svg")

    if args.check:
        def consistent_reference(table):
            # all two-way terms; at two lists this is the independence model
            return fit_loglinear(table, LogLinearModel.all_two_way(table.n_lists)).n_hat
        cells = heterogeneity_cell_probs(BetaHeterogeneity(1.0, 8.0, 2))
        for row in empirical_bias_check(cells, consistent_reference, [10**4, 10**6],
                                        replicates=50, seed=1):
            print(f"N={row.population_size}: mean ratio {row.mean_ratio:.4f} "
                  f"+- {row.se_ratio:.4f} (asymptote {1 - 4/9:.4f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
