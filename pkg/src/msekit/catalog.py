"""Embedded dataset catalog with load-time validation.

Five modern-slavery MSE datasets ship with the package as pattern-count CSV
fixtures.  The UK table reproduces the published cell counts exactly.  The
other four studies published only aggregate summaries; their fixtures are
synthetic reconstructions that match every published total exactly
(observation counts, overlap counts, list counts, and per-list
reference-conditioning sizes).  Each table is validated against its expected
(n_obs, overlap, n_lists) checksum at load time.

Set MSEKIT_DATA_DIR to a directory of `<name>.csv` files to override the
embedded catalog.
"""

from __future__ import annotations

import os
from importlib import resources

from .data import DataError, Dataset, parse_dataset

# name -> (n_obs, overlap, n_lists)
CHECKSUMS: dict[str, tuple[int, int, int]] = {
    "uk": (2744, 221, 5),
    "new-orleans": (185, 12, 5),
    "netherlands": (8234, 431, 5),
    "western-us": (345, 23, 5),
    "australia": (414, 69, 4),
}

_META: dict[str, tuple[str, str]] = {
    "uk": (
        "UK national strategic assessment of potential victims "
        "(Silverman 2014; Bales, Hesketh & Silverman 2015); published cell counts.",
        "2013",
    ),
    "new-orleans": (
        "Greater New Orleans study (Bales, Murphy & Silverman 2019); synthetic "
        "cells consistent with the published totals.",
        "2016",
    ),
    "netherlands": (
        "CoMensha registry of presumed victims, Netherlands (van Dijk, Cruyff, "
        "van der Heijden & Kragten-Heerdink 2017); synthetic cells consistent "
        "with the published totals and per-list conditioning sizes.",
        "2010-2015",
    ),
    "western-us": (
        "Western U.S. site study (Farrell et al. 2019); synthetic cells "
        "consistent with the published totals.",
        "2016",
    ),
    "australia": (
        "Australian Federal Police data (Lyneham, Dowling & Bricknell 2019); "
        "synthetic cells consistent with the published totals and per-list "
        "conditioning sizes.",
        "2015-16 to 2016-17",
    ),
}

ENV_DATA_DIR = "MSEKIT_DATA_DIR"


def available_datasets() -> list[str]:
    return sorted(CHECKSUMS)


def _read_text(name: str, data_dir: str | None) -> str:
    if data_dir is None:
        data_dir = os.environ.get(ENV_DATA_DIR) or None
    if data_dir is not None:
        path = os.path.join(data_dir, f"{name}.csv")
        if not os.path.exists(path):
            raise DataError(f"no file {path} for dataset {name!r}")
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    if name not in CHECKSUMS:
        raise DataError(f"unknown dataset {name!r}; catalog has {available_datasets()}")
    return (resources.files("msekit") / "data" / f"{name}.csv").read_text(encoding="utf-8")


def load_dataset(name: str, data_dir: str | None = None) -> Dataset:
    """Load a catalog dataset (or an override from a data directory) and
    verify its summary checksums when the name is a known one."""
    text = _read_text(name, data_dir)
    d = parse_dataset(text, name)
    if name in CHECKSUMS:
        n_obs, overlap, n_lists = CHECKSUMS[name]
        got = (d.table.n_obs, d.table.overlap, d.table.n_lists)
        if got != (n_obs, overlap, n_lists):
            raise DataError(
                f"dataset {name!r} failed validation: (n_obs, overlap, n_lists) "
                f"= {got}, expected {(n_obs, overlap, n_lists)}"
            )
        provenance, timeframe = _META[name]
        d = Dataset(name=name, table=d.table, provenance=provenance, timeframe=timeframe)
    return d


def load_all(data_dir: str | None = None) -> list[Dataset]:
    return [load_dataset(name, data_dir) for name in available_datasets()]
