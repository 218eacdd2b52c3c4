"""Count-table data model for list-overlap (multiple systems / capture-recapture) data.

The universal input to every estimator is a table of counts n_x indexed by
non-zero list-inclusion patterns x in {0,1}^L: n_x is the number of
individuals recorded by exactly the lists flagged in x.  The all-zero
pattern (individuals on no list) is unobservable and never stored.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent count-table input."""


@dataclass(frozen=True, order=True)
class InclusionPattern:
    """Fixed-length binary vector of list memberships for one individual."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) == 0:
            raise DataError("empty inclusion pattern")
        if any(b not in (0, 1) for b in self.bits):
            raise DataError(f"pattern bits must be 0/1, got {self.bits}")

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def order(self) -> int:
        """Number of lists the pattern includes (|x|)."""
        return sum(self.bits)

    @property
    def is_zero(self) -> bool:
        return self.order == 0

    def sort_key(self) -> tuple[int, tuple[int, ...]]:
        """Canonical ordering: by |x| first, then lexicographic bits."""
        return (self.order, self.bits)

    @classmethod
    def of(cls, *bits: int) -> "InclusionPattern":
        return cls(tuple(bits))

    def drop(self, index: int) -> "InclusionPattern":
        """Pattern with the given list position removed."""
        return InclusionPattern(self.bits[:index] + self.bits[index + 1:])

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


def all_patterns(n_lists: int, include_zero: bool = False) -> list[InclusionPattern]:
    """Every pattern in {0,1}^L in canonical (|x|, lexicographic) order."""
    pats = []
    for mask in range(2 ** n_lists):
        bits = tuple((mask >> (n_lists - 1 - j)) & 1 for j in range(n_lists))
        p = InclusionPattern(bits)
        if p.is_zero and not include_zero:
            continue
        pats.append(p)
    pats.sort(key=InclusionPattern.sort_key)
    return pats


@dataclass(frozen=True)
class CountTable:
    """Observed counts over non-zero inclusion patterns.

    Absent patterns mean count zero.  Immutable after construction and safe
    to share across workers.
    """

    list_names: tuple[str, ...]
    counts: Mapping[InclusionPattern, int]

    def __post_init__(self):
        L = len(self.list_names)
        if L < 1:
            raise DataError("need at least one list")
        if len(set(self.list_names)) != L:
            raise DataError("list names must be distinct")
        clean: dict[InclusionPattern, int] = {}
        for pat, n in self.counts.items():
            if len(pat) != L:
                raise DataError(f"pattern {pat} has length {len(pat)}, expected {L}")
            if pat.is_zero:
                raise DataError("zero pattern not allowed in a count table")
            if not isinstance(n, (int, np.integer)) or n < 0:
                raise DataError(f"count for {pat} must be a nonnegative integer, got {n!r}")
            if int(n) > 0:
                clean[pat] = int(n)
        object.__setattr__(self, "counts", clean)

    @property
    def n_lists(self) -> int:
        return len(self.list_names)

    @property
    def n_obs(self) -> int:
        return sum(self.counts.values())

    @property
    def overlap(self) -> int:
        """Individuals recorded by two or more lists."""
        return sum(n for pat, n in self.counts.items() if pat.order >= 2)

    def list_total(self, name: str) -> int:
        j = self.list_index(name)
        return sum(n for pat, n in self.counts.items() if pat.bits[j] == 1)

    def list_totals(self) -> dict[str, int]:
        return {name: self.list_total(name) for name in self.list_names}

    def list_index(self, name: str) -> int:
        try:
            return self.list_names.index(name)
        except ValueError:
            raise DataError(f"unknown list {name!r}; have {list(self.list_names)}") from None

    def items_sorted(self) -> list[tuple[InclusionPattern, int]]:
        return sorted(self.counts.items(), key=lambda kv: kv[0].sort_key())

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """All 2^L - 1 non-zero patterns (canonical order) and their counts."""
        pats = all_patterns(self.n_lists)
        X = np.array([p.bits for p in pats], dtype=np.int64)
        y = np.array([self.counts.get(p, 0) for p in pats], dtype=np.float64)
        return X, y

    def observed(self) -> tuple[np.ndarray, np.ndarray]:
        """Patterns with positive counts (canonical order) and their counts."""
        items = self.items_sorted()
        X = np.array([p.bits for p, _ in items], dtype=np.int64).reshape(len(items), self.n_lists)
        y = np.array([n for _, n in items], dtype=np.int64)
        return X, y

    def expand(self) -> np.ndarray:
        """Multiset of individual patterns, shape (n_obs, L), canonical order."""
        rows = []
        for pat, n in self.items_sorted():
            rows.extend([pat.bits] * n)
        return np.array(rows, dtype=np.int64).reshape(self.n_obs, self.n_lists)

    def permute_lists(self, new_order: Sequence[int]) -> "CountTable":
        """Reorder list columns; counts move with their lists."""
        if sorted(new_order) != list(range(self.n_lists)):
            raise DataError("new_order must be a permutation of list positions")
        names = tuple(self.list_names[j] for j in new_order)
        counts = {
            InclusionPattern(tuple(pat.bits[j] for j in new_order)): n
            for pat, n in self.counts.items()
        }
        return CountTable(names, counts)


@dataclass(frozen=True)
class Dataset:
    """A named count table with free-text provenance."""

    name: str
    table: CountTable
    provenance: str = ""
    timeframe: str = ""


@dataclass(frozen=True)
class DatasetSummary:
    n_obs: int
    overlap: int
    list_totals: dict[str, int]


@dataclass(frozen=True)
class ConditionedDataset:
    """Dataset restricted to cases on a reference list, with the reference
    list removed.  The reference list's size is a known ground truth for the
    remaining table."""

    base: str
    reference_list: str
    table: CountTable
    ground_truth: int


@dataclass(frozen=True)
class ExclusionNotice:
    """Marker for a conditioned dataset too small to analyze."""

    base: str
    reference_list: str
    n_obs: int
    min_obs: int

    @property
    def reason(self) -> str:
        return (f"{self.base}|{self.reference_list}: {self.n_obs} observations "
                f"< minimum {self.min_obs}")


@dataclass(frozen=True)
class CellProbabilities:
    """A full probability distribution over {0,1}^L, including the all-zero cell."""

    n_lists: int
    probs: Mapping[InclusionPattern, float]
    strict_positive: bool = False

    def __post_init__(self):
        expected = all_patterns(self.n_lists, include_zero=True)
        missing = [p for p in expected if p not in self.probs]
        if missing:
            raise DataError(f"missing probabilities for {len(missing)} patterns, e.g. {missing[0]}")
        extra = [p for p in self.probs if len(p) != self.n_lists]
        if extra:
            raise DataError(f"pattern {extra[0]} has wrong length")
        vals = np.array([self.probs[p] for p in expected], dtype=np.float64)
        if np.any(vals < 0):
            raise DataError("negative cell probability")
        if self.strict_positive and np.any(vals == 0):
            raise DataError("zero cell probability with strict_positive=True")
        total = float(np.sum(vals))
        if abs(total - 1.0) > 1e-12:
            raise DataError(f"cell probabilities sum to {total!r}, not 1 within 1e-12")

    @property
    def p_zero(self) -> float:
        return self.probs[InclusionPattern((0,) * self.n_lists)]

    def conditional_observed(self) -> dict[InclusionPattern, float]:
        """q_x = p_x / (1 - p_0) over non-zero patterns."""
        p0 = self.p_zero
        if p0 >= 1.0:
            raise DataError("no observable mass: p_0 = 1")
        return {p: self.probs[p] / (1.0 - p0)
                for p in all_patterns(self.n_lists)}

    @classmethod
    def independent(cls, per_list: Sequence[float]) -> "CellProbabilities":
        """Product-form cells from per-list inclusion probabilities."""
        L = len(per_list)
        probs = {}
        for pat in all_patterns(L, include_zero=True):
            v = 1.0
            for j, b in enumerate(pat.bits):
                v *= per_list[j] if b else (1.0 - per_list[j])
            probs[pat] = v
        # renormalize away float rounding so the constructor's check passes
        total = sum(probs.values())
        probs = {p: v / total for p, v in probs.items()}
        return cls(L, probs)


def parse_dataset(source: Union[str, io.TextIOBase], name: str) -> Dataset:
    """Read a pattern-count CSV: header `list1,...,listL,count`, one row per
    non-zero pattern, bits literal 0/1."""
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty input") from None
    header = [h.strip() for h in header]
    if len(header) < 3 or header[-1] != "count":
        raise DataError("header must be L >= 2 list names followed by 'count'")
    list_names = tuple(header[:-1])
    L = len(list_names)
    if len(set(list_names)) != L:
        raise DataError("duplicate list names in header")
    counts: dict[InclusionPattern, int] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != L + 1:
            raise DataError(f"line {lineno}: expected {L + 1} fields, got {len(row)}")
        try:
            bits = tuple(int(c) for c in row[:-1])
            n = int(row[-1])
        except ValueError:
            raise DataError(f"line {lineno}: malformed row {row!r}") from None
        if any(b not in (0, 1) for b in bits):
            raise DataError(f"line {lineno}: pattern bits must be literal 0/1")
        pat = InclusionPattern(bits)
        if pat.is_zero:
            raise DataError(f"line {lineno}: zero pattern not allowed")
        if n < 0:
            raise DataError(f"line {lineno}: negative count {n}")
        if pat in counts:
            raise DataError(f"line {lineno}: duplicate pattern {pat}")
        counts[pat] = n
    return Dataset(name=name, table=CountTable(list_names, counts))


def serialize_dataset(d: Dataset) -> str:
    """Pattern-count CSV with patterns in canonical (|x|, lexicographic) order."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(d.table.list_names) + ["count"])
    for pat, n in d.table.items_sorted():
        writer.writerow(list(pat.bits) + [n])
    return out.getvalue()


def summarize_dataset(d: Dataset) -> DatasetSummary:
    t = d.table
    return DatasetSummary(n_obs=t.n_obs, overlap=t.overlap, list_totals=t.list_totals())


def condition_on_reference(
    d: Dataset, reference: str, min_obs: int = 30
) -> Union[ConditionedDataset, ExclusionNotice]:
    """Keep cases recorded by the reference list, drop the reference column.

    Cases recorded only by the reference list become unobserved in the
    conditioned table; the reference list's marginal total is the exact
    population size of the conditioned problem.
    """
    j = d.table.list_index(reference)
    ground_truth = d.table.list_total(reference)
    names = tuple(n for n in d.table.list_names if n != reference)
    counts: dict[InclusionPattern, int] = {}
    for pat, n in d.table.counts.items():
        if pat.bits[j] != 1:
            continue
        sub = pat.drop(j)
        if sub.is_zero:
            continue  # on the reference list only: unobserved after conditioning
        counts[sub] = counts.get(sub, 0) + n
    table = CountTable(names, counts)
    if table.n_obs < min_obs:
        return ExclusionNotice(base=d.name, reference_list=reference,
                               n_obs=table.n_obs, min_obs=min_obs)
    return ConditionedDataset(base=d.name, reference_list=reference,
                              table=table, ground_truth=ground_truth)


def simulate_counts(
    p: CellProbabilities,
    population_size: int,
    seed,
    list_names: Optional[Sequence[str]] = None,
) -> CountTable:
    """Draw an observed count table: n_obs ~ Binomial(N, 1 - p_0), then cell
    counts multinomial over the conditional pattern probabilities."""
    if population_size < 1:
        raise DataError("population size must be >= 1")
    p0 = p.p_zero
    if p0 >= 1.0:
        raise DataError("no observable mass: p_0 = 1")
    q = p.conditional_observed()
    pats = list(q.keys())
    qvec = np.array([q[pt] for pt in pats], dtype=np.float64)
    qvec = qvec / qvec.sum()
    rng = np.random.default_rng(seed)
    n_obs = int(rng.binomial(population_size, 1.0 - p0))
    cells = rng.multinomial(n_obs, qvec)
    if list_names is None:
        list_names = tuple(f"l{j + 1}" for j in range(p.n_lists))
    counts = {pat: int(c) for pat, c in zip(pats, cells) if c > 0}
    return CountTable(tuple(list_names), counts)
