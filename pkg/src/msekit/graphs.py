"""Decomposable (chordal) graphs: enumeration, junction decompositions, and
an independent chordality oracle.

A graph is chordal when every cycle of length four or more has a chord;
exactly then do its maximal cliques admit an ordering with the running
intersection property, so that joint distributions factor over cliques and
separators.  List counts here are small (L <= 8), so everything is honest
brute force over bitmask subsets.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass

from .data import DataError


def edge_pairs(n_vertices: int) -> list[tuple[int, int]]:
    """Canonical edge order used for bitmask serialization."""
    return list(itertools.combinations(range(n_vertices), 2))


@dataclass(frozen=True)
class DecomposableGraph:
    n_vertices: int
    edges: frozenset  # of frozenset pairs
    cliques: tuple    # of frozensets, in running-intersection order
    separators: tuple  # of frozensets, with multiplicity; separators[i] = cliques[i] & union(earlier)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_bitmask(self) -> int:
        mask = 0
        for i, (a, b) in enumerate(edge_pairs(self.n_vertices)):
            if frozenset((a, b)) in self.edges:
                mask |= 1 << i
        return mask

    @classmethod
    def from_edges(cls, n_vertices: int, edges) -> "DecomposableGraph":
        edges = frozenset(frozenset(e) for e in edges)
        for e in edges:
            if len(e) != 2 or any(not (0 <= v < n_vertices) for v in e):
                raise DataError(f"bad edge {set(e)}")
        cliques, separators = junction_decomposition(n_vertices, edges)
        return cls(n_vertices, edges, cliques, separators)

    @classmethod
    def from_bitmask(cls, n_vertices: int, mask: int) -> "DecomposableGraph":
        pairs = edge_pairs(n_vertices)
        edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        return cls.from_edges(n_vertices, edges)


def _adjacency(n_vertices: int, edges) -> list[set]:
    adj = [set() for _ in range(n_vertices)]
    for e in edges:
        a, b = tuple(e)
        adj[a].add(b)
        adj[b].add(a)
    return adj


def is_chordal(n_vertices: int, edges) -> bool:
    """Maximum-cardinality-search test: the MCS order must be a perfect
    elimination ordering exactly when the graph is chordal."""
    edges = frozenset(frozenset(e) for e in edges)
    adj = _adjacency(n_vertices, edges)
    weight = [0] * n_vertices
    unvisited = set(range(n_vertices))
    order = []
    while unvisited:
        v = max(unvisited, key=lambda u: (weight[u], -u))
        unvisited.remove(v)
        order.append(v)
        for u in adj[v] & unvisited:
            weight[u] += 1
    position = {v: i for i, v in enumerate(order)}
    # the reverse of the MCS visit order is a candidate perfect elimination
    # ordering: each vertex's earlier-visited neighbors must form a clique,
    # which reduces to checking adjacency with the latest-visited one
    for v in order:
        earlier = [u for u in adj[v] if position[u] < position[v]]
        if not earlier:
            continue
        parent = max(earlier, key=lambda u: position[u])
        for u in earlier:
            if u != parent and u not in adj[parent]:
                return False
    return True


def has_induced_long_cycle(n_vertices: int, edges) -> bool:
    """Independent chordality oracle: search every vertex subset of size >= 4
    for an induced cycle (all degrees two and connected)."""
    edges = frozenset(frozenset(e) for e in edges)
    adj = _adjacency(n_vertices, edges)
    for size in range(4, n_vertices + 1):
        for subset in itertools.combinations(range(n_vertices), size):
            sub = set(subset)
            degs = {v: len(adj[v] & sub) for v in subset}
            if any(d != 2 for d in degs.values()):
                continue
            if len(edges_within(sub, edges)) != size:
                continue
            # degrees all 2 and |E| = |V|: a disjoint union of cycles; it is
            # a single (hence induced, chordless) cycle iff connected
            seen = {subset[0]}
            frontier = [subset[0]]
            while frontier:
                v = frontier.pop()
                for u in adj[v] & sub:
                    if u not in seen:
                        seen.add(u)
                        frontier.append(u)
            if len(seen) == size:
                return True
    return False


def edges_within(vertices: set, edges) -> list:
    return [e for e in edges if set(e) <= vertices]


def maximal_cliques(n_vertices: int, edges) -> list[frozenset]:
    edges = frozenset(frozenset(e) for e in edges)
    cliques = []
    for size in range(n_vertices, 0, -1):
        for subset in itertools.combinations(range(n_vertices), size):
            s = set(subset)
            if any(s < set(c) for c in cliques):
                continue
            if all(frozenset(p) in edges for p in itertools.combinations(subset, 2)):
                cliques.append(frozenset(subset))
    return cliques


def junction_decomposition(n_vertices: int, edges) -> tuple[tuple, tuple]:
    """Maximal cliques ordered to satisfy running intersection, plus the
    separator multiset (each clique's intersection with the earlier ones).

    Raises on non-chordal input.
    """
    edges = frozenset(frozenset(e) for e in edges)
    if not is_chordal(n_vertices, edges):
        raise DataError("graph is not chordal; no junction decomposition exists")
    cliques = maximal_cliques(n_vertices, edges)
    # greedy maximum-intersection ordering (Prim on the clique graph) yields
    # a junction ordering for chordal graphs; ties break on sorted vertices
    cliques.sort(key=lambda c: tuple(sorted(c)))
    ordered = [cliques[0]]
    rest = cliques[1:]
    separators = []
    covered = set(cliques[0])
    while rest:
        best = max(rest, key=lambda c: (len(c & covered), [-v for v in sorted(c)]))
        separators.append(frozenset(best & covered))
        ordered.append(best)
        covered |= best
        rest.remove(best)
    # running intersection demands each separator lie inside one earlier clique
    for i, sep in enumerate(separators, start=1):
        if sep and not any(sep <= c for c in ordered[:i]):
            raise DataError("running intersection violated; junction ordering failed")
    return tuple(ordered), tuple(separators)


def enumerate_decomposable_graphs(
    n_vertices: int,
    include_complete: bool = False,
    cache_path: str | None = None,
) -> list[DecomposableGraph]:
    """All labeled chordal graphs on the given vertices, by brute force over
    the 2^(L choose 2) edge sets, in (edge count, bitmask) order.

    A cache file of edge bitmasks is consulted when given; on any mismatch
    with a fresh enumeration it is regenerated.
    """
    if not (2 <= n_vertices <= 6):
        raise DataError("enumeration supported for 2 to 6 vertices")
    masks = None
    if cache_path is not None and os.path.exists(cache_path):
        masks = _read_cache(cache_path, n_vertices)
    if masks is None:
        masks = _enumerate_masks(n_vertices)
        if cache_path is not None:
            _write_cache(cache_path, n_vertices, masks)
    else:
        fresh = _enumerate_masks(n_vertices)
        if masks != fresh:
            masks = fresh
            _write_cache(cache_path, n_vertices, masks)
    graphs = [DecomposableGraph.from_bitmask(n_vertices, m) for m in masks]
    if not include_complete:
        full = (1 << len(edge_pairs(n_vertices))) - 1
        graphs = [g for g in graphs if g.edge_bitmask() != full]
    return graphs


def _enumerate_masks(n_vertices: int) -> list[int]:
    pairs = edge_pairs(n_vertices)
    masks = []
    for mask in range(1 << len(pairs)):
        edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        if is_chordal(n_vertices, edges):
            masks.append(mask)
    masks.sort(key=lambda m: (bin(m).count("1"), m))
    return masks


def _read_cache(path: str, n_vertices: int) -> list[int] | None:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        masks = payload[str(n_vertices)]
        return [int(m) for m in masks]
    except (KeyError, ValueError, OSError, json.JSONDecodeError):
        return None


def _write_cache(path: str, n_vertices: int, masks: list[int]) -> None:
    payload = {}
    if os.path.exists(path):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError):
            payload = {}
    payload[str(n_vertices)] = masks
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
