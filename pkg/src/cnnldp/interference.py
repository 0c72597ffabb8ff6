"""Conflict graph over links.

Link ``j``'s exclusion region is the disk of radius ``exclusion_factor * d_j``
around its receiver.  Two links conflict when either transmitter falls inside
the other's exclusion region.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

from .topology import Network

__all__ = [
    "ConflictGraph",
    "build_conflict_graph",
    "interference_set",
    "load_conflict_graph",
    "read_conflicts_csv",
    "write_conflicts_csv",
]

DEFAULT_EXCLUSION_FACTOR = 2.0


@dataclass(frozen=True)
class ConflictGraph:
    n_links: int
    adjacency: tuple[tuple[int, ...], ...]

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n_links, self.n_links), dtype=bool)
        for i, nbrs in enumerate(self.adjacency):
            m[i, list(nbrs)] = True
        return m

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=int)

    @property
    def n_edges(self) -> int:
        return int(sum(len(a) for a in self.adjacency) // 2)

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges as ``(i, j)`` with ``i < j``, sorted."""
        return [(i, j) for i, nbrs in enumerate(self.adjacency) for j in nbrs if i < j]

    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n_links else 0


def _from_matrix(m: np.ndarray) -> ConflictGraph:
    m = m | m.T
    np.fill_diagonal(m, False)
    adj = tuple(tuple(int(j) for j in np.flatnonzero(row)) for row in m)
    return ConflictGraph(m.shape[0], adj)


def build_conflict_graph(net: Network, exclusion_factor: float = DEFAULT_EXCLUSION_FACTOR) -> ConflictGraph:
    if not exclusion_factor > 0:
        raise ValueError(f"exclusion_factor must be positive, got {exclusion_factor}")
    n = net.n_links
    if n == 0:
        return ConflictGraph(0, ())
    # cross[i, j]: tx_j -> rx_i.  tx_j inside link i's region iff cross[i, j] <= f * d_i.
    inside = net.cross_distance <= exclusion_factor * net.link_distance[:, None]
    return _from_matrix(inside.copy())


def interference_set(g: ConflictGraph, i: int) -> tuple[int, ...]:
    if not 0 <= i < g.n_links:
        raise IndexError(f"link {i} out of range for {g.n_links} links")
    return g.adjacency[i]


def load_conflict_graph(edges: Iterable[tuple[int, int]], n_links: int) -> ConflictGraph:
    m = np.zeros((n_links, n_links), dtype=bool)
    for i, j in edges:
        if not (0 <= i < n_links and 0 <= j < n_links):
            raise IndexError(f"edge ({i}, {j}) out of range for {n_links} links")
        m[i, j] = True
    return _from_matrix(m)


def write_conflicts_csv(g: ConflictGraph, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["i", "j"])
        wr.writerows(g.edges())


def read_conflicts_csv(path: str | Path, n_links: int) -> ConflictGraph:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return load_conflict_graph(((int(r["i"]), int(r["j"])) for r in rows), n_links)
