"""Priority-ordered graph-coloring allocation of resource blocks."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import SizeError
from .interference import ConflictGraph

__all__ = [
    "Allocation",
    "color_allocate",
    "color_allocate_online",
    "conflict_check",
    "interference_aware_allocate",
    "least_interference_rb",
    "chromatic_oracle",
    "optimal_coloring",
    "processing_order",
    "write_allocation_csv",
]

ORACLE_MAX_LINKS = 16


@dataclass
class Allocation:
    assigned: dict[int, int] = field(default_factory=dict)
    unallocated: set[int] = field(default_factory=set)

    def rb_of(self, n_links: int) -> np.ndarray:
        """Per-link RB array, ``-1`` for links without an assignment."""
        out = np.full(n_links, -1, dtype=int)
        for link, rb in self.assigned.items():
            out[link] = rb
        return out


def processing_order(priorities: Sequence[float]) -> list[int]:
    """Descending priority, ties by ascending link id."""
    return sorted(range(len(priorities)), key=lambda i: (-priorities[i], i))


def color_allocate(
    g: ConflictGraph,
    priorities: Sequence[float],
    predicted_rb: Sequence[int],
    n_rb: int,
    demand_mask: Sequence[bool] | None = None,
) -> Allocation:
    for r in predicted_rb:
        if not 0 <= r < n_rb:
            raise ValueError(f"predicted RB {r} outside [0, {n_rb})")
    return color_allocate_online(g, priorities, lambda i, _alloc: int(predicted_rb[i]), n_rb, demand_mask)


def color_allocate_online(
    g: ConflictGraph,
    priorities: Sequence[float],
    predict: Callable[[int, Allocation], int],
    n_rb: int,
    demand_mask: Sequence[bool] | None = None,
) -> Allocation:
    """Same pass as :func:`color_allocate`, asking ``predict(link, partial)``
    for each link's first choice when its turn comes."""
    n = g.n_links
    if demand_mask is None:
        demand_mask = [True] * n
    alloc = Allocation()
    for i in processing_order(priorities):
        if not demand_mask[i]:
            continue
        taken = {alloc.assigned[j] for j in g.adjacency[i] if j in alloc.assigned}
        first = int(predict(i, alloc))
        if not 0 <= first < n_rb:
            raise ValueError(f"predicted RB {first} outside [0, {n_rb})")
        if first not in taken:
            alloc.assigned[i] = first
            continue
        for rb in range(n_rb):
            if rb not in taken:
                alloc.assigned[i] = rb
                break
        else:
            alloc.unallocated.add(i)
    return alloc


def least_interference_rb(i: int, alloc: Allocation, g: ConflictGraph, weights: np.ndarray, n_rb: int) -> int:
    """Free RB of ``i`` with the smallest summed coupling to its co-RB links."""
    taken = {alloc.assigned[j] for j in g.adjacency[i] if j in alloc.assigned}
    cost = np.zeros(n_rb)
    for j, rb in alloc.assigned.items():
        cost[rb] += weights[i, j]
    free = [rb for rb in range(n_rb) if rb not in taken]
    if not free:
        return 0
    return min(free, key=lambda rb: (cost[rb], rb))


def interference_aware_allocate(
    g: ConflictGraph,
    priorities: Sequence[float],
    weights: np.ndarray,
    n_rb: int,
    demand_mask: Sequence[bool] | None = None,
) -> Allocation:
    """Greedy coloring that picks the least-coupled free RB for each link."""
    return color_allocate_online(
        g, priorities, lambda i, a: least_interference_rb(i, a, g, weights, n_rb), n_rb, demand_mask
    )


def conflict_check(g: ConflictGraph, alloc: Allocation) -> list[tuple[int, int]]:
    a = alloc.assigned
    return [(i, j) for i, j in g.edges() if i in a and j in a and a[i] == a[j]]


def _coloring(adj: list[list[int]], order: list[int], k: int) -> list[int] | None:
    colors = [-1] * len(adj)

    def place(pos: int, used: int) -> bool:
        if pos == len(order):
            return True
        v = order[pos]
        nbr = {colors[u] for u in adj[v] if colors[u] >= 0}
        # Symmetry break: a vertex may open at most one new color.
        for c in range(min(used + 1, k)):
            if c in nbr:
                continue
            colors[v] = c
            if place(pos + 1, max(used, c + 1)):
                return True
        colors[v] = -1
        return False

    return colors if place(0, 0) else None


def optimal_coloring(g: ConflictGraph) -> list[int]:
    """A proper coloring with the fewest colors, by backtracking; small graphs only."""
    n = g.n_links
    if n > ORACLE_MAX_LINKS:
        raise SizeError(f"chromatic_oracle is capped at {ORACLE_MAX_LINKS} links, got {n}")
    if n == 0:
        return []
    adj = [list(a) for a in g.adjacency]
    order = sorted(range(n), key=lambda v: (-len(adj[v]), v))
    k = 1
    while (colors := _coloring(adj, order, k)) is None:
        k += 1
    return colors


def chromatic_oracle(g: ConflictGraph) -> int:
    """Exact chromatic number by backtracking; small graphs only."""
    colors = optimal_coloring(g)
    return max(colors) + 1 if colors else 0


def write_allocation_csv(alloc: Allocation, n_links: int, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["link", "rb"])
        for i in range(n_links):
            if i in alloc.assigned:
                wr.writerow([i, alloc.assigned[i]])
            elif i in alloc.unallocated:
                wr.writerow([i, "UNALLOCATED"])
