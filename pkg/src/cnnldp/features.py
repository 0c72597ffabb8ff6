"""Per-link feature vectors and neighborhood windows fed to the CNN models."""

from __future__ import annotations

import numpy as np

from .interference import ConflictGraph

FEATURE_NAMES = (
    "residual",
    "time_to_deadline",
    "degree",
    "demand",
    "priority_class",
    "active_neighbors",
    "undecided_neighbors",
    "previous_priority",
)
N_FEATURES = len(FEATURE_NAMES)


def link_features(
    g: ConflictGraph,
    residual: np.ndarray,
    time_to_deadline: np.ndarray,
    demand: np.ndarray,
    priority_class: np.ndarray,
    active_neighbors: np.ndarray | None = None,
    previous_priority: np.ndarray | None = None,
) -> np.ndarray:
    """Raw (unnormalized) ``(n_links, 8)`` feature matrix.

    ``undecided_neighbors`` counts neighbors that still hold demand, i.e. the
    links that will contend at the start of the slot.
    """
    n = g.n_links
    residual = np.asarray(residual, dtype=float)
    backlogged = (residual > 0).astype(float)
    m = g.matrix.astype(float)
    cols = [
        residual,
        np.maximum(np.asarray(time_to_deadline, dtype=float), 0.0),
        g.degrees.astype(float),
        np.asarray(demand, dtype=float),
        np.asarray(priority_class, dtype=float),
        np.zeros(n) if active_neighbors is None else np.asarray(active_neighbors, dtype=float),
        m @ backlogged if n else np.zeros(0),
        np.zeros(n) if previous_priority is None else np.asarray(previous_priority, dtype=float),
    ]
    return np.stack(cols, axis=1).reshape(n, N_FEATURES)


def neighborhood_windows(g: ConflictGraph, strength: np.ndarray, rows: int) -> np.ndarray:
    """Row indices of each link's window: itself, then its strongest interferers.

    ``strength[i, j]`` ranks neighbor ``j`` for link ``i`` (larger first, ties
    by id).  Windows shorter than ``rows`` are padded with ``-1``.
    """
    n = g.n_links
    out = np.full((n, rows), -1, dtype=int)
    for i in range(n):
        nbrs = sorted(g.adjacency[i], key=lambda j: (-strength[i, j], j))[: rows - 1]
        out[i, 0] = i
        out[i, 1 : 1 + len(nbrs)] = nbrs
    return out


def gather_windows(values: np.ndarray, windows: np.ndarray) -> np.ndarray:
    """``values[windows]`` with zero rows where the window is padded."""
    out = values[np.maximum(windows, 0)]
    out[windows < 0] = 0.0
    return out


def window_adjacency(g: ConflictGraph, windows: np.ndarray) -> np.ndarray:
    """``(n_windows, rows, rows)`` conflict indicators among window members."""
    idx = np.maximum(windows, 0)
    a = g.matrix[idx[:, :, None], idx[:, None, :]].astype(float)
    pad = windows < 0
    a[pad[:, :, None] | pad[:, None, :]] = 0.0
    return a


RB_CONTEXT_ROWS = 8


def rb_context(
    weights: np.ndarray,
    conflicts: np.ndarray,
    rb_of: np.ndarray,
    n_rb: int,
    rows: int = RB_CONTEXT_ROWS,
) -> np.ndarray:
    """RB-model input for one link: ``(rows, 2 * n_rb)``.

    Column block one carries coupling (``weights``, scaled so the strongest
    assigned link is 1) in the RB column a link holds; block two flags a
    conflicting neighbor there.  Row 0 sums both blocks over every assigned
    link; the remaining rows list the strongest assigned links individually.
    Unused rows are zero.
    """
    out = np.zeros((rows, 2 * n_rb))
    cand = np.flatnonzero(rb_of >= 0)
    if cand.size == 0:
        return out
    w = weights[cand]
    top = w.max()
    scaled = w / top if top > 0 else np.zeros_like(w)
    hit = np.asarray(conflicts, dtype=float)[cand]
    rbs = rb_of[cand]
    out[0, :n_rb] = np.bincount(rbs, weights=scaled, minlength=n_rb)
    out[0, n_rb:] = np.bincount(rbs, weights=hit, minlength=n_rb) > 0
    order = np.lexsort((cand, -w))[: rows - 1]
    r = np.arange(1, 1 + order.size)
    out[r, rbs[order]] = scaled[order]
    out[r, n_rb + rbs[order]] = hit[order]
    return out
