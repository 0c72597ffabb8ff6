"""Synthetic training corpus for the priority and RB models.

Each sample is a random deployment with a fixed number of links.  Priority
labels come from an urgency ranking, RB labels from an interference-aware
greedy coloring processed in that ranking's order.  The RB model is trained
on one decision per (sample, link): the state of the allocation at the moment
that link is colored.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .allocator import conflict_check, interference_aware_allocate
from .errors import ConfigError
from .features import N_FEATURES, RB_CONTEXT_ROWS, link_features, rb_context
from .interference import build_conflict_graph
from .nn import Samples, load_tensor, save_tensor
from .topology import NetworkConfig, generate_network

__all__ = [
    "PRIORITY_CATEGORIES",
    "Dataset",
    "label_priorities",
    "generate_dataset",
    "priority_samples",
    "rb_samples",
    "save_dataset",
    "load_dataset",
]

PRIORITY_CATEGORIES = 8
MAX_RESAMPLE = 100

META_COLUMNS = (
    "sample",
    "link",
    "tx_x",
    "tx_y",
    "rx_x",
    "rx_y",
    "demand",
    "deadline",
    "degree",
    "priority_class",
    "priority_bucket",
    "rb",
)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (S, L, F) raw link features
    y_priority: np.ndarray  # (S, L, categories) one-hot
    y_rb: np.ndarray  # (S, L, N) one-hot
    adjacency: np.ndarray  # (S, L, L) conflict indicators
    rb_inputs: np.ndarray  # (S * L, rows, 2N) decision contexts, link-major per sample
    positions: np.ndarray  # (S, L, 4) tx_x, tx_y, rx_x, rx_y
    demands: np.ndarray  # (S, L)
    deadlines: np.ndarray  # (S, L)
    priority_class: np.ndarray  # (S, L)
    feature_min: np.ndarray
    feature_span: np.ndarray

    def __post_init__(self):
        s = self.features.shape[0]
        for name in ("y_priority", "y_rb", "adjacency", "positions", "demands", "deadlines"):
            if getattr(self, name).shape[0] != s:
                raise ValueError(f"{name} has {getattr(self, name).shape[0]} samples, expected {s}")
        if self.rb_inputs.shape[0] != s * self.n_links:
            raise ValueError("rb_inputs does not hold one row per (sample, link)")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_links(self) -> int:
        return self.features.shape[1]

    @property
    def n_rb(self) -> int:
        return self.y_rb.shape[2]

    @property
    def categories(self) -> int:
        return self.y_priority.shape[2]


def _urgency_order(demands, deadlines, degrees) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(demands, dtype=float)
    dl = np.asarray(deadlines, dtype=float)
    u = np.divide(d, dl, out=np.zeros_like(d), where=dl > 0) + 0.1 * np.asarray(degrees, dtype=float)
    order = np.lexsort((np.arange(len(u)), -u))
    return u, order


def label_priorities(demands, deadlines, conflict_degrees, categories: int) -> np.ndarray:
    """One-hot quantile buckets of the urgency ``d / D + 0.1 * degree`` (bucket 0 most urgent).

    A link's rank is the number of links with strictly larger urgency, so equal
    urgencies share a bucket; bucket = floor(rank * categories / n).
    """
    if not (len(demands) == len(deadlines) == len(conflict_degrees)):
        raise ValueError("inputs must have the same length")
    n = len(demands)
    out = np.zeros((n, categories))
    if n == 0:
        return out
    u, _ = _urgency_order(demands, deadlines, conflict_degrees)
    rank = (u[None, :] > u[:, None]).sum(axis=1)
    bucket = rank * categories // n
    out[np.arange(n), bucket] = 1.0
    return out


def _sample_config(n_links: int) -> NetworkConfig:
    return NetworkConfig(
        region=(120.0, 120.0),
        cell_grid=(3, 3),
        node_count=9 + max(2 * n_links, 16),
        link_count=n_links,
    )


def generate_dataset(
    n_samples: int,
    n_links: int,
    n_rb: int,
    seed: int,
    max_demand: int = 8,
    deadline_scale: tuple[float, float] = (1.2, 2.0),
    categories: int = PRIORITY_CATEGORIES,
    exclusion_factor: float = 1.5,
    n_priority_classes: int = 3,
    rb_rows: int = RB_CONTEXT_ROWS,
) -> Dataset:
    if n_rb < 1:
        raise ConfigError(f"n_rb must be >= 1, got {n_rb}")
    if n_samples < 1 or n_links < 1:
        raise ConfigError("n_samples and n_links must be >= 1")
    if max_demand < 1:
        raise ConfigError("max_demand must be >= 1")
    lo, hi = deadline_scale
    if not 1.0 <= lo <= hi:
        raise ConfigError(f"deadline scale range {deadline_scale} must satisfy 1 <= lo <= hi")
    rng = np.random.default_rng(seed)
    cfg = _sample_config(n_links)

    feats, yp, yr, adj, ctx, pos, dem, dl, pcl = ([] for _ in range(9))
    for _ in range(n_samples):
        for _attempt in range(MAX_RESAMPLE):
            net = generate_network(cfg, int(rng.integers(2**63)))
            g = build_conflict_graph(net, exclusion_factor)
            demands = rng.integers(1, max_demand + 1, size=n_links)
            scale = rng.uniform(lo, hi, size=n_links)
            # ceil keeps every deadline at or above lo * demand
            deadlines = np.array([max(1, math.ceil(x - 1e-9)) for x in demands * scale])
            pclass = rng.integers(0, n_priority_classes, size=n_links)
            u, order = _urgency_order(demands, deadlines, g.degrees)
            alloc = interference_aware_allocate(g, u, net.coupling, n_rb)
            if not alloc.unallocated:
                break
        else:
            raise ConfigError(f"no {n_rb}-colourable sample found in {MAX_RESAMPLE} draws")
        assert not conflict_check(g, alloc)
        rb_of = alloc.rb_of(n_links)

        # replay the coloring to record each link's view at its turn
        partial = np.full(n_links, -1)
        turn = np.zeros((n_links, rb_rows, 2 * n_rb))
        for i in order:
            turn[i] = rb_context(net.coupling[i], g.matrix[i], partial, n_rb, rb_rows)
            partial[i] = rb_of[i]

        raw = link_features(g, demands, deadlines, demands, pclass)
        feats.append(raw)
        yp.append(label_priorities(demands, deadlines, g.degrees, categories))
        yr.append(np.eye(n_rb)[rb_of])
        adj.append(g.matrix.astype(float))
        ctx.append(turn)
        pos.append(np.hstack([net.tx_xy, net.rx_xy]))
        dem.append(demands)
        dl.append(deadlines)
        pcl.append(pclass)

    features = np.stack(feats)
    fmin = features.reshape(-1, N_FEATURES).min(axis=0)
    fspan = features.reshape(-1, N_FEATURES).max(axis=0) - fmin
    return Dataset(
        features=features,
        y_priority=np.stack(yp),
        y_rb=np.stack(yr),
        adjacency=np.stack(adj),
        rb_inputs=np.concatenate(ctx),
        positions=np.stack(pos),
        demands=np.stack(dem),
        deadlines=np.stack(dl),
        priority_class=np.stack(pcl),
        feature_min=fmin,
        feature_span=fspan,
    )


def normalize_features(ds: Dataset) -> np.ndarray:
    inv = np.divide(1.0, ds.feature_span, out=np.zeros_like(ds.feature_span), where=ds.feature_span > 0)
    return (ds.features - ds.feature_min) * inv


def priority_samples(ds: Dataset) -> Samples:
    """Whole-sample windows ``(S, L, F, 1)`` with per-link bucket targets."""
    return Samples(normalize_features(ds)[..., None], ds.y_priority)


def rb_samples(ds: Dataset) -> Samples:
    """One decision per (sample, link) with collision indicators for the sharing loss."""
    n = ds.n_rb
    x = ds.rb_inputs
    y = ds.y_rb.reshape(-1, 1, n)
    blocked = (x[:, :, n:].sum(axis=1) > 0).astype(float)[:, None, :]
    return Samples(x[..., None], y, blocked)


def save_dataset(ds: Dataset, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_tensor(ds.features[..., None], out / "features.bin")
    save_tensor(ds.y_priority[..., None], out / "labels_priority.bin")
    save_tensor(ds.y_rb[..., None], out / "labels_rb.bin")
    save_tensor(ds.adjacency[..., None], out / "adjacency.bin")
    save_tensor(ds.rb_inputs[..., None], out / "rb_features.bin")
    norm = {"feature_min": ds.feature_min.tolist(), "feature_span": ds.feature_span.tolist()}
    (out / "normalization.json").write_text(json.dumps(norm, indent=2, sort_keys=True) + "\n")
    bucket = ds.y_priority.argmax(axis=2)
    rb = ds.y_rb.argmax(axis=2)
    degree = ds.adjacency.sum(axis=2)
    with open(out / "meta.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(META_COLUMNS)
        for s in range(ds.n_samples):
            for i in range(ds.n_links):
                p = ds.positions[s, i]
                wr.writerow(
                    [s, i, *(repr(float(v)) for v in p), int(ds.demands[s, i]), int(ds.deadlines[s, i]),
                     int(degree[s, i]), int(ds.priority_class[s, i]), int(bucket[s, i]), int(rb[s, i])]
                )
    return out


def load_dataset(path: str | Path) -> Dataset:
    src = Path(path)
    if not (src / "features.bin").exists():
        raise FileNotFoundError(f"{src}: no dataset (features.bin missing)")
    features = load_tensor(src / "features.bin")[..., 0]
    s, n = features.shape[:2]
    norm = json.loads((src / "normalization.json").read_text())
    pos = np.zeros((s, n, 4))
    dem = np.zeros((s, n), dtype=int)
    dl = np.zeros((s, n), dtype=int)
    pcl = np.zeros((s, n), dtype=int)
    with open(src / "meta.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            k, i = int(row["sample"]), int(row["link"])
            pos[k, i] = [float(row[c]) for c in ("tx_x", "tx_y", "rx_x", "rx_y")]
            dem[k, i] = int(row["demand"])
            dl[k, i] = int(row["deadline"])
            pcl[k, i] = int(row["priority_class"])
    return Dataset(
        features=features,
        y_priority=load_tensor(src / "labels_priority.bin")[..., 0],
        y_rb=load_tensor(src / "labels_rb.bin")[..., 0],
        adjacency=load_tensor(src / "adjacency.bin")[..., 0],
        rb_inputs=load_tensor(src / "rb_features.bin")[..., 0],
        positions=pos,
        demands=dem,
        deadlines=dl,
        priority_class=pcl,
        feature_min=np.asarray(norm["feature_min"], dtype=float),
        feature_span=np.asarray(norm["feature_span"], dtype=float),
    )
