"""Multi-cell industrial deployments: node placement, link selection, path loss.

Base stations sit at cell centers, user equipment is dropped uniformly over
the region, and links are either cellular (UE <-> own BS) or device-to-device
(UE <-> UE within range).  Everything is deterministic given ``(cfg, seed)``.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "NodeKind",
    "LinkKind",
    "Position",
    "Node",
    "Link",
    "NetworkConfig",
    "Network",
    "generate_network",
    "path_loss_gain",
    "write_network_csv",
]

MIN_DISTANCE_M = 1.0
_MAX_LINK_TRIES = 200


class NodeKind(str, enum.Enum):
    BASE_STATION = "BaseStation"
    USER_EQUIPMENT = "UserEquipment"


class LinkKind(str, enum.Enum):
    CELLULAR = "Cellular"
    D2D = "D2D"


@dataclass(frozen=True)
class Position:
    x: float
    y: float


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    cell: int
    pos: Position


@dataclass(frozen=True)
class Link:
    id: int
    tx: int
    rx: int
    kind: LinkKind
    distance: float


@dataclass(frozen=True)
class NetworkConfig:
    """Parameters of one deployment.

    ``p_tx`` is the transmit power seen at 1 m, i.e. after the reference
    loss of the indoor model; the remaining attenuation is ``d**-alpha``.
    """

    region: tuple[float, float] = (120.0, 120.0)
    cell_grid: tuple[int, int] = (3, 3)
    node_count: int = 91
    link_count: int = 83
    d2d_fraction: float = 0.3
    communication_range: float = 30.0
    d2d_range: float = 20.0
    uplink_fraction: float = 0.5
    n_channels: int = 7
    p_tx: float = 1e-5
    alpha: float = 3.0

    @property
    def n_cells(self) -> int:
        return self.cell_grid[0] * self.cell_grid[1]

    def validate(self) -> None:
        w, h = self.region
        if w <= 0 or h <= 0:
            raise ConfigError(f"region must be positive, got {self.region}")
        if self.cell_grid[0] < 1 or self.cell_grid[1] < 1:
            raise ConfigError(f"cell_grid must be at least 1x1, got {self.cell_grid}")
        if self.node_count < self.n_cells:
            raise ConfigError(
                f"node_count {self.node_count} is below the number of cells {self.n_cells}"
            )
        if self.link_count < 0:
            raise ConfigError("link_count must be non-negative")
        if not 0.0 <= self.d2d_fraction <= 1.0:
            raise ConfigError("d2d_fraction must lie in [0, 1]")
        if not 0.0 <= self.uplink_fraction <= 1.0:
            raise ConfigError("uplink_fraction must lie in [0, 1]")
        if self.n_channels < 1:
            raise ConfigError("n_channels must be >= 1")
        if self.communication_range < MIN_DISTANCE_M:
            raise ConfigError("communication_range must be at least 1 m")
        if self.d2d_range > self.communication_range:
            raise ConfigError("d2d_range cannot exceed communication_range")
        if self.p_tx <= 0:
            raise ConfigError("p_tx must be positive")
        if self.alpha < 0:
            raise ConfigError("alpha must be non-negative")


@dataclass(frozen=True)
class Network:
    region: tuple[float, float]
    cell_grid: tuple[int, int]
    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    n_channels: int
    p_tx: float
    alpha: float

    @property
    def n_links(self) -> int:
        return len(self.links)

    @cached_property
    def node_xy(self) -> np.ndarray:
        xy = np.array([(n.pos.x, n.pos.y) for n in self.nodes], dtype=float)
        return xy.reshape(len(self.nodes), 2)

    @cached_property
    def tx_xy(self) -> np.ndarray:
        return self.node_xy[[lk.tx for lk in self.links]].reshape(-1, 2)

    @cached_property
    def rx_xy(self) -> np.ndarray:
        return self.node_xy[[lk.rx for lk in self.links]].reshape(-1, 2)

    @cached_property
    def link_distance(self) -> np.ndarray:
        return np.array([lk.distance for lk in self.links], dtype=float)

    @cached_property
    def cross_distance(self) -> np.ndarray:
        """``[i, j]`` = distance from the transmitter of ``j`` to the receiver of ``i``."""
        diff = self.rx_xy[:, None, :] - self.tx_xy[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    @cached_property
    def cross_gain(self) -> np.ndarray:
        """Path-loss gain matrix matching :attr:`cross_distance`."""
        d = np.maximum(self.cross_distance, MIN_DISTANCE_M)
        return d ** (-self.alpha)

    @cached_property
    def coupling(self) -> np.ndarray:
        """Symmetric interference-to-signal coupling, zero on the diagonal.

        ``[i, j]`` = gain(j -> rx_i) / gain(i -> rx_i) + gain(i -> rx_j) / gain(j -> rx_j).
        """
        g = self.cross_gain
        own = np.diag(g).copy()
        ratio = g / own[:, None]
        w = ratio + ratio.T
        np.fill_diagonal(w, 0.0)
        return w


def path_loss_gain(distance: float, alpha: float) -> float:
    """Linear power gain ``1 / distance**alpha``."""
    if not distance > 0:
        raise DomainError(f"distance must be positive, got {distance}")
    if alpha < 0:
        raise DomainError(f"alpha must be non-negative, got {alpha}")
    return 1.0 / distance**alpha


def _cell_of(x: float, y: float, cfg: NetworkConfig) -> int:
    rows, cols = cfg.cell_grid
    w, h = cfg.region
    c = min(int(x / (w / cols)), cols - 1)
    r = min(int(y / (h / rows)), rows - 1)
    return r * cols + c


def generate_network(cfg: NetworkConfig, seed: int) -> Network:
    cfg.validate()
    rng = np.random.default_rng(seed)
    rows, cols = cfg.cell_grid
    w, h = cfg.region
    cw, ch = w / cols, h / rows

    nodes: list[Node] = []
    for r in range(rows):
        for c in range(cols):
            pos = Position((c + 0.5) * cw, (r + 0.5) * ch)
            nodes.append(Node(len(nodes), NodeKind.BASE_STATION, r * cols + c, pos))
    n_ue = cfg.node_count - len(nodes)
    ue_xy = rng.uniform((0.0, 0.0), (w, h), size=(n_ue, 2))
    for x, y in ue_xy:
        nodes.append(
            Node(len(nodes), NodeKind.USER_EQUIPMENT, _cell_of(x, y, cfg), Position(float(x), float(y)))
        )
    xy = np.array([(n.pos.x, n.pos.y) for n in nodes]).reshape(-1, 2)
    ue_ids = np.arange(cfg.n_cells, cfg.node_count)

    def dist(a: int, b: int) -> float:
        return float(math.hypot(*(xy[a] - xy[b])))

    n_d2d = int(round(cfg.link_count * cfg.d2d_fraction))
    n_cell = cfg.link_count - n_d2d
    if cfg.link_count and n_ue == 0:
        raise ConfigError("links requested but the network has no user equipment")

    used: set[tuple[int, int]] = set()
    links: list[Link] = []

    # Cellular: distinct UEs first, then recycle once every UE has a link.
    order = rng.permutation(ue_ids) if n_ue else np.array([], dtype=int)
    k = 0
    for _ in range(n_cell):
        for _try in range(_MAX_LINK_TRIES):
            ue = int(order[k % n_ue])
            k += 1
            bs = nodes[ue].cell
            uplink = rng.random() < cfg.uplink_fraction
            tx, rx = (ue, bs) if uplink else (bs, ue)
            d = dist(tx, rx)
            if (tx, rx) in used or d < MIN_DISTANCE_M or d > cfg.communication_range:
                continue
            used.add((tx, rx))
            links.append(Link(len(links), tx, rx, LinkKind.CELLULAR, d))
            break
        else:
            raise ConfigError("could not place the requested number of cellular links")

    if n_d2d:
        if n_ue < 2:
            raise ConfigError("D2D links need at least two user equipment nodes")
        uxy = xy[ue_ids]
        du = np.hypot(*(uxy[:, None, :] - uxy[None, :, :]).transpose(2, 0, 1))
        cand = (du >= MIN_DISTANCE_M) & (du <= cfg.d2d_range)
    for _ in range(n_d2d):
        for _try in range(_MAX_LINK_TRIES):
            a = int(rng.integers(n_ue))
            options = np.flatnonzero(cand[a])
            if options.size == 0:
                continue
            b = int(options[rng.integers(options.size)])
            tx, rx = int(ue_ids[a]), int(ue_ids[b])
            if (tx, rx) in used:
                continue
            used.add((tx, rx))
            links.append(Link(len(links), tx, rx, LinkKind.D2D, dist(tx, rx)))
            break
        else:
            raise ConfigError(
                f"could not place {n_d2d} D2D links within {cfg.d2d_range} m after bounded retries"
            )

    return Network(
        region=(float(w), float(h)),
        cell_grid=(rows, cols),
        nodes=tuple(nodes),
        links=tuple(links),
        n_channels=cfg.n_channels,
        p_tx=cfg.p_tx,
        alpha=cfg.alpha,
    )


def write_network_csv(net: Network, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "nodes.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["id", "kind", "cell", "x", "y"])
        for n in net.nodes:
            wr.writerow([n.id, n.kind.value, n.cell, repr(n.pos.x), repr(n.pos.y)])
    with open(out / "links.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["id", "tx", "rx", "kind", "distance"])
        for lk in net.links:
            wr.writerow([lk.id, lk.tx, lk.rx, lk.kind.value, repr(lk.distance)])
