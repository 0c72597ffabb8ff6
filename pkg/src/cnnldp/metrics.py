"""Link-budget and network-level evaluation metrics."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, InactiveLinkError
from .interference import ConflictGraph
from .scheduler import ACTIVE, ScheduleTrace
from .topology import Network

__all__ = [
    "BOLTZMANN",
    "LinkBudget",
    "MetricsConfig",
    "MetricsReport",
    "noise_power",
    "link_budget",
    "link_sinr",
    "schedulable_ratio",
    "reliability",
    "network_capacity",
    "shannon_capacity",
    "latency",
    "ber_16qam",
    "per",
    "retransmissions",
    "quartiles",
    "summarize",
    "sinr_gain_percent",
    "linear_gain_percent",
]

BOLTZMANN = 1.38e-23


@dataclass(frozen=True)
class LinkBudget:
    p_signal: float
    p_interference: float
    p_noise: float

    @property
    def sinr(self) -> float:
        return self.p_signal / (self.p_interference + self.p_noise)

    @property
    def sinr_db(self) -> float:
        return 10.0 * math.log10(self.sinr)


@dataclass(frozen=True)
class MetricsConfig:
    gamma_th_db: float = 15.0
    packet_bytes: int = 128
    bandwidth_hz: float = 20e6
    rb_bandwidth_hz: float = 2.8e6
    temperature_k: float = 290.0
    boltzmann: float = BOLTZMANN
    # "all": every co-RB transmitter interferes; "graph": only conflict neighbors
    interferers: str = "all"


@dataclass
class MetricsReport:
    scheduler: str
    n_links: int
    n_samples: int
    mean_sinr_db: float
    sinr_q25_db: float
    sinr_q75_db: float
    mean_sinr_linear: float
    schedulable_ratio: float
    reliability: float
    capacity: float
    mean_latency_s: float
    mean_ber: float
    mean_per: float
    mean_retrans: float
    deadline_misses: int
    missed_packets: int
    messages_sent: int
    gamma_th: float
    packet_bytes: int
    n_bits: int
    bandwidth_hz: float
    rb_bandwidth_hz: float
    temperature_k: float
    boltzmann: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


def noise_power(k: float, T: float, B: float) -> float:
    if not (k > 0 and T > 0 and B > 0):
        raise DomainError(f"noise_power needs positive k, T, B; got {k}, {T}, {B}")
    return k * T * B


def link_budget(
    net: Network, g: ConflictGraph | None, co_rb: Sequence[int], i: int, p_noise: float
) -> LinkBudget:
    """Budget of link ``i`` given the links transmitting on its RB.

    With ``g`` given, only conflict neighbors of ``i`` count as interferers;
    ``g=None`` counts every co-RB transmitter.
    """
    gain = net.cross_gain
    others = [j for j in co_rb if j != i]
    if g is not None:
        nbrs = set(g.adjacency[i])
        others = [j for j in others if j in nbrs]
    p_sig = net.p_tx * float(net.link_distance[i]) ** (-net.alpha)
    p_int = net.p_tx * float(np.sum(gain[i, others])) if others else 0.0
    return LinkBudget(p_sig, p_int, p_noise)


def link_sinr(net: Network, g: ConflictGraph | None, active: np.ndarray, i: int, p_noise: float, rb: int | None = None) -> float:
    """SINR in dB of link ``i`` under the ``(links, rbs)`` ACTIVE mask ``active``."""
    active = np.asarray(active, dtype=bool)
    rbs = np.flatnonzero(active[i])
    if rbs.size == 0:
        raise InactiveLinkError(f"link {i} is not ACTIVE on any RB")
    if rb is None:
        rb = int(rbs[0])
    elif not active[i, rb]:
        raise InactiveLinkError(f"link {i} is not ACTIVE on RB {rb}")
    co = np.flatnonzero(active[:, rb])
    return link_budget(net, g, co, i, p_noise).sinr_db


def schedulable_ratio(demands, capacities, deadlines) -> float:
    x = np.asarray(demands, dtype=float)
    c = np.asarray(capacities, dtype=float)
    d = np.asarray(deadlines, dtype=float)
    if x.size == 0:
        return 0.0
    if np.any(c <= 0):
        raise DomainError("link capacities must be positive")
    return float(np.count_nonzero(x / c <= d) / x.size)


def reliability(sinrs_db, gamma_th: float) -> float:
    s = np.asarray(sinrs_db, dtype=float)
    if s.size == 0:
        return 0.0
    return float(np.count_nonzero(s >= gamma_th) / s.size)


def network_capacity(n_links: int, r_sched: float, r_rel: float) -> float:
    if not (0 <= r_sched <= 1 and 0 <= r_rel <= 1):
        raise DomainError("ratios must lie in [0, 1]")
    return n_links * r_sched * r_rel


def shannon_capacity(sinr_db: float, bandwidth_hz: float) -> float:
    if not bandwidth_hz > 0:
        raise DomainError("bandwidth must be positive")
    if sinr_db == -math.inf:
        return 0.0
    return bandwidth_hz * math.log2(1.0 + 10.0 ** (sinr_db / 10.0))


def latency(packet_bytes: float, capacity_bps: float) -> float:
    if not capacity_bps > 0:
        raise DomainError("capacity must be positive")
    return packet_bytes * 8.0 / capacity_bps


def ber_16qam(sinr_db: float) -> float:
    """Gray-coded 16-QAM bit error rate, ``3/8 * erfc(sqrt(0.4 * gamma / 2))``."""
    if sinr_db == -math.inf:
        return 0.375
    gamma = 10.0 ** (sinr_db / 10.0)
    return 0.375 * math.erfc(math.sqrt(0.4 * gamma / 2.0))


def per(ber: float, n_bits: int) -> float:
    """Packet error rate ``1 - (1 - ber)**n_bits`` evaluated in log space."""
    if not 0.0 <= ber <= 1.0:
        raise DomainError(f"ber must lie in [0, 1], got {ber}")
    if n_bits < 0:
        raise DomainError("n_bits must be >= 0")
    if n_bits == 0 or ber == 0.0:
        return 0.0
    if ber == 1.0:
        return 1.0
    return -math.expm1(n_bits * math.log1p(-ber))


def retransmissions(per_value: float) -> float:
    if not 0.0 <= per_value < 1.0:
        raise DomainError(f"retransmissions diverge unless 0 <= PER < 1, got {per_value}")
    return 1.0 / (1.0 - per_value)


def quartiles(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return float("nan"), float("nan")
    q = np.percentile(v, [25.0, 75.0], method="linear")
    return float(q[0]), float(q[1])


def _fsum_mean(values) -> float:
    v = list(values)
    return math.fsum(v) / len(v) if v else float("nan")


def slot_sinrs(net: Network, g: ConflictGraph | None, state: np.ndarray, p_noise: float) -> list[tuple[int, int, float]]:
    """``(link, rb, sinr_db)`` for every ACTIVE cell of one slot."""
    active = state == ACTIVE
    out = []
    gain = net.cross_gain
    p_sig = net.p_tx * net.link_distance ** (-net.alpha)
    mask = None if g is None else g.matrix
    for rb in range(active.shape[1]):
        co = np.flatnonzero(active[:, rb])
        if co.size == 0:
            continue
        sub = gain[np.ix_(co, co)].copy()
        np.fill_diagonal(sub, 0.0)
        if mask is not None:
            sub *= mask[np.ix_(co, co)]
        p_int = net.p_tx * sub.sum(axis=1)
        s = 10.0 * np.log10(p_sig[co] / (p_int + p_noise))
        out.extend((int(i), rb, float(v)) for i, v in zip(co, s))
    return out


def summarize(trace: ScheduleTrace, net: Network, g: ConflictGraph, cfg: MetricsConfig = MetricsConfig()) -> MetricsReport:
    """Aggregate a trace into network metrics.

    Noise uses the full system bandwidth; Shannon capacity and latency use the
    per-RB bandwidth.  A link's capacity for the schedulability test is its
    delivered packets per backlogged slot, its demand is the per-period
    packet count and its deadline the relative deadline (slots).
    """
    if not trace.slots:
        raise ValueError("empty trace")
    p_noise = noise_power(cfg.boltzmann, cfg.temperature_k, cfg.bandwidth_hz)
    g_eval = None if cfg.interferers == "all" else g
    samples: list[tuple[int, int, int, float]] = []
    for s in trace.slots:
        samples.extend((s.t, i, rb, v) for i, rb, v in slot_sinrs(net, g_eval, s.state, p_noise))
    n_bits = cfg.packet_bytes * 8
    sinr_db = [v for *_, v in samples]

    n_links = net.n_links
    per_link: list[list[float]] = [[] for _ in range(n_links)]
    for _, i, _, v in samples:
        per_link[i].append(v)
    link_mean = [(_fsum_mean(v) if v else -math.inf) for v in per_link]
    rel = reliability(link_mean, cfg.gamma_th_db)

    demands, deadlines = _demand_columns(trace)
    served = trace.transmitted.astype(float)
    busy = trace.backlog_slots.astype(float)
    ok = 0
    for i in range(n_links):
        # zero demand, or no instance released within the horizon: nothing to miss
        if demands[i] == 0 or busy[i] == 0:
            ok += 1
        elif served[i] > 0:
            ok += schedulable_ratio([demands[i]], [served[i] / busy[i]], [deadlines[i]]) == 1.0
    sched = ok / n_links if n_links else 0.0
    cap = network_capacity(n_links, sched, rel)

    if samples:
        caps = [shannon_capacity(v, cfg.rb_bandwidth_hz) for v in sinr_db]
        lat = _fsum_mean(latency(cfg.packet_bytes, c) for c in caps)
        bers = [ber_16qam(v) for v in sinr_db]
        pers = [per(b, n_bits) for b in bers]
        rts = [retransmissions(p) if p < 1.0 else math.inf for p in pers]
        q25, q75 = quartiles(sinr_db)
        mean_db = _fsum_mean(sinr_db)
        mean_lin = _fsum_mean(10.0 ** (v / 10.0) for v in sinr_db)
        mber, mper, mrt = _fsum_mean(bers), _fsum_mean(pers), _fsum_mean(rts)
    else:
        lat = mean_db = mean_lin = q25 = q75 = mber = mper = mrt = float("nan")
        cap = 0.0
        rel = 0.0

    return MetricsReport(
        scheduler=trace.scheduler,
        n_links=n_links,
        n_samples=len(samples),
        mean_sinr_db=mean_db,
        sinr_q25_db=q25,
        sinr_q75_db=q75,
        mean_sinr_linear=mean_lin,
        schedulable_ratio=sched,
        reliability=rel,
        capacity=cap,
        mean_latency_s=lat,
        mean_ber=mber,
        mean_per=mper,
        mean_retrans=mrt,
        deadline_misses=len(trace.misses),
        missed_packets=int(sum(ev.packets for ev in trace.misses)),
        messages_sent=trace.messages_sent,
        gamma_th=cfg.gamma_th_db,
        packet_bytes=cfg.packet_bytes,
        n_bits=n_bits,
        bandwidth_hz=cfg.bandwidth_hz,
        rb_bandwidth_hz=cfg.rb_bandwidth_hz,
        temperature_k=cfg.temperature_k,
        boltzmann=cfg.boltzmann,
    )


def _demand_columns(trace: ScheduleTrace) -> tuple[np.ndarray, np.ndarray]:
    specs = trace.specs
    return (
        np.array([s.packets_per_period for s in specs], dtype=float),
        np.array([s.rel_deadline for s in specs], dtype=float),
    )


def write_sinr_csv(trace: ScheduleTrace, net: Network, g: ConflictGraph, path, cfg: MetricsConfig = MetricsConfig()) -> None:
    import csv

    p_noise = noise_power(cfg.boltzmann, cfg.temperature_k, cfg.bandwidth_hz)
    g_eval = None if cfg.interferers == "all" else g
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "link", "rb", "sinr_db"])
        for s in trace.slots:
            for i, rb, v in slot_sinrs(net, g_eval, s.state, p_noise):
                wr.writerow([s.t, i, rb, repr(v)])


def sinr_gain_percent(mean_db_new: float, mean_db_ref: float) -> float:
    """Relative gain of mean SINR expressed in dB, as a percentage."""
    return (mean_db_new - mean_db_ref) / abs(mean_db_ref) * 100.0


def linear_gain_percent(mean_lin_new: float, mean_lin_ref: float) -> float:
    return (mean_lin_new / mean_lin_ref - 1.0) * 100.0
