"""Periodic real-time traffic and per-slot residual demand."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .topology import Network

__all__ = [
    "TrafficConfig",
    "TrafficSpec",
    "LinkDemandState",
    "MissEvent",
    "relative_deadline",
    "generate_traffic",
    "initial_states",
    "advance_slot",
    "write_traffic_csv",
    "read_traffic_csv",
]


@dataclass(frozen=True)
class TrafficConfig:
    demand_range: tuple[int, int] = (1, 3)
    deadline_scale: tuple[float, float] = (1.2, 2.0)
    # period = max(rel_deadline, round(rel_deadline * period_scale))
    period_scale: float = 1.0
    random_phase: bool = True
    n_priority_classes: int = 3

    def validate(self) -> None:
        lo, hi = self.demand_range
        if lo < 0 or hi < lo:
            raise ConfigError(f"bad demand_range {self.demand_range}")
        slo, shi = self.deadline_scale
        if slo < 1.0:
            raise ConfigError(
                f"deadline scale lower bound {slo} < 1.0 makes demand unschedulable by construction"
            )
        if shi < slo:
            raise ConfigError(f"bad deadline_scale {self.deadline_scale}")
        if self.period_scale < 1.0:
            raise ConfigError("period_scale must be >= 1")
        if self.n_priority_classes < 1:
            raise ConfigError("n_priority_classes must be >= 1")


@dataclass(frozen=True)
class TrafficSpec:
    link: int
    first_arrival: int
    period: int
    rel_deadline: int
    packets_per_period: int
    priority_class: int = 0

    def __post_init__(self) -> None:
        if self.period < 1:
            raise ConfigError(f"link {self.link}: period must be >= 1")
        if not 1 <= self.rel_deadline <= self.period:
            raise ConfigError(f"link {self.link}: need 1 <= rel_deadline <= period")
        if self.packets_per_period < 0:
            raise ConfigError(f"link {self.link}: negative demand")


@dataclass(frozen=True)
class LinkDemandState:
    link: int
    residual: int = 0
    abs_deadline: int = -1


@dataclass(frozen=True)
class MissEvent:
    t: int
    link: int
    packets: int
    event: str = "miss"


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def relative_deadline(demand: int, scale: float) -> int:
    """Deadline in slots for one instance: ``round(demand * scale)``, at least 1."""
    return max(1, _round_half_up(demand * scale))


def generate_traffic(net: Network, cfg: TrafficConfig, seed: int) -> list[TrafficSpec]:
    cfg.validate()
    rng = np.random.default_rng(seed)
    lo, hi = cfg.demand_range
    specs = []
    for lk in net.links:
        demand = int(rng.integers(lo, hi + 1))
        scale = float(rng.uniform(*cfg.deadline_scale))
        rel = relative_deadline(demand, scale)
        period = max(rel, _round_half_up(rel * cfg.period_scale))
        first = int(rng.integers(0, period)) if cfg.random_phase else 0
        pclass = int(rng.integers(0, cfg.n_priority_classes))
        specs.append(TrafficSpec(lk.id, first, period, rel, demand, pclass))
    return specs


def initial_states(specs: Sequence[TrafficSpec]) -> list[LinkDemandState]:
    return [LinkDemandState(s.link) for s in specs]


def advance_slot(
    specs: Sequence[TrafficSpec], states: Sequence[LinkDemandState], t: int
) -> tuple[list[LinkDemandState], list[MissEvent]]:
    """Expire instances whose deadline is ``t`` then release new instances at ``t``.

    Expired residual is dropped and reported as a :class:`MissEvent`.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    out: list[LinkDemandState] = []
    events: list[MissEvent] = []
    for spec, st in zip(specs, states):
        if st.residual > 0 and st.abs_deadline == t:
            events.append(MissEvent(t, spec.link, st.residual))
            st = replace(st, residual=0)
        if t >= spec.first_arrival and (t - spec.first_arrival) % spec.period == 0:
            if spec.packets_per_period > 0:
                st = replace(st, residual=st.residual + spec.packets_per_period, abs_deadline=t + spec.rel_deadline)
        out.append(st)
    return out, events


_TRAFFIC_COLUMNS = ["link", "first_arrival", "period", "rel_deadline", "demand", "priority_class"]


def write_traffic_csv(specs: Sequence[TrafficSpec], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(_TRAFFIC_COLUMNS)
        for s in specs:
            wr.writerow([s.link, s.first_arrival, s.period, s.rel_deadline, s.packets_per_period, s.priority_class])


def read_traffic_csv(path: str | Path) -> list[TrafficSpec]:
    with open(path, newline="") as fh:
        return [
            TrafficSpec(
                int(r["link"]),
                int(r["first_arrival"]),
                int(r["period"]),
                int(r["rel_deadline"]),
                int(r["demand"]),
                int(r["priority_class"]),
            )
            for r in csv.DictReader(fh)
        ]
