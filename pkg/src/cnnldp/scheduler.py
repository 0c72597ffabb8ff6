"""Per-slot distributed RB negotiation and the multi-slot simulation loop.

Each link acts as an agent holding a state per RB (UNDECIDED / ACTIVE /
INACTIVE).  Agents evaluate in synchronous rounds against the states their
neighbors last *shared*; a state change becomes visible to neighbors only
after the owner broadcasts it.  In the CNN variant a broadcast is gated on
how much of the agent's state changed since its previous broadcast.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .allocator import color_allocate_online
from .errors import NonTerminationError
from .features import gather_windows, link_features, neighborhood_windows, rb_context
from .interference import ConflictGraph
from .topology import Network
from .traffic import LinkDemandState, MissEvent, TrafficSpec, advance_slot, initial_states

__all__ = [
    "UNDECIDED",
    "ACTIVE",
    "INACTIVE",
    "STATE_NAMES",
    "SlotSchedule",
    "ScheduleTrace",
    "ModelPair",
    "cnn_rank",
    "significance_gate",
    "negotiate",
    "schedule_conflicts",
    "cnn_ldp_slot",
    "baseline_ldp_slot",
    "baseline_priorities",
    "run_horizon",
]

UNDECIDED, ACTIVE, INACTIVE = 0, 1, 2
STATE_NAMES = {UNDECIDED: "UNDECIDED", ACTIVE: "ACTIVE", INACTIVE: "INACTIVE"}
DEFAULT_GATE_THRESHOLD = 0.1


@dataclass
class SlotSchedule:
    t: int
    state: np.ndarray  # (links, rbs) int8
    priorities: np.ndarray
    messages_sent: int
    rounds: int
    # (round, link, sent) for every agent holding unshared changes after a round
    message_log: list[tuple[int, int, int]] = field(default_factory=list)

    def active(self) -> np.ndarray:
        return self.state == ACTIVE

    def active_count(self) -> np.ndarray:
        return (self.state == ACTIVE).sum(axis=1)


def cnn_rank(prio_i: float, id_i: int, prio_l: float, id_l: int) -> bool:
    """Strict total order: higher priority wins, equal priority goes to the lower id."""
    return prio_i > prio_l or (prio_i == prio_l and id_i < id_l)


def significance_gate(prev_state, new_state, threshold: float) -> bool:
    """True when the fraction of RB cells that changed exceeds ``threshold``."""
    prev = np.asarray(prev_state)
    new = np.asarray(new_state)
    if prev.size == 0:
        return False
    return bool(np.count_nonzero(prev != new) / prev.size > threshold)


def _beats_matrix(prio: np.ndarray) -> np.ndarray:
    """``[i, l]`` true iff link ``i`` outranks link ``l`` under :func:`cnn_rank`."""
    ids = np.arange(len(prio))
    return (prio[:, None] > prio[None, :]) | ((prio[:, None] == prio[None, :]) & (ids[:, None] < ids[None, :]))


def negotiate(
    g: ConflictGraph,
    residual: Sequence[int],
    priorities: Sequence[float],
    n_rb: int,
    gate_threshold: float | None = None,
    allowed: np.ndarray | None = None,
    t: int = 0,
) -> SlotSchedule:
    """Run the round-based negotiation of one slot to its fixpoint.

    ``gate_threshold=None`` shares every change immediately (the ungated
    baseline); otherwise an agent broadcasts after a round only if more than
    ``gate_threshold`` of its cells changed since its last broadcast, or one
    of its unshared changes is on an RB that a lower-ranked neighbor started
    the slot contending for (that neighbor may be waiting on it).  Changes
    nobody reads are the ones the gate may hold back, so the schedule itself
    does not depend on the threshold.  ``allowed[i, rb] = False`` starts that
    cell INACTIVE, as does every cell of a link with zero residual.
    """
    n = g.n_links
    prio = np.asarray(priorities, dtype=float)
    x = np.array(residual, dtype=int)
    state = np.full((n, n_rb), UNDECIDED, dtype=np.int8)
    if allowed is not None:
        state[~np.asarray(allowed, dtype=bool)] = INACTIVE
    # zero demand cannot reappear within the slot, so that rule is settled up front
    state[x == 0] = INACTIVE
    shared = state.copy()
    adj = g.matrix.astype(float)
    beats = _beats_matrix(prio)
    higher = (g.matrix & beats.T).astype(float)  # [i, l]: neighbor l outranks i
    lower = (g.matrix & beats).astype(float)  # [i, l]: i outranks neighbor l
    # cells some lower-ranked neighbor contends for; changes there are never held back
    contended = (lower @ (state == UNDECIDED).astype(float)) > 0
    messages = n  # initial priority broadcast
    log: list[tuple[int, int, int]] = []
    max_rounds = max(1, n * n_rb) + 1
    rounds = 0
    while True:
        if not (state == UNDECIDED).any():
            break
        rounds += 1
        if rounds > max_rounds:
            raise NonTerminationError(f"slot {t}: negotiation exceeded {max_rounds} rounds")
        nbr_active = adj @ (shared == ACTIVE).astype(float)  # (n, rb) counts of visible ACTIVE neighbors
        nbr_block = higher @ (shared == UNDECIDED).astype(float)
        for rb in range(n_rb):
            und = state[:, rb] == UNDECIDED
            zero = und & (x == 0)
            state[zero, rb] = INACTIVE
            und &= ~zero
            lose = und & (nbr_active[:, rb] > 0)
            state[lose, rb] = INACTIVE
            und &= ~lose
            win = und & (nbr_block[:, rb] == 0)
            state[win, rb] = ACTIVE
            x[win] -= 1
        changed = state != shared
        n_changed = changed.sum(axis=1)
        pending = n_changed > 0
        if gate_threshold is None:
            send = pending
        else:
            blocking = (changed & contended).any(axis=1)
            send = pending & ((n_changed / n_rb > gate_threshold) | blocking)
        shared[send] = state[send]
        messages += int(send.sum())
        for i in np.flatnonzero(pending):
            log.append((rounds, int(i), int(send[i])))
    return SlotSchedule(t, state, prio, messages, rounds, log)


def schedule_conflicts(g: ConflictGraph, state: np.ndarray) -> list[tuple[int, int, int]]:
    """Every ``(rb, i, j)`` with conflicting links ``i < j`` both ACTIVE on ``rb``."""
    act = state == ACTIVE
    out = []
    for i, j in g.edges():
        both = np.flatnonzero(act[i] & act[j])
        out.extend((int(rb), i, j) for rb in both)
    return out


# --------------------------------------------------------------------------
# priority sources


def baseline_priorities(specs: Sequence[TrafficSpec], states: Sequence[LinkDemandState]) -> np.ndarray:
    """Static key: earliest absolute deadline, then lower priority class (link id via cnn_rank)."""
    n_classes = max((s.priority_class for s in specs), default=0) + 1
    big = np.iinfo(np.int32).max
    dl = np.array([st.abs_deadline if st.residual > 0 else big for st in states], dtype=float)
    pc = np.array([s.priority_class for s in specs], dtype=float)
    return -(dl * n_classes + pc)


@dataclass
class ModelPair:
    """Trained priority and RB predictors plus their input conventions.

    The priority model sees a window of ``rows`` links: the link itself
    followed by its strongest conflicting neighbors, feature columns min-max
    scaled with the dataset statistics stored in the model metadata.  The RB
    model is queried once per link during coloring and sees the links already
    holding an RB (see :func:`rb_context`).
    """

    priority: object  # CnnModel
    rb: object | None = None

    @staticmethod
    def _scale(model, raw: np.ndarray) -> np.ndarray:
        lo = np.asarray(model.metadata["feature_min"], dtype=float)
        span = np.asarray(model.metadata["feature_span"], dtype=float)
        inv = np.divide(1.0, span, out=np.zeros_like(span), where=span > 0)
        return (raw - lo) * inv

    def predict(self, g: ConflictGraph, strength: np.ndarray, raw: np.ndarray, which: np.ndarray):
        """Priority scalars and argmax buckets for all links."""
        from .nn import forward

        n = g.n_links
        categories = self.priority.categories
        prio = np.full(n, -float(categories))
        buckets = np.full(n, categories - 1, dtype=int)
        idx = np.flatnonzero(which)
        if idx.size == 0:
            return prio, buckets
        win = neighborhood_windows(g, strength, self.priority.input_shape[0])[idx]
        xs = gather_windows(self._scale(self.priority, raw), win)
        p = forward(self.priority, xs[..., None])[:, 0, :]
        b = p.argmax(axis=1)
        buckets[idx] = b
        prio[idx] = -b + p.max(axis=1)
        return prio, buckets

    def rb_predictor(self, net: Network, g: ConflictGraph, n_rb: int):
        """``predict(link, partial_allocation) -> rb`` for :func:`color_allocate_online`."""
        from .nn import forward

        rows, cols, _ = self.rb.input_shape
        if cols != 2 * n_rb or self.rb.categories != n_rb:
            raise ValueError(f"RB model was built for {self.rb.categories} RBs, scenario has {n_rb}")
        weights, conflicts = net.coupling, g.matrix

        def predict(i: int, alloc) -> int:
            x = rb_context(weights[i], conflicts[i], alloc.rb_of(g.n_links), n_rb, rows)
            return int(forward(self.rb, x[None, :, :, None])[0, 0].argmax())

        return predict


def _allowed_mask(alloc, n_links: int, n_rb: int) -> np.ndarray:
    allowed = np.ones((n_links, n_rb), dtype=bool)
    for link, r in alloc.assigned.items():
        allowed[link] = False
        allowed[link, r] = True
    return allowed


def cnn_ldp_slot(
    net: Network,
    g: ConflictGraph,
    demand: Sequence[LinkDemandState],
    models: ModelPair,
    t: int,
    gate_threshold: float = DEFAULT_GATE_THRESHOLD,
    specs: Sequence[TrafficSpec] | None = None,
    context: dict | None = None,
) -> SlotSchedule:
    """CNN-prioritized slot: predict priorities (and RBs), colour, negotiate.

    ``context`` carries the previous slot's outputs (priority buckets and
    ACTIVE-neighbor counts) and is updated in place.
    """
    n = g.n_links
    residual = np.array([s.residual for s in demand], dtype=int)
    ttd = np.array([max(s.abs_deadline - t, 0) if s.residual > 0 else 0 for s in demand], dtype=float)
    if specs is None:
        ppp = residual.astype(float)
        pclass = np.zeros(n)
    else:
        ppp = np.array([s.packets_per_period for s in specs], dtype=float)
        pclass = np.array([s.priority_class for s in specs], dtype=float)
    ctx = context if context is not None else {}
    raw = link_features(g, residual, ttd, ppp, pclass, ctx.get("active_neighbors"), ctx.get("previous_priority"))
    prio, buckets = models.predict(g, net.cross_gain, raw, residual > 0)
    allowed = None
    if models.rb is not None:
        predict = models.rb_predictor(net, g, net.n_channels)
        alloc = color_allocate_online(g, prio, predict, net.n_channels, residual > 0)
        allowed = _allowed_mask(alloc, n, net.n_channels)
    sched = negotiate(g, residual, prio, net.n_channels, gate_threshold, allowed, t)
    ctx["previous_priority"] = buckets.astype(float)
    ctx["active_neighbors"] = g.matrix.astype(float) @ (sched.active_count() > 0).astype(float)
    return sched


def baseline_ldp_slot(
    net: Network, g: ConflictGraph, demand: Sequence[LinkDemandState], specs: Sequence[TrafficSpec], t: int
) -> SlotSchedule:
    residual = [s.residual for s in demand]
    return negotiate(g, residual, baseline_priorities(specs, demand), net.n_channels, None, None, t)


# --------------------------------------------------------------------------
# horizon loop


@dataclass
class ScheduleTrace:
    scheduler: str
    horizon: int
    seed: int
    n_rb: int
    slots: list[SlotSchedule] = field(default_factory=list)
    misses: list[MissEvent] = field(default_factory=list)
    released: np.ndarray | None = None  # packets per link
    transmitted: np.ndarray | None = None
    backlog_slots: np.ndarray | None = None  # slots each link started with residual > 0
    final_residual: np.ndarray | None = None
    specs: list[TrafficSpec] = field(default_factory=list)

    @property
    def messages_sent(self) -> int:
        return sum(s.messages_sent for s in self.slots)

    @property
    def missed(self) -> np.ndarray:
        out = np.zeros_like(self.released)
        for ev in self.misses:
            out[ev.link] += ev.packets
        return out

    def write_csv(self, out_dir: str | Path, messages: bool = False) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "schedule.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "link", "rb", "state"])
            for s in self.slots:
                for i, rb in zip(*np.nonzero(s.state == ACTIVE)):
                    wr.writerow([s.t, int(i), int(rb), "ACTIVE"])
        with open(out / "events.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "link", "event", "packets"])
            for ev in self.misses:
                wr.writerow([ev.t, ev.link, ev.event, ev.packets])
        if messages:
            with open(out / "messages.csv", "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(["t", "round", "link", "sent"])
                for s in self.slots:
                    for rnd, link, sent in s.message_log:
                        wr.writerow([s.t, rnd, link, sent])


def run_horizon(
    net: Network,
    g: ConflictGraph,
    traffic: Sequence[TrafficSpec],
    scheduler_kind: str,
    models: ModelPair | None = None,
    horizon: int = 100,
    seed: int = 0,
    gate_threshold: float = DEFAULT_GATE_THRESHOLD,
) -> ScheduleTrace:
    """Simulate ``horizon`` slots.  Fully deterministic; ``seed`` is recorded only."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if scheduler_kind not in ("baseline", "cnn"):
        raise ValueError(f"unknown scheduler {scheduler_kind!r}")
    if scheduler_kind == "cnn" and models is None:
        raise ValueError("the cnn scheduler needs trained models")
    n = g.n_links
    trace = ScheduleTrace(scheduler_kind, horizon, seed, net.n_channels, specs=list(traffic))
    released = np.zeros(n, dtype=int)
    sent = np.zeros(n, dtype=int)
    backlog = np.zeros(n, dtype=int)
    states = initial_states(traffic)
    ctx: dict = {}
    for t in range(horizon):
        before = np.array([s.residual for s in states], dtype=int)
        states, events = advance_slot(traffic, states, t)
        trace.misses.extend(events)
        after = np.array([s.residual for s in states], dtype=int)
        missed = np.zeros(n, dtype=int)
        for ev in events:
            missed[ev.link] += ev.packets
        released += after - before + missed
        backlog += after > 0
        if scheduler_kind == "cnn":
            sched = cnn_ldp_slot(net, g, states, models, t, gate_threshold, traffic, ctx)
        else:
            sched = baseline_ldp_slot(net, g, states, traffic, t)
        used = sched.active_count()
        sent += used
        states = [
            LinkDemandState(s.link, s.residual - int(k), s.abs_deadline) if k else s for s, k in zip(states, used)
        ]
        trace.slots.append(sched)
    trace.released = released
    trace.transmitted = sent
    trace.backlog_slots = backlog
    trace.final_residual = np.array([s.residual for s in states], dtype=int)
    return trace
