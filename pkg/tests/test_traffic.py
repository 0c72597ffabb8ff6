import pytest
from hypothesis import given
from hypothesis import strategies as st

from cnnldp.errors import ConfigError
from cnnldp.traffic import (
    LinkDemandState,
    TrafficConfig,
    TrafficSpec,
    advance_slot,
    generate_traffic,
    initial_states,
    read_traffic_csv,
    relative_deadline,
    write_traffic_csv,
)


@pytest.mark.parametrize("demand, scale, expected", [(5, 1.2, 6), (10, 2.0, 20), (3, 1.5, 5), (0, 1.7, 1)])
def test_relative_deadline(demand, scale, expected):
    assert relative_deadline(demand, scale) == expected


def test_scale_below_one_rejected(net1):
    with pytest.raises(ConfigError):
        generate_traffic(net1, TrafficConfig(deadline_scale=(0.9, 2.0)), 0)


def test_generate_traffic_rules(net1):
    cfg = TrafficConfig(demand_range=(1, 8), period_scale=3.0)
    specs = generate_traffic(net1, cfg, 7)
    assert [s.link for s in specs] == list(range(net1.n_links))
    for s in specs:
        assert 1 <= s.packets_per_period <= 8
        assert 1.2 * s.packets_per_period - 0.5 <= s.rel_deadline <= 2.0 * s.packets_per_period + 0.5
        assert s.rel_deadline <= s.period
        assert 0 <= s.first_arrival < s.period
    assert specs == generate_traffic(net1, cfg, 7)


def test_period_defaults_to_deadline(net1):
    specs = generate_traffic(net1, TrafficConfig(random_phase=False), 1)
    assert all(s.period == s.rel_deadline and s.first_arrival == 0 for s in specs)


def test_first_release():
    spec = TrafficSpec(0, 0, 10, 6, 3)
    states, events = advance_slot([spec], initial_states([spec]), 0)
    assert states[0] == LinkDemandState(0, 3, 6) and events == []


def test_between_releases_unchanged():
    spec = TrafficSpec(0, 0, 10, 6, 3)
    st0 = [LinkDemandState(0, 2, 6)]
    states, events = advance_slot([spec], st0, 4)
    assert states == st0 and events == []


def test_miss_recorded_and_dropped():
    spec = TrafficSpec(0, 0, 10, 6, 3)
    states, events = advance_slot([spec], [LinkDemandState(0, 1, 6)], 6)
    assert len(events) == 1 and events[0].link == 0 and events[0].packets == 1
    assert states[0].residual == 0


def test_miss_then_release_same_slot():
    spec = TrafficSpec(0, 0, 4, 4, 2)
    states, events = advance_slot([spec], [LinkDemandState(0, 1, 4)], 4)
    assert len(events) == 1 and states[0] == LinkDemandState(0, 2, 8)


def test_zero_demand_never_active():
    spec = TrafficSpec(0, 0, 1, 1, 0)
    states = initial_states([spec])
    for t in range(20):
        states, events = advance_slot([spec], states, t)
        assert states[0].residual == 0 and events == []


def test_spec_validation():
    with pytest.raises(ConfigError):
        TrafficSpec(0, 0, 3, 4, 1)
    with pytest.raises(ConfigError):
        TrafficSpec(0, 0, 0, 1, 1)


@given(
    st.integers(0, 6),
    st.integers(1, 8),
    st.integers(0, 7),
    st.lists(st.integers(0, 3), min_size=40, max_size=40),
)
def test_conservation(demand, rel, phase, served):
    """released = delivered + missed + outstanding, and residual never negative."""
    period = rel + 2
    spec = TrafficSpec(0, phase % period, period, rel, demand)
    states = initial_states([spec])
    released = delivered = missed = 0
    for t, s in enumerate(served):
        before = states[0].residual
        states, events = advance_slot([spec], states, t)
        missed += sum(e.packets for e in events)
        released += states[0].residual - before + sum(e.packets for e in events)
        take = min(s, states[0].residual)
        delivered += take
        states = [LinkDemandState(0, states[0].residual - take, states[0].abs_deadline)]
        assert states[0].residual >= 0
        if states[0].residual > 0:
            assert states[0].abs_deadline > t
    assert released == delivered + missed + states[0].residual


def test_csv_round_trip(tmp_path, net1):
    specs = generate_traffic(net1, TrafficConfig(), 3)
    path = tmp_path / "traffic.csv"
    write_traffic_csv(specs, path)
    assert path.read_text().splitlines()[0] == "link,first_arrival,period,rel_deadline,demand,priority_class"
    assert read_traffic_csv(path) == specs
