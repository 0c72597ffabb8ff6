import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnnldp.errors import ConfigError, DomainError
from cnnldp.topology import (
    LinkKind,
    NetworkConfig,
    NodeKind,
    generate_network,
    path_loss_gain,
    write_network_csv,
)

NET3 = NetworkConfig(region=(240.0, 240.0), cell_grid=(6, 6), node_count=320, link_count=324)


def test_network1_counts(net1):
    assert len(net1.nodes) == 91
    assert sum(n.kind == NodeKind.BASE_STATION for n in net1.nodes) == 9
    assert net1.n_links == 83


def test_network3_counts():
    net = generate_network(NET3, 42)
    assert sum(n.kind == NodeKind.BASE_STATION for n in net.nodes) == 36
    assert net.n_links == 324


def test_single_cell_single_node():
    cfg = NetworkConfig(region=(10.0, 10.0), cell_grid=(1, 1), node_count=1, link_count=0)
    net = generate_network(cfg, 0)
    assert len(net.nodes) == 1 and net.n_links == 0
    bs = net.nodes[0]
    assert bs.kind == NodeKind.BASE_STATION and (bs.pos.x, bs.pos.y) == (5.0, 5.0)


def test_too_few_nodes_rejected():
    with pytest.raises(ConfigError):
        generate_network(NetworkConfig(node_count=5), 0)


def test_unachievable_links_rejected():
    cfg = NetworkConfig(node_count=10, link_count=50, d2d_fraction=1.0)
    with pytest.raises(ConfigError):
        generate_network(cfg, 0)


def test_deterministic(net1):
    again = generate_network(NetworkConfig(), 42)
    assert again == net1
    other = generate_network(NetworkConfig(), 43)
    assert other != net1


def test_network_invariants(net1):
    cfg = NetworkConfig()
    w, h = cfg.region
    ids = [n.id for n in net1.nodes]
    assert ids == list(range(len(ids)))
    cells = [n.cell for n in net1.nodes if n.kind == NodeKind.BASE_STATION]
    assert sorted(cells) == list(range(9))
    for n in net1.nodes:
        assert 0 <= n.pos.x <= w and 0 <= n.pos.y <= h
    for lk in net1.links:
        a, b = net1.nodes[lk.tx], net1.nodes[lk.rx]
        assert lk.tx != lk.rx
        assert lk.distance == pytest.approx(math.hypot(a.pos.x - b.pos.x, a.pos.y - b.pos.y), rel=1e-12)
        assert 0 < lk.distance <= cfg.communication_range
        if lk.kind == LinkKind.CELLULAR:
            assert {a.kind, b.kind} == {NodeKind.BASE_STATION, NodeKind.USER_EQUIPMENT}
            assert a.cell == b.cell
        else:
            assert a.kind == b.kind == NodeKind.USER_EQUIPMENT
            assert lk.distance <= cfg.d2d_range


def test_d2d_fraction(net1):
    d2d = sum(lk.kind == LinkKind.D2D for lk in net1.links)
    assert d2d == round(0.3 * 83)


def test_cross_distance_orientation(net1):
    i, j = 3, 7
    rx_i = net1.nodes[net1.links[i].rx].pos
    tx_j = net1.nodes[net1.links[j].tx].pos
    assert net1.cross_distance[i, j] == pytest.approx(math.hypot(rx_i.x - tx_j.x, rx_i.y - tx_j.y))
    assert np.allclose(np.diag(net1.cross_distance), net1.link_distance)


def test_coupling_symmetric(net1):
    w = net1.coupling
    assert np.allclose(w, w.T)
    assert np.all(np.diag(w) == 0)
    g = net1.cross_gain
    assert w[2, 5] == pytest.approx(g[2, 5] / g[2, 2] + g[5, 2] / g[5, 5])


@pytest.mark.parametrize(
    "d, alpha, expected",
    [(1.0, 3.0, 1.0), (10.0, 2.0, 0.01), (7.3, 3.0, 1 / 7.3**3)],
)
def test_path_loss_examples(d, alpha, expected):
    assert path_loss_gain(d, alpha) == pytest.approx(expected, rel=1e-12)


def test_path_loss_example_value():
    assert path_loss_gain(7.3, 3.0) == pytest.approx(2.571e-3, rel=1e-3)


@pytest.mark.parametrize("d", [0.0, -1.0])
def test_path_loss_domain(d):
    with pytest.raises(DomainError):
        path_loss_gain(d, 3.0)


@given(st.floats(0.01, 1e4), st.floats(0.01, 1e4), st.floats(0.1, 6.0))
def test_path_loss_strictly_decreasing(a, b, alpha):
    if a == b:
        return
    lo, hi = sorted((a, b))
    assert path_loss_gain(lo, alpha) > path_loss_gain(hi, alpha)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**63 - 1))
def test_any_seed_deterministic(seed):
    cfg = NetworkConfig(node_count=40, link_count=30)
    assert generate_network(cfg, seed) == generate_network(cfg, seed)


def test_csv_export(tmp_path, net1):
    write_network_csv(net1, tmp_path)
    nodes = (tmp_path / "nodes.csv").read_text().splitlines()
    links = (tmp_path / "links.csv").read_text().splitlines()
    assert nodes[0] == "id,kind,cell,x,y" and len(nodes) == 92
    assert links[0] == "id,tx,rx,kind,distance" and len(links) == 84
