import numpy as np
import pytest

from cnnldp.cli import cmd_gen_dataset, cmd_train
from cnnldp.config import load_config
from cnnldp.interference import load_conflict_graph
from cnnldp.nn import load_model
from cnnldp.scheduler import ModelPair
from cnnldp.topology import Link, LinkKind, Network, NetworkConfig, Node, NodeKind, Position, generate_network

# six-link example conflict graph, 1-indexed edge list
SIX_LINK_EDGES_1 = [(1, 2), (2, 3), (2, 5), (3, 4), (4, 5), (5, 6), (6, 1), (1, 5)]
SIX_LINK_EDGES = [(a - 1, b - 1) for a, b in SIX_LINK_EDGES_1]


@pytest.fixture
def six_link():
    return load_conflict_graph(SIX_LINK_EDGES, 6)


@pytest.fixture(scope="session")
def net1():
    return generate_network(NetworkConfig(), 42)


@pytest.fixture(scope="session")
def workdir(tmp_path_factory):
    """Dataset plus both models trained with the default (network1) settings."""
    out = tmp_path_factory.mktemp("work")
    cfg = load_config("network1")
    cmd_gen_dataset(cfg, out)
    cmd_train(cfg, out, "priority")
    cmd_train(cfg, out, "rb")
    return out


@pytest.fixture(scope="session")
def models(workdir):
    return ModelPair(load_model(workdir / "models/priority.cnn"), load_model(workdir / "models/rb.cnn"))


def random_graph(rng: np.random.Generator, n: int, p: float):
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return load_conflict_graph(edges, n)


def manual_net(pairs, n_channels=7, p_tx=1e-5, alpha=3.0):
    """Network from explicit (tx_xy, rx_xy) pairs, one node per endpoint."""
    nodes, links = [], []
    for k, (a, b) in enumerate(pairs):
        for xy in (a, b):
            nodes.append(Node(len(nodes), NodeKind.USER_EQUIPMENT, 0, Position(*xy)))
        d = float(np.hypot(a[0] - b[0], a[1] - b[1]))
        links.append(Link(k, 2 * k, 2 * k + 1, LinkKind.D2D, d))
    return Network((1000.0, 1000.0), (1, 1), tuple(nodes), tuple(links), n_channels, p_tx, alpha)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
