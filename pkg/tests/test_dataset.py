import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnnldp.allocator import Allocation, conflict_check
from cnnldp.dataset import (
    generate_dataset,
    label_priorities,
    load_dataset,
    priority_samples,
    rb_samples,
    save_dataset,
)
from cnnldp.errors import ConfigError
from cnnldp.interference import load_conflict_graph


@pytest.fixture(scope="module")
def small_ds():
    return generate_dataset(12, 8, 7, seed=3)


def buckets(labels):
    return labels.argmax(1).tolist()


def test_identical_links_share_bucket():
    assert buckets(label_priorities([2] * 4, [4] * 4, [1] * 4, 8)) == [0, 0, 0, 0]


def test_dominant_link_first():
    out = buckets(label_priorities([1, 1, 9, 1], [5, 5, 10, 5], [0, 0, 0, 0], 4))
    assert out[2] == 0 and all(b > 0 for i, b in enumerate(out) if i != 2)


def test_hand_quantiles():
    # u = d/D + 0.1 deg -> [0.5, 0.7, 0.25, 0.9, 0.3]; ranks [2, 1, 4, 0, 3]
    d, dl, deg = [2, 3, 1, 4, 3], [4, 5, 4, 5, 10], [0, 1, 0, 1, 0]
    # bucket = rank * 3 // 5
    assert buckets(label_priorities(d, dl, deg, 3)) == [1, 0, 2, 0, 1]


def test_label_length_mismatch():
    with pytest.raises(ValueError):
        label_priorities([1, 2], [3], [0, 0], 4)


@settings(max_examples=100)
@given(st.data())
def test_buckets_nonempty_when_links_cover_categories(data):
    n = data.draw(st.integers(8, 30))
    d = np.array(data.draw(st.lists(st.integers(1, 8), min_size=n, max_size=n)))
    dl = d * 2
    # distinct degrees make every urgency distinct
    deg = np.array(data.draw(st.permutations(range(n))))
    lab = label_priorities(d, dl, deg, 8)
    assert lab.sum(0).min() >= 1


def test_single_link_sample():
    ds = generate_dataset(1, 1, 3, seed=0)
    assert ds.y_priority[0, 0].argmax() == 0 and ds.y_rb[0, 0].argmax() == 0


def test_shapes_and_invariants(small_ds):
    ds = small_ds
    assert ds.features.shape == (12, 8, 8)
    assert ds.y_priority.shape == (12, 8, 8) and ds.y_rb.shape == (12, 8, 7)
    assert ds.rb_inputs.shape == (12 * 8, 8, 14)
    assert np.all(ds.y_priority.sum(-1) == 1) and np.all(ds.y_rb.sum(-1) == 1)
    assert np.all(ds.deadlines >= 1.2 * ds.demands)
    assert np.all(ds.deadlines <= np.ceil(2.0 * ds.demands))
    assert ds.demands.min() >= 1 and ds.demands.max() <= 8


def test_rb_labels_conflict_free(small_ds):
    for s in range(small_ds.n_samples):
        adj = small_ds.adjacency[s]
        g = load_conflict_graph([(i, j) for i in range(8) for j in range(i + 1, 8) if adj[i, j]], 8)
        alloc = Allocation({i: int(r) for i, r in enumerate(small_ds.y_rb[s].argmax(1))})
        assert conflict_check(g, alloc) == []


def test_deterministic():
    a, b = generate_dataset(3, 5, 4, seed=11), generate_dataset(3, 5, 4, seed=11)
    for name in ("features", "y_priority", "y_rb", "adjacency", "rb_inputs", "positions"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert not np.array_equal(a.positions, generate_dataset(3, 5, 4, seed=12).positions)


def test_errors():
    with pytest.raises(ConfigError):
        generate_dataset(2, 4, 0, seed=0)
    with pytest.raises(ConfigError):
        generate_dataset(0, 4, 3, seed=0)
    with pytest.raises(ConfigError):
        generate_dataset(2, 4, 3, seed=0, deadline_scale=(0.5, 2.0))


def test_samples(small_ds):
    p = priority_samples(small_ds)
    assert p.x.shape == (12, 8, 8, 1) and p.x.min() >= 0 and p.x.max() <= 1
    r = rb_samples(small_ds)
    assert r.x.shape == (96, 8, 14, 1) and r.y.shape == (96, 1, 7)
    # the target RB is never blocked by an already-colored neighbor
    assert np.all((r.y * r.indicators).sum(-1) == 0)


def test_round_trip(tmp_path, small_ds):
    save_dataset(small_ds, tmp_path)
    for f in ("features.bin", "labels_priority.bin", "labels_rb.bin", "meta.csv"):
        assert (tmp_path / f).is_file()
    back = load_dataset(tmp_path)
    for name in ("features", "y_priority", "y_rb", "adjacency", "rb_inputs", "positions",
                 "demands", "deadlines", "priority_class", "feature_min", "feature_span"):
        assert np.array_equal(getattr(back, name), getattr(small_ds, name)), name
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / "missing")
