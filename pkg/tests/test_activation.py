import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stair.activation import (
    ActivationError,
    ActiveSets,
    augment_active_sets,
    build_active_sets,
    decode_bitmap,
    encode_bitmap,
    initial_active_sets,
)
from stair.floodsim import glossy_mode
from stair.topology import (
    ConnectivityGraph,
    build_connectivity_edges,
    build_min_hop_tree,
    generate_topology,
)


def line_tree():
    # source 2 -> 1 -> sink 0
    adj = np.zeros((3, 3), bool)
    adj[2, 1] = adj[1, 2] = adj[1, 0] = adj[0, 1] = True
    return build_min_hop_tree(adj, 0)


def net(seed=0, n=40, side=70.0):
    g = generate_topology(seed, n=n, side=side)
    tree = build_min_hop_tree(build_connectivity_edges(g), g.sink, g.q)
    return g, tree


def test_initial_sets_on_line():
    sets = initial_active_sets(line_tree())
    m = sets.member
    assert m[1, 2] and m[0, 2] and m[2, 2]
    assert not m[2, 1]
    assert m[0, 1] and m[1, 1]
    # the sink's own floods involve only the sink under the descendant rule
    assert list(m[:, 0]) == [True, False, False]


def test_initial_sets_on_star():
    adj = np.zeros((4, 4), bool)
    adj[0, 1:] = adj[1:, 0] = True
    sets = initial_active_sets(build_min_hop_tree(adj, 0))
    for leaf in (1, 2, 3):
        assert set(np.flatnonzero(sets.member[:, leaf])) == {0, leaf}


def test_disconnected_source_is_singleton(caplog):
    adj = np.zeros((3, 3), bool)
    adj[0, 1] = adj[1, 0] = True
    sets = initial_active_sets(build_min_hop_tree(adj, 0))
    assert list(sets.member[:, 2]) == [False, False, True]
    assert "disconnected" in caplog.text


def _line_graph(q_extra_child, q_extra_parent, n_extra=1):
    """Line 2 -> 1 -> 0 plus off-path candidates 3.. with given link qualities."""
    n = 3 + n_extra
    q = np.zeros((n, n))
    for u, v in [(2, 1), (1, 0)]:
        q[u, v] = q[v, u] = 0.9
    for i in range(n_extra):
        x = 3 + i
        q[2, x] = q_extra_child[i]
        q[x, 1] = q_extra_parent[i]
    return ConnectivityGraph(n, 0, q)


def _line_tree(n):
    adj = np.zeros((n, n), bool)
    adj[2, 1] = adj[1, 2] = adj[1, 0] = adj[0, 1] = True
    return build_min_hop_tree(adj, 0)


def test_width_two_adds_only_candidate():
    g = _line_graph([0.8], [0.7])
    tree = _line_tree(4)
    sets = augment_active_sets(initial_active_sets(tree), g, tree)
    assert sets.width == 2
    assert sets.member[3, 2]
    assert not sets.member[3, 1]


def test_argmax_candidate_wins():
    g = _line_graph([0.8, 0.7], [0.8, 0.7], n_extra=2)  # products 0.64 vs 0.49
    tree = _line_tree(5)
    sets = augment_active_sets(initial_active_sets(tree), g, tree)
    assert sets.member[3, 2] and not sets.member[4, 2]
    # the next pass takes the runner-up
    sets = augment_active_sets(sets, g, tree)
    assert sets.member[4, 2]


def test_zero_product_adds_nothing():
    g = _line_graph([0.9], [0.0])
    tree = _line_tree(4)
    before = initial_active_sets(tree)
    after = augment_active_sets(before, g, tree)
    np.testing.assert_array_equal(before.member, after.member)


def test_augment_width_argument_checked():
    g, tree = net()
    with pytest.raises(ActivationError):
        augment_active_sets(initial_active_sets(tree), g, tree, width=3)
    with pytest.raises(ActivationError):
        augment_active_sets(glossy_mode(g.n), g, tree)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 1000))
def test_width_properties(seed):
    g, tree = net(seed)
    prev = initial_active_sets(tree)
    for s in np.flatnonzero(tree.connected):
        path = tree.path_to_sink(int(s))
        assert prev.member[path, s].all()
    for w in range(2, 6):
        cur = augment_active_sets(prev, g, tree)
        assert np.all(cur.member[prev.member])
        sizes = cur.set_sizes()
        for s in np.flatnonzero(tree.connected):
            assert sizes[s] <= tree.depth[s] * w + 1
        assert np.all(glossy_mode(g.n).member[cur.member])
        prev = cur
    assert np.all(np.diag(prev.member))


def test_bitmap_layout():
    member = np.zeros((8, 8), bool)
    member[3, [0, 7]] = True
    rows = encode_bitmap(ActiveSets(8, member))
    assert rows[3] == bytes([0b10000001])
    assert all(len(r) == 1 for r in rows)

    member9 = np.ones((9, 9), bool)
    rows = encode_bitmap(ActiveSets(9, member9))
    assert rows[0] == bytes([0xFF, 0x01])


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 70), seed=st.integers(0, 10_000))
def test_bitmap_round_trip(n, seed):
    member = np.random.default_rng(seed).random((n, n)) < 0.3
    sets = ActiveSets(n, member, 3)
    back = decode_bitmap(encode_bitmap(sets), n, 3)
    np.testing.assert_array_equal(back.member, member)


def test_bitmap_decode_length_mismatch():
    with pytest.raises(ActivationError):
        decode_bitmap([b"\x00"], 9)


def test_bitmap_file(tmp_path):
    g, tree = net(3)
    sets = build_active_sets(g, tree, 4)
    sets.save(tmp_path / "a.bin")
    raw = (tmp_path / "a.bin").read_bytes()
    assert raw[:7] == b"STAIRAS"
    assert int.from_bytes(raw[7:9], "little") == g.n
    assert int.from_bytes(raw[9:11], "little") == 4
    assert len(raw) == 11 + g.n * ((g.n + 7) // 8)
    back = ActiveSets.load(tmp_path / "a.bin")
    np.testing.assert_array_equal(back.member, sets.member)
    assert back.width == 4

    glossy = glossy_mode(g.n)
    glossy.save(tmp_path / "g.bin")
    assert ActiveSets.load(tmp_path / "g.bin").width == "glossy"

    sets.save_csv(tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "node,source"
    assert len(lines) - 1 == sets.member.sum()
