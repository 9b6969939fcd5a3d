import math

import pytest
from hypothesis import given, settings, strategies as st

from qcaching import data_path
from qcaching.topology import (
    Topology,
    TopologyError,
    TopologyLoadError,
    build_chain,
    build_layered,
    build_tree,
    leaf_nodes,
    load_topology,
    parse_topology,
)


def path_cost(topo, path):
    return sum(topo.cost(a, b) for a, b in zip(path, path[1:]))


def test_chain_of_one_costs_the_custodian_link():
    t = build_chain(1, 100)
    assert t.node_count == 1
    assert t.distances_to_custodian() == [100]


def test_chain_of_three_uncached_fetch_costs_102():
    t = build_chain(3, 100)
    path = t.spf_path(0)
    assert path == [0, 1, 2, t.custodian]
    assert path_cost(t, path) == 102


def test_chain_of_two_unit_custodian():
    assert build_chain(2, 1).distances_to_custodian()[0] == 2


def test_chain_rejects_zero_nodes():
    with pytest.raises(TopologyError):
        build_chain(0, 1)


@pytest.mark.parametrize("depth", range(9))
def test_tree_node_count(depth):
    assert build_tree(depth, 100).node_count == 2 ** (depth + 1) - 1


def test_tree_custodian_sits_above_root():
    t = build_tree(2, 100)
    assert dict(t.gateways) == {0: 100}
    assert sorted(leaf_nodes(t)) == [3, 4, 5, 6]
    assert t.spf_path(5) == [5, 2, 0, t.custodian]


def test_layered_reference_instance_has_twelve_nodes():
    t = build_layered(3, 4, 100)
    assert t.node_count == 12
    assert all(g < 4 for g in t.gateways)


def test_layered_degenerate_equals_single_chain():
    assert build_layered(1, 1, 7) == build_chain(1, 7)


def test_layered_two_by_two_bottom_degree():
    t = build_layered(2, 2, 100)
    assert t.node_count == 4
    for x in (2, 3):
        assert len(t.neighbors(x)) == 3


def test_bandwidth_to_cost():
    t = parse_topology("node 0\nnode 1\nnode 2\nlink 0 1 20000\nlink 1 2 10000\ncustodian 0 100\n")
    assert t.cost(0, 1) == 1
    assert t.cost(1, 2) == 2
    assert t.custodian_link_cost == 200


@pytest.mark.parametrize(
    "text, line",
    [
        ("node 0\nnode 1\nlink 0 5 100\ncustodian 0 100\n", 3),
        ("node 0\nnode 1\nlink 0 1 0\ncustodian 0 100\n", 3),
        ("node 0\nnode 1\nlink 0 1 -5\ncustodian 0 100\n", 3),
        ("node 0\nbogus 1\n", 2),
    ],
)
def test_load_errors_carry_line_numbers(text, line):
    with pytest.raises(TopologyLoadError) as err:
        parse_topology(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_disconnected_graph_is_rejected():
    with pytest.raises(TopologyError):
        parse_topology("node 0\nnode 1\nnode 2\nlink 0 1 100\ncustodian 0 100\n")


def test_comments_and_line_order_do_not_matter():
    a = parse_topology("# x\ncustodian 1 50  # gateway\nlink 1 0 1000\nnode 1 client_weight=2\nnode 0\n")
    b = parse_topology("node 0\nnode 1 client_weight=2\nlink 0 1 1000\ncustodian 1 50\n")
    assert a == b
    assert a.client_weight == (1.0, 2.0)


def test_bundled_rnp_like_topology():
    t = load_topology(data_path("rnp_like.topo"))
    assert t.node_count == 27
    assert t.custodian_link_cost == 200
    assert sorted(t.bfs_order(12)) == list(range(27))


def test_round_trip_bundled_file():
    t = load_topology(data_path("rnp_like.topo"))
    again = parse_topology(t.to_text())
    assert again == t
    assert again.to_text() == t.to_text()


@st.composite
def topologies(draw):
    n = draw(st.integers(1, 12))
    costs = {}
    for v in range(1, n):
        u = draw(st.integers(0, v - 1))
        costs[(u, v)] = draw(st.sampled_from([0.5, 1.0, 2.0, 4.0, 10.0]))
    for _ in range(draw(st.integers(0, n))):
        a, b = sorted(draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))) if n > 1 else (0, 0)
        if a != b:
            costs[(a, b)] = draw(st.sampled_from([1.0, 2.0, 5.0]))
    gw = draw(st.dictionaries(st.integers(0, n - 1), st.sampled_from([1.0, 20.0, 100.0]), min_size=1, max_size=3))
    weights = tuple(draw(st.lists(st.sampled_from([0.0, 1.0, 2.5]), min_size=n, max_size=n)))
    if not any(weights):
        weights = (1.0,) + weights[1:]
    return Topology(n, costs, gw, weights)


@given(topologies())
@settings(max_examples=60, deadline=None)
def test_generated_topologies_are_connected_and_round_trip(t):
    for x in range(t.node_count):
        assert sorted(t.bfs_order(x)) == list(range(t.node_count))
    again = parse_topology(t.to_text())
    assert again.node_count == t.node_count
    for (a, b), c in t.link_cost.items():
        assert math.isclose(again.cost(a, b), c, rel_tol=1e-12)
    assert again == parse_topology(again.to_text())


@given(topologies())
@settings(max_examples=60, deadline=None)
def test_shortest_paths_positive_and_symmetric(t):
    dist = [t.shortest_paths_from(x) for x in range(t.node_count)]
    for x in range(t.node_count):
        for y in range(t.node_count):
            assert math.isclose(dist[x][y], dist[y][x], rel_tol=1e-12)
            if x != y:
                assert dist[x][y] > 0
    to_c = t.distances_to_custodian()
    for x in range(t.node_count):
        assert math.isclose(path_cost(t, t.spf_path(x)), to_c[x], rel_tol=1e-12)
