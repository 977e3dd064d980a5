import math

import networkx as nx
import numpy as np
import pytest

from conftest import net, random_network
from evinet import stats


def to_nx(g):
    G = nx.DiGraph() if g.directed else nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from((u, v) for u, v, _ in g.edges())
    return G


def sets(summary):
    return sorted(sorted(c.tolist()) for c in summary.components())


def test_scc_examples():
    cyc = net([("a", "b"), ("b", "c"), ("c", "a")], directed=True)
    assert stats.strongly_connected_components(cyc).count == 1
    path = net([("a", "b"), ("b", "c")], directed=True)
    assert stats.strongly_connected_components(path).count == 3
    g = net([("a", "b"), ("b", "a"), ("b", "c")], directed=True)
    lab = {g.nodes.label(i) for i in range(3)}
    comps = [{g.nodes.label(i) for i in c} for c in stats.strongly_connected_components(g).components()]
    assert sorted(map(sorted, comps)) == [["a", "b"], ["c"]]
    assert lab == {"a", "b", "c"}


def test_scc_matches_networkx(rng):
    for _ in range(20):
        g = random_network(rng, 40, 0.04, directed=True)
        ours = sets(stats.strongly_connected_components(g))
        ref = sorted(sorted(c) for c in nx.strongly_connected_components(to_nx(g)))
        assert ours == ref


def test_bowtie_example():
    g = net([("x", "a"), ("a", "b"), ("b", "a"), ("b", "y")], directed=True)
    bt = stats.bowtie_decompose(g)
    lab = lambda s: {g.nodes.label(i) for i in s}
    assert lab(bt.scc_nodes) == {"a", "b"}
    assert lab(bt.in_nodes) == {"x"} and lab(bt.out_nodes) == {"y"} and not bt.misc_nodes


def test_bowtie_cycle_and_disconnected():
    cyc = net([(str(i), str((i + 1) % 5)) for i in range(5)], directed=True)
    bt = stats.bowtie_decompose(cyc)
    assert not (bt.in_nodes or bt.out_nodes or bt.misc_nodes)
    two = net([("a", "b"), ("b", "a"), ("c", "d"), ("d", "c")], directed=True)
    bt = stats.bowtie_decompose(two)
    assert bt.wcc_star_size == 2 >= len(bt.in_nodes) + len(bt.scc_nodes) + len(bt.out_nodes)


def test_bowtie_reachability_property(rng):
    for _ in range(15):
        g = random_network(rng, 40, 0.05, directed=True)
        bt = stats.bowtie_decompose(g)
        R = stats.reachability_matrix(g)
        core = sorted(bt.scc_nodes)
        for x in bt.in_nodes:
            assert R[x, core].all()
        for y in bt.out_nodes:
            assert R[core, y].all()
        all_nodes = bt.scc_nodes | bt.in_nodes | bt.out_nodes | bt.misc_nodes
        assert len(all_nodes) == g.n


def test_symmetric_links():
    assert stats.symmetric_link_fraction(net([("a", "b"), ("b", "a")], directed=True)) == 1.0
    assert stats.symmetric_link_fraction(net([("a", "b")], directed=True)) == 0.0
    g = net([("a", "b"), ("b", "a"), ("b", "c")], directed=True)
    assert stats.symmetric_link_fraction(g) == pytest.approx(2 / 3)


def test_krackhardt_examples():
    assert stats.krackhardt_hierarchy(net([("a", "b"), ("b", "c")], directed=True)).value == 1.0
    assert stats.krackhardt_hierarchy(net([("a", "b"), ("b", "a")], directed=True)).value == 0.0
    g = net([("a", "b"), ("b", "a"), ("b", "c")], directed=True)
    assert stats.krackhardt_hierarchy(g).value == pytest.approx(2 / 3)


def test_krackhardt_sampled_close_to_exact(rng):
    for seed in range(5):
        g = random_network(np.random.default_rng(seed), 150, 0.012, directed=True)
        exact = stats.krackhardt_hierarchy(g).value
        est = stats.krackhardt_hierarchy(g, sample=(10_000, seed))
        assert est.sampled and abs(est.value - exact) <= 0.05


def test_path_examples():
    p = stats.path_length_stats(net([("a", "b"), ("b", "c")]))
    assert p.length_histogram == {1: 2, 2: 1}
    assert p.diameter == 2 and p.apl == pytest.approx(4 / 3)
    k3 = stats.path_length_stats(net([("a", "b"), ("b", "c"), ("a", "c")]))
    assert k3.diameter == 1 and k3.apl == 1.0
    d = stats.path_length_stats(net([("a", "b"), ("b", "c")], directed=True))
    assert d.diameter == 2 and d.apl == pytest.approx(4 / 3)


def test_path_stats_match_networkx(rng):
    g = random_network(rng, 40, 0.12)
    G = to_nx(g)
    G = G.subgraph(max(nx.connected_components(G), key=len))
    h = g.subgraph(sorted(G.nodes))
    ps = stats.path_length_stats(h)
    assert ps.diameter == nx.diameter(G)
    assert ps.apl == pytest.approx(nx.average_shortest_path_length(G), rel=1e-12)


def test_undirected_histogram_symmetric(rng):
    g = random_network(rng, 30, 0.1)
    und = stats.path_length_stats(g)
    as_dir = stats.path_length_stats(g, treat_as="directed")
    assert {k: 2 * v for k, v in und.length_histogram.items()} == as_dir.length_histogram


def test_transitivity():
    assert stats.transitivity(net([("a", "b"), ("b", "c"), ("a", "c")])) == 1.0
    assert stats.transitivity(net([("a", "b"), ("b", "c")])) == 0.0
    k4 = [(a, b) for a in "abcd" for b in "abcd" if a < b and (a, b) != ("c", "d")]
    assert stats.transitivity(net(k4)) == pytest.approx(0.75)


def test_transitivity_matches_networkx(rng):
    g = random_network(rng, 50, 0.15)
    assert stats.transitivity(g) == pytest.approx(nx.transitivity(to_nx(g)), rel=1e-12)


def test_degree_ccdf():
    g = net([("a", "b"), ("b", "c")])
    assert stats.degree_ccdf(g) == [(1, 1.0), (2, pytest.approx(1 / 3))]
    star = net([("h", "x"), ("h", "y"), ("h", "z")])
    assert stats.degree_ccdf(star) == [(1, 1.0), (3, 0.25)]
    ring = net([(str(i), str((i + 1) % 6)) for i in range(6)])
    assert stats.degree_ccdf(ring) == [(2, 1.0)]


def test_knn():
    star = net([("h", "x"), ("h", "y"), ("h", "z")])
    assert stats.knn_profile(star).as_dict() == {1: 3.0, 3: 1.0}
    ring = net([(str(i), str((i + 1) % 6)) for i in range(6)])
    assert stats.knn_profile(ring).as_dict() == {2: 2.0}


def test_knn_matches_networkx_and_label_free(rng):
    from evinet.nullmodels import shuffle_vertex_labels
    g = random_network(rng, 60, 0.08)
    ref = nx.average_degree_connectivity(to_nx(g))
    ours = stats.knn_profile(g).as_dict()
    assert set(ours) == {k for k in ref if k > 0}
    for k, v in ours.items():
        assert v == pytest.approx(ref[k])
    shuffled = stats.knn_profile(shuffle_vertex_labels(g, 3)).as_dict()
    assert shuffled.keys() == ours.keys()
    assert all(shuffled[k] == pytest.approx(ours[k], abs=1e-12) for k in ours)


def test_summary_is_json_ready():
    import json
    g = net([("a", "b"), ("b", "c"), ("c", "a")], directed=True)
    json.dumps(stats.summary(g))
