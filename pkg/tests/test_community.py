import itertools

import networkx as nx
import numpy as np
import pytest

from conftest import net, random_network
from evinet.community import (
    CommunityAllocation, QualityScoreTable, conductance_of_set, inter_cluster_conductance,
    intra_cluster_conductance, min_conductance_cut, modularity, rate_allocations, read_allocations,
    restrict_allocation, score_allocation, segregation_index, write_allocation,
)

TWO_TRIANGLES = [("a", "b"), ("b", "c"), ("a", "c"), ("d", "e"), ("e", "f"), ("d", "f")]
PATH4 = [("a", "b"), ("b", "c"), ("c", "d")]


def idx(g, labels):
    return [g.nodes.index(x) for x in labels]


def brute_phi(g, nodes):
    """Exhaustive min conductance over every proper cut of the induced subgraph."""
    nodes = list(nodes)
    W = g.adjacency().toarray()[np.ix_(nodes, nodes)]
    if not g.directed:
        deg = W.sum(1)
    else:
        deg = W.sum(0) + W.sum(1)
    best = np.inf
    k = len(nodes)
    for r in range(1, k):
        for side in itertools.combinations(range(k), r):
            inside = np.zeros(k, bool)
            inside[list(side)] = True
            if g.directed:
                cut = W[np.ix_(inside, ~inside)].sum()
            else:
                cut = W[np.ix_(inside, ~inside)].sum()
            vol = min(deg[inside].sum(), deg[~inside].sum())
            phi = 1.0 if cut > 0 and vol == 0 else (0.0 if cut == 0 else cut / vol)
            best = min(best, phi)
    return best


def test_restrict_allocation_examples():
    g = net([("a", "b"), ("b", "c")])
    ra = restrict_allocation(CommunityAllocation("x", [["a", "b"], ["c"]]), g)
    assert len(ra.communities) == 2 and ra.dropped_nodes == ra.dropped_communities == 0
    g2 = net([("a", "b")])
    ra = restrict_allocation(CommunityAllocation("x", [["a", "b"], ["x", "y"]]), g2)
    assert len(ra.communities) == 1 and ra.dropped_communities == 1
    ra = restrict_allocation(CommunityAllocation("x", [["a", "x"]]), g2)
    assert [len(c) for c in ra.communities] == [1] and ra.dropped_nodes == 1
    with pytest.raises(ValueError):
        restrict_allocation(CommunityAllocation("x", [["q"]]), g2)


def test_allocation_validation():
    with pytest.raises(ValueError):
        CommunityAllocation("x", [["a"], []])
    with pytest.raises(ValueError):
        CommunityAllocation("x", [["a", "b"], ["b"]])


def test_modularity_closed_forms():
    g = net(TWO_TRIANGLES)
    assert modularity(g, CommunityAllocation("one", [list("abcdef")])) == 0.0
    assert modularity(g, CommunityAllocation("t", [list("abc"), list("def")])) == pytest.approx(0.5, abs=1e-12)
    d = net([("a", "b"), ("b", "a"), ("c", "d"), ("d", "c")], directed=True)
    assert modularity(d, CommunityAllocation("t", [["a", "b"], ["c", "d"]])) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("directed", [False, True])
def test_modularity_matches_networkx(rng, directed):
    for _ in range(10):
        g = random_network(rng, 30, 0.15, directed)
        member = rng.integers(0, 3, size=30)
        comms = [[str(i) for i in np.flatnonzero(member == c)] for c in range(3) if (member == c).any()]
        G = nx.DiGraph() if directed else nx.Graph()
        G.add_nodes_from(str(i) for i in range(30))
        G.add_edges_from((g.nodes.label(u), g.nodes.label(v)) for u, v, _ in g.edges())
        ref = nx.community.modularity(G, [set(c) for c in comms])
        assert modularity(g, CommunityAllocation("r", comms)) == pytest.approx(ref, abs=1e-12)


def test_segregation_examples():
    g = net(PATH4)
    mean, per = segregation_index(g, CommunityAllocation("x", [["a", "b"]]))
    assert per == [pytest.approx(0.5)]
    iso = net([("a", "b"), ("c", "d")])
    assert segregation_index(iso, CommunityAllocation("x", [["a", "b"]]))[1] == [1.0]
    dense = net([("a", "b"), ("a", "c"), ("b", "c"), ("c", "d")])
    assert segregation_index(dense, CommunityAllocation("x", [["c"]]))[1] == [0.0]


def test_segregation_whole_population_scores_zero(caplog):
    g = net(PATH4)
    mean, per = segregation_index(g, CommunityAllocation("x", [list("abcd")]))
    assert per == [0.0]


def test_conductance_examples():
    g = net(PATH4)
    assert conductance_of_set(g, range(g.n)) == 1.0
    assert conductance_of_set(g, []) == 1.0
    assert conductance_of_set(g, idx(g, "ab")) == pytest.approx(1 / 3)
    two = net([("a", "b"), ("c", "d")])
    assert conductance_of_set(two, idx(two, "ab")) == 0.0


def test_min_cut_examples():
    bridge = net(TWO_TRIANGLES + [("c", "d")])
    cut, phi = min_conductance_cut(bridge, method="brute")
    assert phi == pytest.approx(1 / 7)
    assert {bridge.nodes.label(i) for i in cut} in ({"a", "b", "c"}, {"d", "e", "f"})
    k4 = net([(a, b) for a, b in itertools.combinations("abcd", 2)])
    assert min_conductance_cut(k4, method="brute")[1] == pytest.approx(brute_phi(k4, range(4)))
    assert min_conductance_cut(k4, method="brute")[1] == pytest.approx(2 / 3)
    p = net(PATH4)
    cut, phi = min_conductance_cut(p, method="brute")
    assert phi == pytest.approx(1 / 3)
    assert {p.nodes.label(i) for i in cut} in ({"a", "b"}, {"c", "d"})
    with pytest.raises(ValueError):
        min_conductance_cut(p, [0])


@pytest.mark.parametrize("directed", [False, True])
def test_brute_matches_oracle_and_sweep_not_better(rng, directed):
    for _ in range(25):
        k = int(rng.integers(3, 10))
        g = random_network(rng, k, 0.4, directed)
        _, phi = min_conductance_cut(g, method="brute")
        assert phi == pytest.approx(brute_phi(g, range(k)), abs=1e-12)
        assert min_conductance_cut(g, method="sweep")[1] >= phi - 1e-12


def test_conductance_complement_symmetry(rng):
    for _ in range(50):
        g = random_network(rng, 12, 0.3)
        C = np.flatnonzero(rng.random(12) < 0.5)
        rest = np.setdiff1d(np.arange(12), C)
        assert conductance_of_set(g, C) == pytest.approx(conductance_of_set(g, rest), abs=1e-12)


def test_intra_cluster_conductance():
    p = net(PATH4)
    assert intra_cluster_conductance(p, CommunityAllocation("x", [list("abcd")]))[0] == pytest.approx(1 / 3)
    g = net(TWO_TRIANGLES)
    value, detail = intra_cluster_conductance(g, CommunityAllocation("x", [list("abc"), list("def")]))
    assert value == pytest.approx(1.0) and detail == [pytest.approx(1.0)] * 2
    two = net([("a", "b"), ("c", "d")])
    assert intra_cluster_conductance(two, CommunityAllocation("x", [list("abcd")]))[0] == 0.0
    value, detail = intra_cluster_conductance(g, CommunityAllocation("x", [["a"], list("def")]))
    assert detail[0] is None
    with pytest.raises(ValueError):
        intra_cluster_conductance(g, CommunityAllocation("x", [["a"], ["d"]]))


def test_inter_cluster_conductance():
    two = net(TWO_TRIANGLES)
    assert inter_cluster_conductance(two, CommunityAllocation("x", [list("abc"), list("def")]))[0] == 1.0
    assert inter_cluster_conductance(two, CommunityAllocation("x", [list("abcdef")]))[0] == 0.0
    bridge = net(TWO_TRIANGLES + [("c", "d")])
    value, detail = inter_cluster_conductance(bridge, CommunityAllocation("x", [list("abc"), list("def")]))
    assert detail == [pytest.approx(1 / 7)] * 2 and value == pytest.approx(6 / 7)


def test_rate_allocations_ranks_true_cliques_first():
    g = net(TWO_TRIANGLES + [("c", "d")], name="G")
    good = CommunityAllocation("A", [list("abc"), list("def")])
    flat = CommunityAllocation("B", [list("abcdef")])
    foreign = CommunityAllocation("C", [["x", "y"]])
    table = rate_allocations([good, flat, foreign], [g], ["modularity"])
    scores = table.scores("G", "modularity")
    assert scores["A"] > scores["B"] == 0.0
    assert "C" not in scores and table.get("C", "G", "modularity") is None


def test_scores_label_invariant(rng):
    g = random_network(rng, 25, 0.2, name="G")
    comms = [[str(i) for i in range(0, 12)], [str(i) for i in range(12, 25)]]
    alloc = CommunityAllocation("x", comms)
    perm = rng.permutation(25)
    h = g.relabeled(perm)
    lab = g.nodes.labels
    moved = CommunityAllocation("x", [[lab[perm[g.nodes.index(u)]] for u in c] for c in comms])
    for fn in ("modularity", "segregation", "intra_conductance", "inter_conductance"):
        a = score_allocation(g, alloc, fn).score
        b = score_allocation(h, moved, fn).score
        assert a == pytest.approx(b, abs=1e-12)


def test_allocation_io_and_table_round_trip(tmp_path):
    alloc = CommunityAllocation("alpha", [["a", "b"], ["c"]])
    write_allocation(alloc, tmp_path / "alpha.tsv")
    (back,) = read_allocations(tmp_path)
    assert back.allocation_id == "alpha" and set(back.communities) == set(alloc.communities)
    g = net(PATH4, name="P")
    table = rate_allocations([back], [g])
    table.to_csv(tmp_path / "s.csv", ["header"])
    again = QualityScoreTable.from_csv(tmp_path / "s.csv")
    assert again.scores("P", "modularity") == table.scores("P", "modularity")
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(ValueError):
        read_allocations(empty)
