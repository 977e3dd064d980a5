"""Fuzzed invariants, 1000 generated cases per module."""
import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from evinet import stats
from evinet.community import (
    CommunityAllocation, conductance_of_set, inter_cluster_conductance, min_conductance_cut, modularity,
    segregation_index,
)
from evinet.graph import build_network, read_edgelist, restrict_to_common, write_edgelist
from evinet.nullmodels import RewirePlan, rewire_degree_preserving, shuffle_feature_assignment
from evinet.overlap import neighborhood_scores
from evinet.qap import graph_correlation
from evinet.ranking import Ranking, kendall_tau, overlap_pmf, topk_overlap_curve
from evinet.semantics import build_profiles, cosine_similarity
from evinet.synth import PlantedWorld, generate_world, perturb_allocation

CASES = settings(max_examples=1000, deadline=None, derandomize=True,
                 suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])


@st.composite
def networks(draw, min_n=2, max_n=10, directed=None, weighted=False, min_edges=1):
    n = draw(st.integers(min_n, max_n))
    directed = draw(st.booleans()) if directed is None else directed
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j and (directed or i < j)]
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=min_edges, max_size=len(pairs), unique=True))
    weights = (draw(st.lists(st.floats(0.5, 4.0), min_size=len(chosen), max_size=len(chosen)))
               if weighted else [1.0] * len(chosen))
    labels = [f"v{i}" for i in range(n)]
    return build_network([(labels[i], labels[j], w) for (i, j), w in zip(chosen, weights)],
                         directed=directed, nodes=labels, name=draw(st.sampled_from(["a", "b"])))


@st.composite
def partitions(draw, g):
    member = draw(st.lists(st.integers(0, 3), min_size=g.n, max_size=g.n))
    comms = [[g.nodes.label(i) for i in range(g.n) if member[i] == c] for c in range(4)]
    return CommunityAllocation("p", [c for c in comms if c])


# graph-core

@CASES
@given(networks(weighted=True))
def test_graph_transpose_and_round_trip(tmp_path_factory, g):
    src, dst, w = g.arcs()
    inw = g.in_adj
    for u, v, x in zip(src, dst, w):
        assert inw[v, u] == x
    path = tmp_path_factory.mktemp("rt") / "g.tsv"
    write_edgelist(g, path)
    h = read_edgelist(path, g.directed)
    assert h.edge_dict() == g.edge_dict()


@CASES
@given(networks(), networks())
def test_restrict_shares_table(g1, g2):
    common = set(g1.nodes.labels) & set(g2.nodes.labels)
    pair = restrict_to_common(g1, g2)
    assert pair.first.nodes is pair.second.nodes and set(pair.nodes.labels) == common


# struct-stats

@CASES
@given(networks(directed=True))
def test_bowtie_and_ccdf(g):
    bt = stats.bowtie_decompose(g)
    R = stats.reachability_matrix(g)
    core = sorted(bt.scc_nodes)
    assert all(R[x, core].all() for x in bt.in_nodes)
    assert all(R[core, y].all() for y in bt.out_nodes)
    assert len(bt.scc_nodes | bt.in_nodes | bt.out_nodes | bt.misc_nodes) == g.n
    ccdf = stats.degree_ccdf(g)
    fr = [p for _, p in ccdf]
    assert fr[0] == 1.0 and all(a >= b for a, b in zip(fr, fr[1:]))


@CASES
@given(networks(directed=False))
def test_undirected_path_histogram_symmetric(g):
    try:
        und = stats.path_length_stats(g)
    except ValueError:
        return
    both = stats.path_length_stats(g, treat_as="directed")
    assert {k: 2 * v for k, v in und.length_histogram.items()} == both.length_histogram


# semantics

vectors = st.lists(st.floats(0, 10, allow_nan=False), min_size=5, max_size=5)


@CASES
@given(vectors, vectors, st.floats(0.01, 100))
def test_cosine_symmetric_and_scale_free(u, v, c):
    u, v = np.array(u), np.array(v)
    if not (u > 1e-6).any() or not (v > 1e-6).any():
        return
    assert cosine_similarity(u, v) == pytest.approx(cosine_similarity(v, u), abs=1e-12)
    assert cosine_similarity(c * u, v) == pytest.approx(cosine_similarity(u, v), abs=1e-9)


@CASES
@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 4), st.integers(1, 5)), min_size=2, max_size=30),
       st.integers(0, 2 ** 32 - 1))
def test_feature_shuffle_keeps_row_multiset(records, seed):
    prof = build_profiles([(f"u{u}", f"t{t}", c) for u, t, c in records])
    if prof.n_users < 2:
        return
    shuffled = shuffle_feature_assignment(prof, seed)
    rows = lambda p: sorted(tuple(p.counts[i].toarray().ravel()) for i in range(p.n_users))
    assert rows(shuffled) == rows(prof)


# overlap

@CASES
@given(networks(max_n=8), networks(max_n=8))
def test_jaccard_precision_relations(g1, g2):
    if g1.directed != g2.directed:
        return
    p12, p21 = restrict_to_common(g1, g2), restrict_to_common(g2, g1)
    try:
        jac = neighborhood_scores(p12, "jaccard").scores
        pre = neighborhood_scores(p12, "precision").scores
        jac21 = neighborhood_scores(p21, "jaccard").scores
    except ValueError:
        return
    lab = lambda p, d: {p.nodes.label(i): v for i, v in d.items()}
    jac, pre, jac21 = lab(p12, jac), lab(p12, pre), lab(p21, jac21)
    for u in set(jac) & set(pre):
        assert jac[u] <= pre[u] + 1e-12
    for u in set(jac) & set(jac21):
        assert jac[u] == pytest.approx(jac21[u], abs=1e-12)


# qap

@CASES
@given(networks(min_n=3, directed=True, weighted=True), st.data())
def test_correlation_label_and_affine_invariance(g1, data):
    n = g1.n
    labels = g1.nodes.labels
    recs = [(g1.nodes.label(u), g1.nodes.label(v), w) for u, v, w in zip(*g1.arcs())]
    keep = data.draw(st.lists(st.booleans(), min_size=len(recs), max_size=len(recs)))
    sub = [r for r, k in zip(recs, keep) if k] or recs[:1]
    g2 = build_network(sub, directed=True, nodes=labels, name="b")
    a, b = data.draw(st.floats(0.1, 10)), data.draw(st.floats(0.0, 5))
    g2s = build_network([(u, v, a * w + b) for u, v, w in sub], directed=True, nodes=labels, name="b")
    pair = restrict_to_common(g1, g2)
    try:
        rho = graph_correlation(pair, weighted=True)
    except ValueError:
        return
    perm = np.array(data.draw(st.permutations(range(n))))
    rho_p = graph_correlation(restrict_to_common(g1.relabeled(perm), g2.relabeled(perm)), weighted=True)
    assert rho_p == pytest.approx(rho, abs=1e-12)
    if len(sub) < n * n - n:
        # a shift would also have to move the empty cells; a positive scale is exact
        g2c = build_network([(u, v, a * w) for u, v, w in sub], directed=True, nodes=labels, name="b")
        assert graph_correlation(restrict_to_common(g1, g2c), weighted=True) == pytest.approx(rho, abs=1e-9)
    else:
        # every off-diagonal cell is an edge, so the shift is affine on the off-diagonal cells
        off = graph_correlation(pair, weighted=True, include_diagonal=False)
        shifted = graph_correlation(restrict_to_common(g1, g2s), weighted=True, include_diagonal=False)
        assert shifted == pytest.approx(off, abs=1e-9)


# community

@CASES
@given(networks(max_n=9), st.data())
def test_quality_bounds_and_label_invariance(g, data):
    alloc = data.draw(partitions(g))
    q = modularity(g, alloc)
    assert -1 <= q <= 1
    seg, per = segregation_index(g, alloc)
    assert 0 <= seg <= 1 and all(0 <= s <= 1 for s in per)
    beta, detail = inter_cluster_conductance(g, alloc)
    assert 0 <= beta <= 1 and all(0 <= d <= 1 for d in detail)
    perm = np.array(data.draw(st.permutations(range(g.n))))
    h = g.relabeled(perm)
    lab = g.nodes.labels
    moved = CommunityAllocation("p", [[lab[perm[g.nodes.index(u)]] for u in c] for c in alloc.communities])
    assert modularity(h, moved) == pytest.approx(q, abs=1e-12)


@CASES
@given(networks(max_n=9, directed=False), st.data())
def test_conductance_complement_and_sweep(g, data):
    C = [i for i in range(g.n) if data.draw(st.booleans())]
    rest = [i for i in range(g.n) if i not in C]
    phi = conductance_of_set(g, C)
    assert 0 <= phi <= 1 and phi == pytest.approx(conductance_of_set(g, rest), abs=1e-12)
    _, brute = min_conductance_cut(g, method="brute")
    _, sweep = min_conductance_cut(g, method="sweep")
    assert sweep >= brute - 1e-12


# ranking

@CASES
@given(st.permutations(range(12)), st.permutations(range(12)), st.lists(st.integers(0, 12), min_size=1, max_size=5))
def test_ranking_symmetries(p1, p2, ks):
    r1 = Ranking.from_order([str(x) for x in p1])
    r2 = Ranking.from_order([str(x) for x in p2])
    rev = Ranking.from_order([str(x) for x in reversed(p2)])
    assert kendall_tau(r1, rev).tau == pytest.approx(-kendall_tau(r1, r2).tau, abs=1e-12)
    a = [m for _, m, _ in topk_overlap_curve(r1, r2, ks).points]
    b = [m for _, m, _ in topk_overlap_curve(r2, r1, ks).points]
    assert a == b


@CASES
@given(st.integers(1, 300), st.data())
def test_overlap_pmf_mean(n, data):
    k = data.draw(st.integers(0, n))
    support = range(max(0, 2 * k - n), k + 1)
    probs = [overlap_pmf(n, k, m) for m in support]
    assert math.fsum(probs) == pytest.approx(1.0, abs=1e-9)
    assert math.fsum(m * p for m, p in zip(support, probs)) == pytest.approx(k * k / n, abs=1e-9)


# null-models

@CASES
@given(networks(min_n=3, min_edges=2), st.integers(0, 2 ** 32 - 1))
def test_rewire_preserves_degrees(g, seed):
    h = rewire_degree_preserving(g, RewirePlan(seed=seed))
    assert (h.n, h.m) == (g.n, g.m)
    for mode in ("in", "out"):
        assert np.array_equal(h.degrees(mode), g.degrees(mode))
    assert rewire_degree_preserving(g, RewirePlan(seed=seed)).edge_dict() == h.edge_dict()


# synth

@CASES
@given(st.integers(4, 30), st.integers(1, 4), st.integers(0, 2 ** 31), st.floats(0, 1))
def test_synth_world_and_perturbation(n, k, seed, f):
    k = min(k, n)
    w = PlantedWorld.balanced(n, k, p_in=0.6, p_out=0.05, seed=seed)
    try:
        nets, profiles, truth = generate_world(w)
    except ValueError:
        return
    assert sorted(len(c) for c in truth.communities) == sorted(w.sizes)
    assert profiles.n_users == n
    for g in nets:
        assert g.dropped_self_loops == 0 and set(g.nodes.labels) <= truth.nodes
    p = perturb_allocation(truth, f, seed)
    assert p.nodes == truth.nodes
    assert perturb_allocation(truth, f, seed).communities == p.communities


# cli

@CASES
@given(networks(min_n=3, min_edges=2), st.integers(0, 2 ** 31))
def test_cli_outputs_are_reproducible(tmp_path_factory, g, seed):
    from evinet.cli import main
    d = tmp_path_factory.mktemp("cli")
    write_edgelist(g, d / "g.tsv")
    flag = ["--directed"] if g.directed else []
    assert main(["rewire", str(d / "g.tsv"), "--seed", str(seed), "--out", str(d / "a.tsv")] + flag) == 0
    assert main(["rewire", str(d / "g.tsv"), "--seed", str(seed), "--out", str(d / "a.tsv.2")] + flag) == 0
    a, b = (d / "a.tsv").read_text(), (d / "a.tsv.2").read_text()
    assert a.replace("a.tsv", "") == b.replace("a.tsv.2", "")
    first, second = a.splitlines()[:2]
    assert first.startswith("# evinet ") and json.loads(second[len("# config: "):])["seed"] == seed
