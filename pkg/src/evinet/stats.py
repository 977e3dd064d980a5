"""Structural statistics: components, bow-tie, reciprocity, hierarchy, paths, transitivity, degrees."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components

from evinet import kernels
from evinet.graph import EvidenceNetwork


@dataclass(frozen=True)
class ComponentSummary:
    labels: np.ndarray
    count: int
    largest: int

    def components(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == c) for c in range(self.count)]


@dataclass(frozen=True)
class BowTie:
    scc_nodes: frozenset[int]
    in_nodes: frozenset[int]
    out_nodes: frozenset[int]
    misc_nodes: frozenset[int]
    wcc_star_size: int


@dataclass(frozen=True)
class HierarchyEstimate:
    value: float
    connected_pairs: int
    sampled: bool = False
    seed: int | None = None


@dataclass(frozen=True)
class PathStats:
    """Shortest-path summary.

    ``length_histogram`` counts unordered pairs for exact undirected runs and
    ordered (source, target) pairs otherwise; ``pair_unit`` says which.
    """

    diameter: int
    apl: float
    length_histogram: dict[int, int]
    sampled: bool = False
    sample_spec: tuple[int, int] | None = None
    pair_unit: str = "ordered"


@dataclass(frozen=True)
class KnnProfile:
    points: list[tuple[int, float, int]] = field(default_factory=list)

    def as_dict(self) -> dict[int, float]:
        return {k: v for k, v, _ in self.points}


def strongly_connected_components(g: EvidenceNetwork) -> ComponentSummary:
    count, labels = connected_components(g.out_adj, directed=True, connection="strong")
    return ComponentSummary(labels, int(count), int(np.bincount(labels).max()))


def weakly_connected_components(g: EvidenceNetwork) -> ComponentSummary:
    count, labels = connected_components(g.out_adj, directed=True, connection="weak")
    return ComponentSummary(labels, int(count), int(np.bincount(labels).max()))


def _reach(adj: sp.csr_matrix, start: int) -> np.ndarray:
    return breadth_first_order(adj, start, directed=True, return_predecessors=False)


def bowtie_decompose(g: EvidenceNetwork) -> BowTie:
    """Split nodes into the largest SCC, IN, OUT and the remainder.

    Ties for the largest SCC go to the component holding the smallest node index.
    """
    if g.n == 0:
        raise ValueError("bow-tie decomposition of an empty network")
    scc = strongly_connected_components(g)
    sizes = np.bincount(scc.labels)
    best = sizes.max()
    # first node (in index order) whose component has maximal size
    core_label = scc.labels[np.flatnonzero(sizes[scc.labels] == best)[0]]
    core = np.flatnonzero(scc.labels == core_label)
    seed_node = int(core[0])
    core_set = set(core.tolist())
    out_set = set(_reach(g.out_adj, seed_node).tolist()) - core_set
    in_set = set(_reach(g.in_adj, seed_node).tolist()) - core_set
    misc = set(range(g.n)) - core_set - out_set - in_set
    wcc = weakly_connected_components(g)
    return BowTie(frozenset(core_set), frozenset(in_set), frozenset(out_set), frozenset(misc), wcc.largest)


def symmetric_link_fraction(g: EvidenceNetwork) -> float:
    """Fraction of arcs whose reverse arc also exists."""
    if g.n_arcs == 0:
        raise ValueError("symmetric link fraction undefined without edges")
    A = g.adjacency()
    return float(A.multiply(A.T).sum() / g.n_arcs)


def reachability_matrix(g: EvidenceNetwork) -> np.ndarray:
    """Boolean transitive closure (u reaches v, u != v), via the SCC condensation."""
    scc = strongly_connected_components(g)
    labels = scc.labels
    c = scc.count
    A = g.out_adj.tocoo()
    cond = sp.csr_matrix(
        (np.ones(len(A.row)), (labels[A.row], labels[A.col])), shape=(c, c)
    )
    cond.setdiag(0)
    cond.eliminate_zeros()
    # component labels from scipy are not topologically ordered; do a DFS closure
    reach_c = np.zeros((c, c), dtype=bool)
    for comp in range(c):
        reach_c[comp, _reach(cond, comp)] = True
    R = reach_c[np.ix_(labels, labels)]
    np.fill_diagonal(R, False)
    return R


def krackhardt_hierarchy(
    g: EvidenceNetwork, sample: tuple[int, int] | None = None
) -> HierarchyEstimate:
    """Fraction of connected unordered pairs reachable in only one direction.

    ``sample=(pairs, seed)`` draws that many unordered node pairs uniformly,
    skipping pairs unconnected in the transitive closure.
    """
    if sample is None:
        R = reachability_matrix(g)
        iu = np.triu_indices(g.n, 1)
        fwd, bwd = R[iu], R.T[iu]
        connected = int(np.count_nonzero(fwd | bwd))
        if connected == 0:
            raise ValueError("Krackhardt hierarchy undefined: no connected pairs")
        one_way = int(np.count_nonzero(fwd ^ bwd))
        return HierarchyEstimate(one_way / connected, connected)

    n_pairs, seed = sample
    if g.n < 2:
        raise ValueError("Krackhardt hierarchy needs at least 2 nodes")
    rng = np.random.default_rng(seed)
    u = rng.integers(0, g.n, size=n_pairs)
    v = rng.integers(0, g.n - 1, size=n_pairs)
    v = v + (v >= u)
    cache: dict[int, np.ndarray] = {}

    def reach(x: int) -> np.ndarray:
        if x not in cache:
            mask = np.zeros(g.n, dtype=bool)
            mask[_reach(g.out_adj, x)] = True
            cache[x] = mask
        return cache[x]

    connected = one_way = 0
    for a, b in zip(u.tolist(), v.tolist()):
        ab, ba = reach(a)[b], reach(b)[a]
        if ab or ba:
            connected += 1
            one_way += ab != ba
    if connected == 0:
        raise ValueError("Krackhardt hierarchy undefined: no connected pairs sampled")
    return HierarchyEstimate(one_way / connected, connected, True, seed)


def path_length_stats(
    g: EvidenceNetwork,
    treat_as: str | None = None,
    sample: tuple[int, int] | None = None,
) -> PathStats:
    """Diameter, average shortest-path length and length histogram by BFS.

    ``treat_as`` defaults to the network's own directedness. ``sample=(sources,
    seed)`` runs BFS from that many uniformly drawn sources instead of all.
    """
    if g.n < 2:
        raise ValueError("path statistics need at least 2 nodes")
    treat_as = ("directed" if g.directed else "undirected") if treat_as is None else treat_as
    if treat_as not in ("directed", "undirected"):
        raise ValueError(f"treat_as must be 'directed' or 'undirected', got {treat_as!r}")
    adj = g.out_adj if treat_as == "directed" else g.undirected_adjacency()
    if sample is None:
        sources = np.arange(g.n)
    else:
        n_src, seed = sample
        rng = np.random.default_rng(seed)
        sources = np.sort(rng.choice(g.n, size=min(n_src, g.n), replace=False))
    hist = kernels.distance_histogram(adj.indptr, adj.indices, sources)
    lengths = np.flatnonzero(hist)
    if len(lengths) == 0:
        raise ValueError("no reachable pair of distinct nodes")
    counts = hist[lengths]
    unit = "ordered"
    if treat_as == "undirected" and sample is None:
        counts = counts // 2
        unit = "unordered"
    apl = float(np.dot(lengths, counts) / counts.sum())
    return PathStats(
        diameter=int(lengths.max()),
        apl=apl,
        length_histogram={int(k): int(c) for k, c in zip(lengths, counts)},
        sampled=sample is not None,
        sample_spec=None if sample is None else (len(sources), sample[1]),
        pair_unit=unit,
    )


def transitivity(g: EvidenceNetwork) -> float:
    """Global clustering coefficient of the undirected, unweighted simplification."""
    A = g.undirected_adjacency()
    deg = np.diff(A.indptr).astype(np.float64)
    triples = float(np.sum(deg * (deg - 1)) / 2.0)
    if triples == 0:
        raise ValueError("transitivity undefined: no connected triples")
    closed = float((A @ A).multiply(A).sum())  # = 6 * triangles
    return closed / 2.0 / triples


def degree_ccdf(g: EvidenceNetwork, mode: str = "total") -> list[tuple[int, float]]:
    """Complementary cumulative degree distribution ``(k, P[deg >= k])`` over observed degrees."""
    if g.n == 0:
        raise ValueError("degree distribution of an empty network")
    deg = g.degrees(mode)
    values, counts = np.unique(deg, return_counts=True)
    tail = np.cumsum(counts[::-1])[::-1] / g.n
    return [(int(k), float(p)) for k, p in zip(values, tail)]


KNN_MODES = ("undirected", "in", "out", "total")


def knn_profile(g: EvidenceNetwork, mode: str = "undirected") -> KnnProfile:
    """Mean nearest-neighbor degree as a function of node degree.

    ``undirected`` uses the undirected simplification; ``out`` and ``in``
    follow arcs in one direction and use that direction's degree; ``total``
    counts every incident arc (a reciprocated neighbor counts twice).
    Degree-0 nodes are excluded.
    """
    if mode not in KNN_MODES:
        raise ValueError(f"mode must be one of {KNN_MODES}, got {mode!r}")
    A = g.adjacency()
    if mode == "undirected":
        M = g.undirected_adjacency()
    elif mode == "out":
        M = A
    elif mode == "in":
        M = A.T.tocsr()
    else:
        M = (A + A.T).tocsr()
    k = np.asarray(M.sum(axis=1)).ravel()
    active = k > 0
    if not active.any():
        raise ValueError("knn profile undefined: every node is isolated")
    knn = (M @ k)[active] / k[active]
    kk = k[active].astype(np.int64)
    values, inverse, counts = np.unique(kk, return_inverse=True, return_counts=True)
    means = np.bincount(inverse, weights=knn) / counts
    return KnnProfile([(int(a), float(b), int(c)) for a, b, c in zip(values, means, counts)])


def summary(g: EvidenceNetwork, sample_pairs: int | None = None, seed: int | None = None) -> dict:
    """All scalar statistics of one network as a JSON-ready dict."""
    scc = strongly_connected_components(g)
    wcc = weakly_connected_components(g)
    bt = bowtie_decompose(g)
    report = {
        "name": g.name,
        "kind": g.kind,
        "directed": g.directed,
        "weighted": g.weighted,
        "nodes": g.n,
        "edges": g.m,
        "dropped_self_loops": g.dropped_self_loops,
        "density": g.m / (g.n * (g.n - 1) / (1 if g.directed else 2)) if g.n > 1 else 0.0,
        "n_scc": scc.count,
        "largest_scc": scc.largest,
        "n_wcc": wcc.count,
        "largest_wcc": wcc.largest,
        "bowtie": {
            "scc": len(bt.scc_nodes), "in": len(bt.in_nodes),
            "out": len(bt.out_nodes), "misc": len(bt.misc_nodes),
            "wcc_star": bt.wcc_star_size,
        },
    }
    path_sample = None if sample_pairs is None else (max(1, int(np.sqrt(sample_pairs))), seed)
    kh_sample = None if sample_pairs is None else (sample_pairs, seed)

    def guarded(fn):
        try:
            return fn()
        except ValueError as exc:
            return {"error": str(exc)}

    ps = guarded(lambda: path_length_stats(g, sample=path_sample))
    report["paths"] = ps if isinstance(ps, dict) else {
        "diameter": ps.diameter, "apl": ps.apl, "sampled": ps.sampled,
        "sample_sources": None if ps.sample_spec is None else ps.sample_spec[0],
        "pair_unit": ps.pair_unit,
    }
    report["transitivity"] = guarded(lambda: transitivity(g))
    report["symmetric_links"] = guarded(lambda: symmetric_link_fraction(g))
    kh = guarded(lambda: krackhardt_hierarchy(g, kh_sample))
    report["krackhardt"] = kh if isinstance(kh, dict) else {
        "value": kh.value, "connected_pairs": kh.connected_pairs, "sampled": kh.sampled,
    }
    report["seed"] = seed
    return report
