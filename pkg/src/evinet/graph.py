"""Directed, optionally weighted evidence networks over interned node labels."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

KINDS = ("explicit", "implicit")
DEGREE_MODES = ("in", "out", "total")


@dataclass(frozen=True)
class NodeTable:
    """Bijective mapping between external string labels and dense indices."""

    labels: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {label: i for i, label in enumerate(self.labels)}
        if len(index) != len(self.labels):
            raise ValueError("node labels must be unique")
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "NodeTable":
        return cls(tuple(str(label) for label in labels))

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label) -> bool:
        return label in self._index

    def __iter__(self) -> Iterator[str]:
        return iter(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown node label {label!r}") from None

    def indices(self, labels: Iterable[str]) -> np.ndarray:
        return np.fromiter((self._index[label] for label in labels), dtype=np.int64)

    def label(self, i: int) -> str:
        return self.labels[i]


def _freeze(matrix: sp.csr_matrix) -> sp.csr_matrix:
    matrix.sum_duplicates()
    matrix.sort_indices()
    for arr in (matrix.data, matrix.indices, matrix.indptr):
        arr.flags.writeable = False
    return matrix


class EvidenceNetwork:
    """An immutable user-interaction graph.

    Undirected networks are stored as symmetric pairs of arcs, so
    ``out_adj`` is always a valid (directed) adjacency matrix. ``m`` counts
    arcs for directed networks and unordered edges for undirected ones.
    """

    def __init__(
        self,
        nodes: NodeTable,
        out_adj: sp.spmatrix,
        directed: bool = True,
        kind: str = "explicit",
        name: str = "",
        weighted: bool = False,
        dropped_self_loops: int = 0,
    ):
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
        n = len(nodes)
        out_adj = sp.csr_matrix(out_adj, dtype=np.float64, shape=(n, n), copy=True)
        if out_adj.nnz:
            if np.any(out_adj.diagonal() != 0):
                raise ValueError("self-loops are not allowed in an evidence network")
            out_adj.eliminate_zeros()
            if np.any(out_adj.data < 0):
                raise ValueError("edge weights must be positive")
        if not directed and (out_adj != out_adj.T).nnz:
            raise ValueError("undirected network requires a symmetric adjacency matrix")
        self.nodes = nodes
        self.directed = bool(directed)
        self.kind = kind
        self.name = name
        self.weighted = bool(weighted)
        self.dropped_self_loops = int(dropped_self_loops)
        self.out_adj = _freeze(out_adj)
        self.in_adj = _freeze(out_adj.T.tocsr())

    def __repr__(self) -> str:
        tag = "directed" if self.directed else "undirected"
        return f"EvidenceNetwork(name={self.name!r}, {tag}, n={self.n}, m={self.m})"

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def n_arcs(self) -> int:
        return int(self.out_adj.nnz)

    @property
    def m(self) -> int:
        return self.n_arcs if self.directed else self.n_arcs // 2

    def out_neighbors(self, u: int) -> np.ndarray:
        a = self.out_adj
        return a.indices[a.indptr[u]:a.indptr[u + 1]]

    def in_neighbors(self, u: int) -> np.ndarray:
        a = self.in_adj
        return a.indices[a.indptr[u]:a.indptr[u + 1]]

    def out_weights(self, u: int) -> np.ndarray:
        a = self.out_adj
        return a.data[a.indptr[u]:a.indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.out_neighbors(u)
        pos = np.searchsorted(nbrs, v)
        return bool(pos < len(nbrs) and nbrs[pos] == v)

    def arcs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All stored arcs as ``(src, dst, weight)`` arrays, row-major."""
        coo = self.out_adj.tocoo()
        return coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data.copy()

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Edges once each: every arc if directed, ``u < v`` pairs otherwise."""
        src, dst, w = self.arcs()
        keep = slice(None) if self.directed else src < dst
        yield from zip(src[keep].tolist(), dst[keep].tolist(), w[keep].tolist())

    def edge_dict(self) -> dict[tuple[str, str], float]:
        """Label-keyed edges, for comparisons independent of index order.

        Undirected edges are keyed with their labels in sorted order.
        """
        labels = self.nodes.labels
        if self.directed:
            return {(labels[u], labels[v]): w for u, v, w in self.edges()}
        return {tuple(sorted((labels[u], labels[v]))): w for u, v, w in self.edges()}

    def adjacency(self, weighted: bool = False) -> sp.csr_matrix:
        a = self.out_adj.copy()
        if not weighted:
            a.data = np.ones_like(a.data)
        return a

    def undirected_adjacency(self, weighted: bool = False) -> sp.csr_matrix:
        """Symmetrized adjacency; binary unless ``weighted`` (then A + A^T for directed graphs)."""
        a = self.adjacency(weighted)
        if self.directed:
            a = (a + a.T).tocsr()
            if not weighted:
                a.data = np.ones_like(a.data)
        a.sort_indices()
        return a

    def degrees(self, mode: str = "total") -> np.ndarray:
        if mode not in DEGREE_MODES:
            raise ValueError(f"mode must be one of {DEGREE_MODES}, got {mode!r}")
        out_deg = np.diff(self.out_adj.indptr)
        if not self.directed:
            return out_deg.astype(np.int64)
        in_deg = np.diff(self.in_adj.indptr)
        if mode == "out":
            return out_deg.astype(np.int64)
        if mode == "in":
            return in_deg.astype(np.int64)
        return (out_deg + in_deg).astype(np.int64)

    def subgraph(self, indices: Sequence[int], name: str | None = None) -> "EvidenceNetwork":
        """Induced subgraph; node ``indices[i]`` becomes node ``i``."""
        idx = np.asarray(indices, dtype=np.int64)
        nodes = NodeTable(tuple(self.nodes.labels[i] for i in idx))
        sub = self.out_adj[idx][:, idx]
        return EvidenceNetwork(
            nodes, sub, self.directed, self.kind,
            self.name if name is None else name, self.weighted,
        )

    def relabeled(self, perm: np.ndarray, name: str | None = None) -> "EvidenceNetwork":
        """Same node table, structure moved so that arc (u, v) becomes (perm[u], perm[v])."""
        perm = np.asarray(perm, dtype=np.int64)
        src, dst, w = self.arcs()
        a = sp.csr_matrix((w, (perm[src], perm[dst])), shape=(self.n, self.n))
        return EvidenceNetwork(
            self.nodes, a, self.directed, self.kind,
            self.name if name is None else name, self.weighted,
        )


@dataclass(frozen=True)
class RestrictedPair:
    """Two networks reduced to their common vertex set, sharing one node table."""

    first: EvidenceNetwork
    second: EvidenceNetwork
    nodes: NodeTable

    @property
    def n(self) -> int:
        return len(self.nodes)


def degree(g: EvidenceNetwork, u: int | str, mode: str = "total") -> int:
    """Unweighted degree of one node.

    For directed networks ``total`` is in + out; for undirected networks every
    mode is the neighbor count.
    """
    if isinstance(u, str):
        u = g.nodes.index(u)
    if not 0 <= int(u) < g.n:
        raise KeyError(f"unknown node index {u}")
    return int(g.degrees(mode)[int(u)])


def build_network(
    edge_records: Iterable[tuple],
    directed: bool = True,
    *,
    kind: str = "explicit",
    name: str = "",
    weighted: bool | None = None,
    nodes: Iterable[str] | None = None,
) -> EvidenceNetwork:
    """Build a network from ``(src, dst[, weight])`` records.

    Duplicate pairs have their weights summed, a weight of 0 counts as 1,
    self-loops are dropped (and counted). Labels are interned in first-seen
    order, after any labels given in ``nodes`` (which may be isolated).
    ``weighted`` defaults to whether any aggregated weight differs from 1.
    """
    index: dict[str, int] = {}
    if nodes is not None:
        for label in nodes:
            index.setdefault(str(label), len(index))
    src, dst, wts = [], [], []
    n_records = 0
    self_loops = 0
    saw_weight = False
    for rec in edge_records:
        n_records += 1
        if len(rec) == 2:
            a, b = rec
            w = 1.0
        else:
            a, b, w = rec[0], rec[1], float(rec[2])
            if w < 0 or not np.isfinite(w):
                raise ValueError(f"invalid edge weight {rec[2]!r} on record {n_records}")
            if w == 0:
                w = 1.0
            if w != 1.0:
                saw_weight = True
        a, b = str(a), str(b)
        if a == b:
            self_loops += 1
            continue
        src.append(index.setdefault(a, len(index)))
        dst.append(index.setdefault(b, len(index)))
        wts.append(w)
    if n_records == 0:
        raise ValueError("cannot build a network from empty input")
    if self_loops:
        logger.warning("%s: dropped %d self-loop record(s)", name or "network", self_loops)
    if not src:
        raise ValueError("no usable edges after dropping self-loops")
    n = len(index)
    src_a = np.asarray(src, dtype=np.int64)
    dst_a = np.asarray(dst, dtype=np.int64)
    w_a = np.asarray(wts, dtype=np.float64)
    if not directed:
        src_a, dst_a = np.concatenate([src_a, dst_a]), np.concatenate([dst_a, src_a])
        w_a = np.concatenate([w_a, w_a])
    adj = sp.csr_matrix((w_a, (src_a, dst_a)), shape=(n, n))
    adj.sum_duplicates()
    if weighted is None:
        weighted = saw_weight or bool(np.any(adj.data != 1.0))
    table = NodeTable(tuple(sorted(index, key=index.__getitem__)))
    return EvidenceNetwork(
        table, adj, directed, kind, name, weighted,
        dropped_self_loops=self_loops,
    )


def restrict_to_common(g1: EvidenceNetwork, g2: EvidenceNetwork) -> RestrictedPair:
    """Reduce both networks to ``V1 ∩ V2``; common labels keep ``g1``'s order."""
    common = [label for label in g1.nodes.labels if label in g2.nodes]
    if not common:
        raise ValueError(
            f"networks {g1.name or '<first>'!r} and {g2.name or '<second>'!r} share no nodes"
        )
    first = g1.subgraph(g1.nodes.indices(common))
    second = g2.subgraph(g2.nodes.indices(common))
    # share one table object between both members
    table = first.nodes
    second.nodes = table
    return RestrictedPair(first, second, table)


def _parse_edge_lines(lines: Iterable[str], source: str) -> Iterator[tuple]:
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\n").rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) == 2:
            yield parts[0], parts[1]
        elif len(parts) == 3:
            try:
                yield parts[0], parts[1], float(parts[2])
            except ValueError:
                raise ValueError(f"{source}:{lineno}: bad weight {parts[2]!r}") from None
        else:
            raise ValueError(f"{source}:{lineno}: expected 2 or 3 tab-separated fields")


def read_edgelist(
    path: str | Path,
    directed: bool = True,
    *,
    kind: str = "explicit",
    name: str | None = None,
) -> EvidenceNetwork:
    """Read a UTF-8 TSV edge list (``src<TAB>dst[<TAB>weight]``, ``#`` comments)."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return build_network(
            _parse_edge_lines(fh, str(path)), directed,
            kind=kind, name=path.stem if name is None else name,
        )


def write_edgelist(g: EvidenceNetwork, path: str | Path, header: Sequence[str] = ()) -> None:
    """Write ``g`` as TSV; undirected edges are written once. Weights use ``repr`` for exact round-trips."""
    labels = g.nodes.labels
    with Path(path).open("w", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        for u, v, w in g.edges():
            if g.weighted:
                fh.write(f"{labels[u]}\t{labels[v]}\t{w!r}\n")
            else:
                fh.write(f"{labels[u]}\t{labels[v]}\n")
