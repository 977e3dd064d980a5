"""Community allocations and the quality functions used to rate them in evidence networks.

All quality functions use binary adjacency unless ``weighted=True``. Nodes not
covered by any community form no implicit community: they contribute degree
mass (modularity) and boundary/volume mass (conductance) only.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from evinet import kernels
from evinet.graph import EvidenceNetwork

logger = logging.getLogger(__name__)

QUALITY_FUNCTIONS = ("modularity", "segregation", "intra_conductance", "inter_conductance")
BRUTE_FORCE_LIMIT = 20


@dataclass(frozen=True)
class CommunityAllocation:
    allocation_id: str
    communities: tuple[frozenset[str], ...]
    provenance: str = ""

    def __init__(self, allocation_id: str, communities: Iterable[Iterable[str]], provenance: str = ""):
        comms = tuple(frozenset(str(x) for x in c) for c in communities)
        seen: set[str] = set()
        for c in comms:
            if not c:
                raise ValueError(f"allocation {allocation_id!r} has an empty community")
            if seen & c:
                raise ValueError(f"allocation {allocation_id!r} has overlapping communities")
            seen |= c
        object.__setattr__(self, "allocation_id", str(allocation_id))
        object.__setattr__(self, "communities", comms)
        object.__setattr__(self, "provenance", provenance)

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset().union(*self.communities)

    def __len__(self) -> int:
        return len(self.communities)


@dataclass(frozen=True)
class RestrictedAllocation:
    """An allocation intersected with one network's vertex set, as node indices."""

    source_id: str
    communities: tuple[np.ndarray, ...]
    n_nodes: int
    dropped_nodes: int = 0
    dropped_communities: int = 0

    def membership(self) -> np.ndarray:
        """Community index per node, -1 for uncovered nodes."""
        member = np.full(self.n_nodes, -1, dtype=np.int64)
        for ci, c in enumerate(self.communities):
            member[c] = ci
        return member


def restrict_allocation(alloc: CommunityAllocation, g: EvidenceNetwork) -> RestrictedAllocation:
    """Intersect every community with ``g``'s nodes, dropping (and counting) emptied ones."""
    comms = []
    dropped_nodes = 0
    dropped_comms = 0
    for c in alloc.communities:
        # sorted for a deterministic index order
        inside = sorted(g.nodes.index(x) for x in c if x in g.nodes)
        dropped_nodes += len(c) - len(inside)
        if inside:
            comms.append(np.asarray(inside, dtype=np.int64))
        else:
            dropped_comms += 1
    if not comms:
        raise ValueError(
            f"allocation {alloc.allocation_id!r} shares no users with network {g.name!r}"
        )
    return RestrictedAllocation(alloc.allocation_id, tuple(comms), g.n, dropped_nodes, dropped_comms)


def _as_restricted(alloc, g: EvidenceNetwork) -> RestrictedAllocation:
    if isinstance(alloc, RestrictedAllocation):
        if alloc.n_nodes != g.n:
            raise ValueError("restricted allocation was built for a different network")
        return alloc
    return restrict_allocation(alloc, g)


def modularity(g: EvidenceNetwork, alloc, mode: str = "auto", weighted: bool = False) -> float:
    """Newman modularity; ``auto`` uses the in/out-degree variant for directed networks."""
    if mode not in ("auto", "undirected", "directed"):
        raise ValueError(f"unknown modularity mode {mode!r}")
    ra = _as_restricted(alloc, g)
    directed = g.directed if mode == "auto" else mode == "directed"
    A = g.adjacency(weighted) if directed else g.undirected_adjacency(weighted)
    total = A.sum()
    if total == 0:
        raise ValueError(f"modularity undefined on network {g.name!r} without edges")
    member = ra.membership()
    coo = A.tocoo()
    same = (member[coo.row] == member[coo.col]) & (member[coo.row] >= 0)
    intra = coo.data[same].sum()
    out_deg = np.asarray(A.sum(axis=1)).ravel()
    in_deg = np.asarray(A.sum(axis=0)).ravel()
    k = len(ra.communities)
    covered = member >= 0
    d_out = np.bincount(member[covered], weights=out_deg[covered], minlength=k)
    d_in = np.bincount(member[covered], weights=in_deg[covered], minlength=k)
    # total is 2m for the symmetric matrix and m for the directed one
    expected = np.dot(d_in, d_out) / total
    return float((intra - expected) / total)


def _boundary_and_volume(g: EvidenceNetwork, weighted: bool):
    A = g.adjacency(weighted)
    vol = np.asarray(A.sum(axis=1)).ravel()
    if g.directed:
        vol = vol + np.asarray(A.sum(axis=0)).ravel()
    return A, vol


def _out_boundary(A: sp.csr_matrix, mask: np.ndarray) -> float:
    coo = A.tocoo()
    crossing = mask[coo.row] & ~mask[coo.col]
    return float(coo.data[crossing].sum())


def segregation_index(g: EvidenceNetwork, alloc, weighted: bool = False) -> tuple[float, list[float]]:
    """Mean per-community segregation and the per-community scores.

    The expected boundary of C is ``density * n_C * (n - n_C)``, where
    density is ``m / (n(n-1))`` for directed and ``m / (n(n-1)/2)`` for
    undirected networks. Boundary edges are out-going ones for directed
    networks and crossing ones for undirected networks.
    """
    ra = _as_restricted(alloc, g)
    A = g.adjacency(weighted)
    n = g.n
    mass = A.sum() if g.directed else A.sum() / 2.0
    dyads = n * (n - 1) if g.directed else n * (n - 1) / 2.0
    density = mass / dyads if dyads else 0.0
    scores = []
    for c in ra.communities:
        mask = np.zeros(n, dtype=bool)
        mask[c] = True
        n_c = len(c)
        expected = density * n_c * (n - n_c)
        if expected <= 0:
            logger.warning(
                "segregation: community of %d nodes in %s has zero expected boundary; scored 0",
                n_c, g.name or "network",
            )
            scores.append(0.0)
            continue
        observed = _out_boundary(A, mask)
        scores.append(0.0 if expected <= observed else (expected - observed) / expected)
    return float(np.mean(scores)), scores


def conductance_of_set(g: EvidenceNetwork, nodes: Iterable[int], weighted: bool = False) -> float:
    """Conductance of a node set (indices into ``g``): boundary over the smaller side's volume."""
    idx = np.unique(np.asarray(list(nodes), dtype=np.int64))
    if len(idx) == 0 or len(idx) == g.n:
        return 1.0
    mask = np.zeros(g.n, dtype=bool)
    mask[idx] = True
    A, vol = _boundary_and_volume(g, weighted)
    boundary = _out_boundary(A, mask)
    if boundary == 0:
        return 0.0
    vol_c = vol[mask].sum()
    return float(boundary / min(vol_c, vol.sum() - vol_c))


def _dense_induced(g: EvidenceNetwork, idx: np.ndarray, weighted: bool) -> np.ndarray:
    return g.adjacency(weighted)[idx][:, idx].toarray()


def _mask_to_indices(mask: int, idx: np.ndarray) -> np.ndarray:
    return idx[[i for i in range(len(idx)) if (mask >> i) & 1]]


def _sweep_cut(W: np.ndarray, directed: bool) -> tuple[np.ndarray, float]:
    """Best prefix cut along the Fiedler vector of the symmetrized, normalized Laplacian."""
    k = W.shape[0]
    S = W + W.T if directed else W
    n_comp, labels = connected_components(sp.csr_matrix(S), directed=False)
    if n_comp > 1:
        # any weak component is a zero-boundary cut
        return np.flatnonzero(labels == labels[0]), 0.0
    deg = S.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    L = np.eye(k) - inv_sqrt[:, None] * S * inv_sqrt[None, :]
    _, vecs = np.linalg.eigh(L)
    order = np.argsort(inv_sqrt * vecs[:, 1], kind="stable")
    P = np.tril(np.ones((k - 1, k)), 0)[:, np.argsort(order)]
    # row i of P marks the first i+1 nodes of the sweep order
    vol = W.sum(axis=1) + (W.sum(axis=0) if directed else 0.0)
    total = vol.sum()
    vol_c = P @ vol
    Q = 1.0 - P
    cut_out = np.einsum("ij,ij->i", P @ W, Q)
    phis = [np.where(cut_out == 0, 0.0, cut_out / np.minimum(vol_c, total - vol_c))]
    if directed:
        cut_in = np.einsum("ij,ij->i", Q @ W, P)
        phis.append(np.where(cut_in == 0, 0.0, cut_in / np.minimum(vol_c, total - vol_c)))
    best_phi, best_set = 2.0, None
    for side, phi in enumerate(phis):
        i = int(np.argmin(phi))
        if phi[i] < best_phi:
            best_phi = float(phi[i])
            chosen = P[i] > 0 if side == 0 else Q[i] > 0
            best_set = np.flatnonzero(chosen)
    return best_set, best_phi


def min_conductance_cut(
    g: EvidenceNetwork,
    nodes: Sequence[int] | None = None,
    method: str = "auto",
    weighted: bool = False,
) -> tuple[np.ndarray, float]:
    """Minimum-conductance cut of the subgraph induced by ``nodes`` (all nodes by default).

    ``brute`` enumerates every nontrivial cut (exact); ``sweep`` orders nodes
    by the Fiedler vector and takes the best prefix; ``auto`` is brute up to
    ``BRUTE_FORCE_LIMIT`` nodes. Returns the cut side (as indices into ``g``)
    and its conductance within the induced subgraph.
    """
    idx = np.arange(g.n) if nodes is None else np.unique(np.asarray(nodes, dtype=np.int64))
    k = len(idx)
    if k < 2:
        raise ValueError("a conductance cut needs at least 2 nodes")
    if method == "auto":
        method = "brute" if k <= BRUTE_FORCE_LIMIT else "sweep"
    W = _dense_induced(g, idx, weighted)
    if method == "brute":
        if k > 30:
            raise ValueError(f"brute-force cut search over {k} nodes is infeasible; use sweep")
        mask, phi = kernels.min_cut_exhaustive(W, g.directed)
        return _mask_to_indices(mask, idx), float(phi)
    if method == "sweep":
        local, phi = _sweep_cut(W, g.directed)
        return idx[local], phi
    raise ValueError(f"unknown cut method {method!r}")


def intra_cluster_conductance(
    g: EvidenceNetwork, alloc, method: str = "auto", weighted: bool = False
) -> tuple[float, list[float | None]]:
    """Worst internal bottleneck over communities; singletons are skipped (detail ``None``)."""
    ra = _as_restricted(alloc, g)
    detail: list[float | None] = []
    for c in ra.communities:
        if len(c) < 2:
            detail.append(None)
            continue
        detail.append(min_conductance_cut(g, c, method, weighted)[1])
    skipped = sum(d is None for d in detail)
    if skipped:
        logger.warning("intra-cluster conductance: skipped %d singleton communities", skipped)
    scored = [d for d in detail if d is not None]
    if not scored:
        raise ValueError(f"allocation {ra.source_id!r} has no community with >= 2 nodes in {g.name!r}")
    return float(min(scored)), detail


def inter_cluster_conductance(g: EvidenceNetwork, alloc, weighted: bool = False) -> tuple[float, list[float]]:
    """One minus the largest community conductance."""
    ra = _as_restricted(alloc, g)
    detail = [conductance_of_set(g, c, weighted) for c in ra.communities]
    return 1.0 - max(detail), detail


@dataclass(frozen=True)
class QualityScore:
    allocation_id: str
    network_id: str
    function: str
    score: float | None
    detail: tuple = ()
    note: str = ""

    @property
    def missing(self) -> bool:
        return self.score is None


@dataclass
class QualityScoreTable:
    rows: list[QualityScore] = field(default_factory=list)

    def get(self, allocation_id: str, network_id: str, function: str) -> float | None:
        for r in self.rows:
            if (r.allocation_id, r.network_id, r.function) == (allocation_id, network_id, function):
                return r.score
        raise KeyError((allocation_id, network_id, function))

    def scores(self, network_id: str, function: str) -> dict[str, float]:
        """Non-missing scores for one (network, function) column, keyed by allocation id."""
        return {
            r.allocation_id: r.score
            for r in self.rows
            if r.network_id == network_id and r.function == function and r.score is not None
        }

    @property
    def network_ids(self) -> list[str]:
        return list(dict.fromkeys(r.network_id for r in self.rows))

    @property
    def functions(self) -> list[str]:
        return list(dict.fromkeys(r.function for r in self.rows))

    @property
    def allocation_ids(self) -> list[str]:
        return list(dict.fromkeys(r.allocation_id for r in self.rows))

    def to_csv(self, path, header: Sequence[str] = ()) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for line in header:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["allocation_id", "network_id", "function", "score", "note"])
            for r in self.rows:
                w.writerow([r.allocation_id, r.network_id, r.function,
                            "" if r.score is None else repr(r.score), r.note])

    @classmethod
    def from_csv(cls, path) -> "QualityScoreTable":
        with open(path, newline="", encoding="utf-8") as fh:
            lines = [line for line in fh if not line.startswith("#")]
        rows = []
        for rec in csv.DictReader(lines):
            score = rec["score"]
            rows.append(QualityScore(
                rec["allocation_id"], rec["network_id"], rec["function"],
                float(score) if score != "" else None, note=rec.get("note", "") or "",
            ))
        return cls(rows)


def score_allocation(
    g: EvidenceNetwork, alloc: CommunityAllocation, function: str,
    method: str = "auto", weighted: bool = False,
) -> QualityScore:
    ra = restrict_allocation(alloc, g)
    detail: tuple = ()
    if function == "modularity":
        score = modularity(g, ra, weighted=weighted)
    elif function == "segregation":
        score, d = segregation_index(g, ra, weighted)
        detail = tuple(d)
    elif function == "intra_conductance":
        score, d = intra_cluster_conductance(g, ra, method, weighted)
        detail = tuple(d)
    elif function == "inter_conductance":
        score, d = inter_cluster_conductance(g, ra, weighted)
        detail = tuple(d)
    else:
        raise ValueError(f"unknown quality function {function!r}; expected one of {QUALITY_FUNCTIONS}")
    note = ""
    if ra.dropped_nodes or ra.dropped_communities:
        note = f"dropped_nodes={ra.dropped_nodes} dropped_communities={ra.dropped_communities}"
    return QualityScore(alloc.allocation_id, g.name, function, float(score), detail, note)


def rate_allocations(
    allocs: Sequence[CommunityAllocation],
    networks: Sequence[EvidenceNetwork],
    functions: Sequence[str] = QUALITY_FUNCTIONS,
    method: str = "auto",
    weighted: bool = False,
) -> QualityScoreTable:
    """Score every (allocation, network, function) cell.

    Cells whose allocation shares no users with the network (or whose score
    is otherwise undefined) are kept as missing entries with a note.
    """
    if not allocs:
        raise ValueError("no community allocations to rate")
    if not networks:
        raise ValueError("no evidence networks to rate allocations in")
    names = [g.name for g in networks]
    if len(set(names)) != len(names):
        raise ValueError(f"network names must be unique, got {names}")
    for fn in functions:
        if fn not in QUALITY_FUNCTIONS:
            raise ValueError(f"unknown quality function {fn!r}; expected one of {QUALITY_FUNCTIONS}")
    rows = []
    for alloc in allocs:
        for g in networks:
            for fn in functions:
                try:
                    rows.append(score_allocation(g, alloc, fn, method, weighted))
                except ValueError as exc:
                    rows.append(QualityScore(alloc.allocation_id, g.name, fn, None, note=str(exc)))
    return QualityScoreTable(rows)


def read_allocation(path, allocation_id: str | None = None) -> CommunityAllocation:
    """Read a ``node<TAB>community_id`` TSV file (``#`` comments ignored)."""
    path = Path(path)
    groups: dict[str, list[str]] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected node<TAB>community_id")
            groups.setdefault(parts[1], []).append(parts[0])
    if not groups:
        raise ValueError(f"{path}: allocation file is empty")
    for members in groups.values():
        if len(set(members)) != len(members):
            raise ValueError(f"{path}: node listed twice")
    return CommunityAllocation(
        path.stem if allocation_id is None else allocation_id,
        groups.values(), provenance=str(path),
    )


def read_allocations(directory) -> list[CommunityAllocation]:
    """All ``*.tsv`` allocation files in a directory, sorted by file name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ValueError(f"{directory} is not a directory")
    files = sorted(directory.glob("*.tsv"))
    if not files:
        raise ValueError(f"no allocation files (*.tsv) in {directory}")
    return [read_allocation(f) for f in files]


def write_allocation(alloc: CommunityAllocation, path) -> None:
    width = max(1, int(math.log10(max(len(alloc.communities), 1))) + 1)
    with Path(path).open("w", encoding="utf-8") as fh:
        if alloc.provenance:
            fh.write(f"# {alloc.provenance}\n")
        for ci, c in enumerate(alloc.communities):
            for node in sorted(c):
                fh.write(f"{node}\tc{ci:0{width}d}\n")
