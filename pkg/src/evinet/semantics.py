"""Tag-count profiles, cosine similarity, and similarity as a function of network distance."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from evinet import kernels
from evinet.graph import EvidenceNetwork, NodeTable
from evinet.nullmodels import fresh_seed, shuffle_feature_assignment


@dataclass(frozen=True)
class FeatureProfileTable:
    """Sparse user x feature count matrix; row ``i`` belongs to ``users.labels[i]``."""

    users: NodeTable
    features: NodeTable
    counts: sp.csr_matrix

    def __post_init__(self):
        if self.counts.shape != (len(self.users), len(self.features)):
            raise ValueError("count matrix shape does not match user/feature tables")
        if self.counts.nnz and self.counts.data.min() <= 0:
            raise ValueError("stored feature counts must be positive")

    @property
    def n_users(self) -> int:
        return len(self.users)

    def vector(self, user: str) -> np.ndarray:
        return self.counts[self.users.index(user)].toarray().ravel()

    def with_rows(self, perm: np.ndarray) -> "FeatureProfileTable":
        """User ``i`` receives the row previously held by user ``perm[i]``."""
        return FeatureProfileTable(self.users, self.features, self.counts[np.asarray(perm)].tocsr())

    def aligned(self, labels: Iterable[str]) -> "FeatureProfileTable":
        """Rows for ``labels`` in that order; unknown users get explicit empty rows."""
        labels = tuple(labels)
        rows = [self.users.index(x) if x in self.users else -1 for x in labels]
        src = np.asarray(rows, dtype=np.int64)
        known = src >= 0
        pick = sp.csr_matrix(
            (np.ones(known.sum()), (np.flatnonzero(known), src[known])),
            shape=(len(labels), self.n_users),
        )
        return FeatureProfileTable(NodeTable(labels), self.features, (pick @ self.counts).tocsr())


def build_profiles(records: Iterable[tuple[str, str, float]], users: Iterable[str] = ()) -> FeatureProfileTable:
    """Profiles from ``(user, feature, count)`` records; repeated pairs add up."""
    uidx: dict[str, int] = {str(u): i for i, u in enumerate(dict.fromkeys(users))}
    fidx: dict[str, int] = {}
    rows, cols, vals = [], [], []
    for user, feat, count in records:
        count = float(count)
        if count < 0 or not np.isfinite(count):
            raise ValueError(f"invalid count {count!r} for ({user}, {feat})")
        if count == 0:
            continue
        rows.append(uidx.setdefault(str(user), len(uidx)))
        cols.append(fidx.setdefault(str(feat), len(fidx)))
        vals.append(count)
    counts = sp.csr_matrix((vals, (rows, cols)), shape=(len(uidx), len(fidx)))
    counts.sum_duplicates()
    return FeatureProfileTable(
        NodeTable(tuple(sorted(uidx, key=uidx.__getitem__))),
        NodeTable(tuple(sorted(fidx, key=fidx.__getitem__))),
        counts,
    )


def read_tags(path) -> FeatureProfileTable:
    """Read a ``user<TAB>tag<TAB>count`` TSV file."""
    path = Path(path)

    def records():
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\r\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected user<TAB>tag<TAB>count")
                try:
                    yield parts[0], parts[1], float(parts[2])
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: bad count {parts[2]!r}") from None

    return build_profiles(records())


def write_tags(profiles: FeatureProfileTable, path) -> None:
    coo = profiles.counts.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with Path(path).open("w", encoding="utf-8") as fh:
        for i in order:
            count = coo.data[i]
            text = str(int(count)) if float(count).is_integer() else repr(float(count))
            fh.write(f"{profiles.users.label(coo.row[i])}\t{profiles.features.label(coo.col[i])}\t{text}\n")


def cosine_similarity(u, v) -> float:
    """Cosine of the angle between two non-negative profile vectors (dense or sparse)."""
    u = u.toarray().ravel() if sp.issparse(u) else np.asarray(u, dtype=np.float64).ravel()
    v = v.toarray().ravel() if sp.issparse(v) else np.asarray(v, dtype=np.float64).ravel()
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine similarity undefined for a zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _normalized_rows(counts: sp.csr_matrix) -> sp.csr_matrix:
    norms = np.sqrt(np.asarray(counts.multiply(counts).sum(axis=1)).ravel())
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return sp.diags(scale) @ counts


@dataclass(frozen=True)
class DistanceSimilarityProfile:
    points: list[tuple[int, float, int]]
    global_mean: float
    null_points: list[tuple[int, float, int]] = field(default_factory=list)
    shuffle_count: int = 0
    seed: int | None = None
    excluded_users: int = 0
    pair_unit: str = "unordered"
    # population behind global_mean
    global_population: str = "all sampled pairs at finite distance"

    def means(self, null: bool = False) -> dict[int, float]:
        return {d: c for d, c, _ in (self.null_points if null else self.points)}


def distance_similarity_profile(
    g: EvidenceNetwork,
    profiles: FeatureProfileTable,
    max_distance: int | None = None,
    pair_sample: int | None = None,
    shuffles: int = 5,
    seed: int | None = None,
    directed: bool = False,
    block: int = 256,
) -> DistanceSimilarityProfile:
    """Mean profile cosine of user pairs bucketed by shortest-path distance.

    Users of ``g`` without a (non-empty) profile are excluded and counted.
    ``pair_sample`` limits BFS to that many uniformly drawn source users; the
    null curve repeats the computation after ``shuffles`` seeded permutations
    of the user-to-profile assignment. Undirected, unsampled runs count each
    unordered pair once; otherwise (source, target) pairs are counted.
    """
    if seed is None:
        seed = fresh_seed()
    table = profiles.aligned(g.nodes.labels)
    valid = np.diff(table.counts.indptr) > 0
    excluded = int(g.n - valid.sum())
    valid_idx = np.flatnonzero(valid)
    if len(valid_idx) < 2:
        raise ValueError("fewer than two users with non-empty profiles")
    X = _normalized_rows(table.counts).tocsr()

    use_directed = directed and g.directed
    adj = g.out_adj if use_directed else g.undirected_adjacency()
    rng = np.random.default_rng(seed)
    if pair_sample is None:
        sources = valid_idx
    else:
        sources = np.sort(rng.choice(valid_idx, size=min(pair_sample, len(valid_idx)), replace=False))
    unordered = pair_sample is None and not use_directed

    null_tables = []
    if shuffles:
        sub = FeatureProfileTable(
            NodeTable(tuple(table.users.labels[i] for i in valid_idx)), table.features,
            X[valid_idx].tocsr(),
        )
        # rows of users without profiles are zero, so placing the valid rows suffices
        place = sp.csr_matrix(
            (np.ones(len(valid_idx)), (valid_idx, np.arange(len(valid_idx)))),
            shape=(g.n, len(valid_idx)),
        )
        for child in np.random.SeedSequence(seed).spawn(shuffles):
            shuffled = shuffle_feature_assignment(sub, int(child.generate_state(1)[0]))
            null_tables.append((place @ shuffled.counts).tocsr())

    nbins = g.n + 1
    sums = np.zeros(nbins)
    null_sums = np.zeros(nbins)
    counts = np.zeros(nbins, dtype=np.int64)
    for start in range(0, len(sources), block):
        src = sources[start:start + block]
        dist = kernels.bfs_distances(adj.indptr, adj.indices, src)
        keep = (dist > 0) & valid[None, :]
        if unordered:
            keep &= np.arange(g.n)[None, :] > src[:, None]
        d = dist[keep]
        counts += np.bincount(d, minlength=nbins)
        sims = np.minimum((X[src] @ X.T).toarray(), 1.0)
        sums += np.bincount(d, weights=sims[keep], minlength=nbins)
        for Xn in null_tables:
            sims = np.minimum((Xn[src] @ Xn.T).toarray(), 1.0)
            null_sums += np.bincount(d, weights=sims[keep], minlength=nbins)

    total = counts.sum()
    if total == 0:
        raise ValueError("no user pair at finite distance")
    reach = np.flatnonzero(counts)
    if max_distance is not None:
        reach = reach[reach <= max_distance]
    points = [(int(k), float(sums[k] / counts[k]), int(counts[k])) for k in reach]
    null_points = []
    if shuffles:
        null_points = [
            (int(k), float(null_sums[k] / (shuffles * counts[k])), int(counts[k])) for k in reach
        ]
    return DistanceSimilarityProfile(
        points, float(sums.sum() / total), null_points, shuffles, seed, excluded,
        "unordered" if unordered else "ordered",
    )
