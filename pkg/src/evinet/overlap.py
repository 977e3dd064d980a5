"""Per-node comparison of out-neighborhoods across two networks over their shared users."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from evinet.graph import RestrictedPair
from evinet.nullmodels import RewirePlan, fresh_seed, rewire_degree_preserving

MEASURES = ("jaccard", "precision", "cosine")


@dataclass(frozen=True)
class NodeScores:
    measure: str
    scores: dict[int, float]
    skipped: int = 0


@dataclass(frozen=True)
class OverlapProfile:
    measure: str
    points: list[tuple[int, float, int]]
    # (k, mean over replicas, node count, standard error across replicas)
    null_points: list[tuple[int, float, int, float]] = field(default_factory=list)
    replicas: int = 0
    seed: int | None = None
    skipped: int = 0


def _score_arrays(pair: RestrictedPair, second, measure: str, weighted: bool | None):
    first = pair.first
    B1 = first.adjacency()
    B2 = second.adjacency()
    n1 = np.diff(B1.indptr).astype(np.float64)
    n2 = np.diff(B2.indptr).astype(np.float64)
    if measure == "cosine":
        use_w = (first.weighted and second.weighted) if weighted is None else weighted
        W1, W2 = first.adjacency(use_w), second.adjacency(use_w)
        dot = np.asarray(W1.multiply(W2).sum(axis=1)).ravel()
        norm1 = np.sqrt(np.asarray(W1.multiply(W1).sum(axis=1)).ravel())
        norm2 = np.sqrt(np.asarray(W2.multiply(W2).sum(axis=1)).ravel())
        ok = n1 > 0
        denom = norm1 * norm2
        # an empty second row shares nothing: score 0 rather than undefined
        values = np.divide(dot, denom, out=np.zeros_like(dot), where=denom > 0)
        return np.minimum(values, 1.0), ok
    inter = np.asarray(B1.multiply(B2).sum(axis=1)).ravel()
    if measure == "jaccard":
        union = n1 + n2 - inter
        ok = union > 0
        return np.divide(inter, union, out=np.zeros_like(inter), where=ok), ok
    if measure == "precision":
        ok = n1 > 0
        return np.divide(inter, n1, out=np.zeros_like(inter), where=ok), ok
    raise ValueError(f"unknown measure {measure!r}; expected one of {MEASURES}")


def neighborhood_scores(pair: RestrictedPair, measure: str, weighted: bool | None = None) -> NodeScores:
    """Jaccard, precision or cosine of each node's out-neighborhoods in the two networks.

    Jaccard needs a non-empty union, precision and cosine a non-empty first
    neighborhood; other nodes are skipped and counted. Cosine uses weighted
    rows when both networks are weighted (unless ``weighted`` overrides).
    """
    values, ok = _score_arrays(pair, pair.second, measure, weighted)
    if not ok.any():
        raise ValueError(f"no node qualifies for {measure} scoring")
    idx = np.flatnonzero(ok)
    return NodeScores(measure, dict(zip(idx.tolist(), values[idx].tolist())), int((~ok).sum()))


def _per_degree(values, ok, degree):
    ks = degree[ok]
    vals = values[ok]
    uniq, inverse, counts = np.unique(ks, return_inverse=True, return_counts=True)
    means = np.bincount(inverse, weights=vals) / counts
    return uniq, means, counts


def overlap_degree_profile(
    pair: RestrictedPair,
    measure: str = "precision",
    null_replicas: int = 5,
    seed: int | None = None,
    weighted: bool | None = None,
) -> OverlapProfile:
    """Scores averaged per out-degree in the first network, with a rewired-null curve.

    The null curve compares the first network against ``null_replicas``
    degree-preserving rewirings of the second one.
    """
    values, ok = _score_arrays(pair, pair.second, measure, weighted)
    if not ok.any():
        raise ValueError(f"no node qualifies for {measure} scoring")
    degree = pair.first.degrees("out")
    ks, means, counts = _per_degree(values, ok, degree)
    points = [(int(k), float(v), int(c)) for k, v, c in zip(ks, means, counts)]

    null_points = []
    if null_replicas:
        if seed is None:
            seed = fresh_seed()
        per_k: dict[int, list[float]] = {}
        n_per_k: dict[int, int] = {}
        for child in np.random.SeedSequence(seed).spawn(null_replicas):
            plan = RewirePlan(seed=int(child.generate_state(1)[0]))
            null_second = rewire_degree_preserving(pair.second, plan)
            v, o = _score_arrays(pair, null_second, measure, weighted)
            for k, mean, c in zip(*_per_degree(v, o, degree)):
                per_k.setdefault(int(k), []).append(float(mean))
                n_per_k[int(k)] = int(c)
        for k in sorted(per_k):
            reps = np.asarray(per_k[k])
            se = float(reps.std(ddof=1) / np.sqrt(len(reps))) if len(reps) > 1 else 0.0
            null_points.append((k, float(reps.mean()), n_per_k[k], se))
    return OverlapProfile(measure, points, null_points, null_replicas, seed, int((~ok).sum()))
