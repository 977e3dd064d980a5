"""Randomization baselines: degree-preserving rewiring and label/feature/allocation shuffles.

Every function is a deterministic function of its input and seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np
import scipy.sparse as sp

from evinet import kernels
from evinet.community import CommunityAllocation
from evinet.graph import EvidenceNetwork

if TYPE_CHECKING:
    from evinet.semantics import FeatureProfileTable


def fresh_seed() -> int:
    """A new random seed, for callers that must record the seed they used."""
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint32)[0])


@dataclass
class RewirePlan:
    """Swap budget and outcome of one rewiring run.

    ``swap_attempts`` defaults to ``attempts_factor * m`` when left unset;
    ``achieved_swaps`` and ``rejected`` are filled in by the run.
    """

    seed: int | None = None
    swap_attempts: int | None = None
    attempts_factor: float = 10.0
    achieved_swaps: int = 0
    rejected: int = 0


def rewire_degree_preserving(g: EvidenceNetwork, plan: RewirePlan | None = None) -> EvidenceNetwork:
    """Randomize ``g`` by double-edge swaps ``(u,v),(x,y) -> (u,y),(x,v)``.

    Swaps creating a self-loop or a duplicate edge are rejected, never
    retried, so in- and out-degree sequences are preserved exactly. Each
    weight stays attached to the arc's source node. ``plan`` is updated in
    place with the seed used and the swap counts.
    """
    plan = RewirePlan() if plan is None else plan
    if g.m < 2:
        raise ValueError(f"rewiring needs at least 2 edges, {g.name or 'network'} has {g.m}")
    if plan.seed is None:
        plan.seed = fresh_seed()
    if plan.swap_attempts is None:
        plan.swap_attempts = int(round(plan.attempts_factor * g.m))

    src, dst, w = g.arcs()
    if not g.directed:
        keep = src < dst
        src, dst, w = src[keep], dst[keep], w[keep]
    src = np.ascontiguousarray(src)
    dst = np.ascontiguousarray(dst)
    m = len(src)

    rng = np.random.default_rng(plan.seed)
    attempts = plan.swap_attempts
    e1 = rng.integers(0, m, size=attempts)
    e2 = rng.integers(0, m, size=attempts)
    flip = rng.integers(0, 2, size=attempts, dtype=np.uint8)
    accepted = kernels.rewire_swaps(src, dst, g.n, g.directed, e1, e2, flip)
    plan.achieved_swaps = int(accepted)
    plan.rejected = attempts - int(accepted)

    if not g.directed:
        src, dst, w = np.concatenate([src, dst]), np.concatenate([dst, src]), np.concatenate([w, w])
    adj = sp.csr_matrix((w, (src, dst)), shape=(g.n, g.n))
    return EvidenceNetwork(g.nodes, adj, g.directed, g.kind, f"{g.name}~rewired", g.weighted)


def shuffle_vertex_labels(g: EvidenceNetwork, seed: int) -> EvidenceNetwork:
    """Isomorphic copy of ``g`` under a uniformly random relabeling of its nodes."""
    perm = np.random.default_rng(seed).permutation(g.n)
    return g.relabeled(perm, name=f"{g.name}~shuffled")


def shuffle_feature_assignment(profiles: "FeatureProfileTable", seed: int) -> "FeatureProfileTable":
    """Permute which user owns which profile row; row contents are untouched."""
    if profiles.n_users < 2:
        raise ValueError("feature shuffling needs at least 2 users")
    perm = np.random.default_rng(seed).permutation(profiles.n_users)
    return profiles.with_rows(perm)


def shuffle_allocation_sizes(
    alloc: CommunityAllocation, population: Sequence[str], seed: int
) -> CommunityAllocation:
    """Random allocation with the same community-size multiset, drawn without replacement."""
    population = list(dict.fromkeys(population))
    sizes = [len(c) for c in alloc.communities]
    total = sum(sizes)
    if total > len(population):
        raise ValueError(
            f"population of {len(population)} cannot hold {total} allocated nodes"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(population), size=total, replace=False)
    bounds = np.cumsum([0] + sizes)
    communities = [
        frozenset(population[i] for i in chosen[a:b]) for a, b in zip(bounds[:-1], bounds[1:])
    ]
    return CommunityAllocation(
        f"{alloc.allocation_id}~shuffled{seed}", communities,
        provenance=f"size-preserving shuffle of {alloc.allocation_id} (seed={seed})",
    )
