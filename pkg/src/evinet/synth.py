"""Planted-partition generator for coupled evidence networks, tag profiles and graded allocations.

All networks of one world are noisy subsamples of a single latent graph, so
they are correlated through it rather than through each other.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from evinet.community import CommunityAllocation
from evinet.graph import EvidenceNetwork, build_network
from evinet.semantics import FeatureProfileTable, build_profiles


@dataclass(frozen=True)
class NetworkSpec:
    noise: float = 0.0
    sparsity: float = 1.0
    directed: bool = False
    kind: str = "explicit"
    name: str = ""


@dataclass(frozen=True)
class FeatureSpec:
    tags_per_group: int = 10
    uses_per_user: float = 20.0
    noise: float = 0.2


@dataclass(frozen=True)
class PlantedWorld:
    n: int = 200
    sizes: tuple[int, ...] = (50, 50, 50, 50)
    p_in: float = 0.2
    p_out: float = 0.01
    networks: tuple[NetworkSpec, ...] = (NetworkSpec(0.2, 0.6), NetworkSpec(0.2, 0.6))
    features: FeatureSpec = field(default_factory=FeatureSpec)
    seed: int = 0

    def __post_init__(self):
        if sum(self.sizes) != self.n:
            raise ValueError(f"group sizes sum to {sum(self.sizes)}, expected n={self.n}")
        if any(s <= 0 for s in self.sizes):
            raise ValueError("group sizes must be positive")
        if not 0 <= self.p_out < self.p_in <= 1:
            raise ValueError("need 0 <= p_out < p_in <= 1")
        for spec in self.networks:
            if not 0 <= spec.noise <= 1 or not 0 <= spec.sparsity <= 1:
                raise ValueError("network noise and sparsity must lie in [0, 1]")

    @classmethod
    def balanced(cls, n: int = 200, k: int = 4, **kwargs) -> "PlantedWorld":
        base, extra = divmod(n, k)
        sizes = tuple(base + (i < extra) for i in range(k))
        return cls(n=n, sizes=sizes, **kwargs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sizes"] = list(self.sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PlantedWorld":
        d = dict(d)
        if "sizes" not in d and "k" in d:
            k = d.pop("k")
            n = d.get("n", 200)
            base, extra = divmod(n, k)
            d["sizes"] = [base + (i < extra) for i in range(k)]
        d.pop("k", None)
        d["sizes"] = tuple(d["sizes"])
        d["networks"] = tuple(NetworkSpec(**s) for s in d.get("networks", [{"noise": 0.2, "sparsity": 0.6}] * 2))
        d["features"] = FeatureSpec(**d.get("features", {}))
        return cls(**d)


def user_label(i: int) -> str:
    return f"u{i:05d}"


def _latent_edges(world: PlantedWorld, rng: np.random.Generator) -> np.ndarray:
    group = np.repeat(np.arange(len(world.sizes)), world.sizes)
    iu, ju = np.triu_indices(world.n, 1)
    p = np.where(group[iu] == group[ju], world.p_in, world.p_out)
    keep = rng.random(len(iu)) < p
    return np.column_stack([iu[keep], ju[keep]])


def _evidence_edges(latent: np.ndarray, spec: NetworkSpec, n: int, rng) -> np.ndarray:
    kept = latent[rng.random(len(latent)) < spec.sparsity]
    noisy = rng.random(len(kept)) < spec.noise
    a = rng.integers(0, n, size=len(kept))
    b = rng.integers(0, n - 1, size=len(kept))
    b = b + (b >= a)
    edges = kept.copy()
    edges[noisy, 0] = a[noisy]
    edges[noisy, 1] = b[noisy]
    if spec.directed:
        flip = rng.random(len(edges)) < 0.5
        edges[flip] = edges[flip][:, ::-1]
    else:
        edges = np.sort(edges, axis=1)
    # random replacements can collide with kept edges; keep one copy
    return np.unique(edges, axis=0)


def _profiles(world: PlantedWorld, rng: np.random.Generator) -> FeatureProfileTable:
    fs = world.features
    k = len(world.sizes)
    n_tags = k * fs.tags_per_group
    group = np.repeat(np.arange(k), world.sizes)
    records = []
    for u in range(world.n):
        uses = max(1, int(rng.poisson(fs.uses_per_user)))
        noise = rng.random(uses) < fs.noise
        own = group[u] * fs.tags_per_group + rng.integers(0, fs.tags_per_group, size=uses)
        anywhere = rng.integers(0, n_tags, size=uses)
        tags = np.where(noise, anywhere, own)
        for t, c in zip(*np.unique(tags, return_counts=True)):
            records.append((user_label(u), f"t{int(t):04d}", int(c)))
    return build_profiles(records, users=[user_label(u) for u in range(world.n)])


def generate_world(world: PlantedWorld):
    """Sample ``(networks, profiles, truth)`` for one planted world.

    The latent graph is a planted partition; each evidence network keeps
    every latent edge with probability ``sparsity`` and moves a fraction
    ``noise`` of the kept edges to uniformly random node pairs.
    """
    rng = np.random.default_rng(world.seed)
    latent = _latent_edges(world, rng)
    networks: list[EvidenceNetwork] = []
    labels = [user_label(i) for i in range(world.n)]
    for i, spec in enumerate(world.networks):
        edges = _evidence_edges(latent, spec, world.n, rng)
        if len(edges) == 0:
            raise ValueError(f"network spec {i} produced an empty network")
        name = spec.name or f"G{i + 1}"
        networks.append(build_network(
            ((labels[a], labels[b]) for a, b in edges.tolist()),
            directed=spec.directed, kind=spec.kind, name=name,
        ))
    profiles = _profiles(world, rng)
    bounds = np.cumsum((0,) + tuple(world.sizes))
    truth = CommunityAllocation(
        "truth", [labels[a:b] for a, b in zip(bounds[:-1], bounds[1:])],
        provenance=f"planted partition (seed={world.seed})",
    )
    return networks, profiles, truth


def latent_graph(world: PlantedWorld) -> EvidenceNetwork:
    """The latent planted-partition graph of ``world`` (same draw as ``generate_world``)."""
    rng = np.random.default_rng(world.seed)
    edges = _latent_edges(world, rng)
    labels = [user_label(i) for i in range(world.n)]
    return build_network(((labels[a], labels[b]) for a, b in edges.tolist()),
                         directed=False, name="latent", nodes=labels)


def perturb_allocation(truth: CommunityAllocation, swap_fraction: float, seed: int,
                       allocation_id: str | None = None) -> CommunityAllocation:
    """Move a fraction of the covered nodes to uniformly drawn communities.

    The target community is drawn from all communities (it may be the
    node's own), so ``swap_fraction=1`` scrambles membership completely.
    Sizes are not preserved; emptied communities are dropped.
    """
    if not 0 <= swap_fraction <= 1:
        raise ValueError("swap_fraction must lie in [0, 1]")
    comms = [sorted(c) for c in truth.communities]
    nodes = [x for c in comms for x in c]
    member = np.repeat(np.arange(len(comms)), [len(c) for c in comms])
    rng = np.random.default_rng(seed)
    n_move = int(round(swap_fraction * len(nodes)))
    moved = rng.choice(len(nodes), size=n_move, replace=False)
    member[moved] = rng.integers(0, len(comms), size=n_move)
    groups = [[nodes[i] for i in np.flatnonzero(member == c)] for c in range(len(comms))]
    return CommunityAllocation(
        allocation_id or f"{truth.allocation_id}_f{swap_fraction:.2f}_s{seed}",
        [g for g in groups if g],
        provenance=f"perturb({truth.allocation_id}, f={swap_fraction}, seed={seed})",
    )


def allocation_family(truth: CommunityAllocation, fractions, per_fraction: int, seed: int):
    """``per_fraction`` perturbed allocations at each swap fraction, with spawned seeds."""
    children = np.random.SeedSequence(seed).spawn(len(fractions) * per_fraction)
    allocs = []
    for i, f in enumerate(fractions):
        for r in range(per_fraction):
            child = children[i * per_fraction + r]
            allocs.append(perturb_allocation(
                truth, f, int(child.generate_state(1)[0]), allocation_id=f"a_f{f:.2f}_r{r:02d}",
            ))
    return allocs


def load_world_spec(path) -> PlantedWorld:
    with Path(path).open(encoding="utf-8") as fh:
        return PlantedWorld.from_dict(json.load(fh))
