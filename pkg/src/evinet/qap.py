"""Graph covariance, graph correlation and the QAP permutation test."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from evinet.graph import EvidenceNetwork, RestrictedPair
from evinet.nullmodels import fresh_seed

# permutations drawn per independently seeded block
BLOCK = 256
EXHAUSTIVE_LIMIT = 9


@dataclass(frozen=True)
class QapResult:
    rho_observed: float
    permutations: int
    rho_null_samples: np.ndarray = field(repr=False)
    p_value: float
    seed: int | None
    diagonal_included: bool = True
    exhaustive: bool = False

    def histogram(self, bins: int = 50) -> tuple[np.ndarray, np.ndarray]:
        """Null-distribution histogram as ``(counts, edges)``; counts sum to ``permutations``."""
        lo = min(self.rho_null_samples.min(), self.rho_observed)
        hi = max(self.rho_null_samples.max(), self.rho_observed)
        if hi <= lo:
            hi = lo + 1e-9
        return np.histogram(self.rho_null_samples, bins=bins, range=(lo, hi))


class _Moments:
    """Cell count, mean and variance of one adjacency matrix under the graph covariance."""

    def __init__(self, g: EvidenceNetwork, weighted: bool, include_diagonal: bool):
        n = g.n
        if n < 2:
            raise ValueError(f"graph covariance needs n >= 2, {g.name or 'network'} has n={n}")
        A = g.adjacency(weighted).tocoo()
        self.cells = n * n if include_diagonal else n * (n - 1)
        self.src = A.row.astype(np.int64)
        self.dst = A.col.astype(np.int64)
        self.w = A.data.astype(np.float64)
        self.total = float(self.w.sum())
        self.mean = self.total / self.cells
        # self-loops are banned, so the diagonal only contributes (0 - mean)^2 terms
        self.var = (float(np.dot(self.w, self.w)) - self.cells * self.mean ** 2) / (self.cells - 1)
        self.n = n
        order = np.argsort(self.src * n + self.dst)
        self.keys = (self.src * n + self.dst)[order]
        self.sorted_w = self.w[order]

    def lookup(self, keys: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, max(len(self.keys) - 1, 0))
        if len(self.keys) == 0:
            return np.zeros(keys.shape)
        hit = self.keys[pos] == keys
        return np.where(hit, self.sorted_w[pos], 0.0)


def _cross(m1: _Moments, m2: _Moments, inverse_perms: np.ndarray) -> np.ndarray:
    """Covariance numerators for A1 against A2 relabeled by each permutation."""
    qa = inverse_perms[:, m2.src]
    qb = inverse_perms[:, m2.dst]
    prod = m1.lookup(qa * m1.n + qb) @ m2.w
    return prod - m1.cells * m1.mean * m2.mean


def graph_covariance(pair: RestrictedPair, weighted: bool = False, include_diagonal: bool = True) -> float:
    """Covariance of the two adjacency matrices over all n^2 cells (or the n(n-1) off-diagonal ones)."""
    m1 = _Moments(pair.first, weighted, include_diagonal)
    m2 = _Moments(pair.second, weighted, include_diagonal)
    ident = np.arange(pair.n)[None, :]
    return float(_cross(m1, m2, ident)[0] / (m1.cells - 1))


def _checked_moments(pair: RestrictedPair, weighted: bool, include_diagonal: bool):
    m1 = _Moments(pair.first, weighted, include_diagonal)
    m2 = _Moments(pair.second, weighted, include_diagonal)
    for g, m in ((pair.first, m1), (pair.second, m2)):
        if m.var <= 0:
            raise ValueError(
                f"graph correlation undefined: network {g.name or '<unnamed>'!r} has zero variance on the common vertex set"
            )
    return m1, m2


def graph_correlation(pair: RestrictedPair, weighted: bool = False, include_diagonal: bool = True) -> float:
    m1, m2 = _checked_moments(pair, weighted, include_diagonal)
    ident = np.arange(pair.n)[None, :]
    rho = _cross(m1, m2, ident)[0] / (m1.cells - 1) / math.sqrt(m1.var * m2.var)
    return float(np.clip(rho, -1.0, 1.0))


def qap_test(
    pair: RestrictedPair,
    permutations: int = 1000,
    seed: int | None = None,
    weighted: bool = False,
    include_diagonal: bool = True,
    exhaustive: bool = False,
    workers: int = 1,
) -> QapResult:
    """QAP test of the graph correlation by simultaneous row/column permutation of the second matrix.

    The p-value is the fraction of permutations whose correlation is at least
    the observed one. Sampled permutations come in blocks of ``BLOCK`` with
    one spawned seed per block, so results do not depend on ``workers``.
    ``exhaustive`` enumerates all n! permutations instead (small n only).
    """
    m1, m2 = _checked_moments(pair, weighted, include_diagonal)
    n = pair.n
    scale = (m1.cells - 1) * math.sqrt(m1.var * m2.var)
    rho_o = float(_cross(m1, m2, np.arange(n)[None, :])[0] / scale)

    if exhaustive:
        if n > EXHAUSTIVE_LIMIT:
            raise ValueError(f"exhaustive QAP over {n}! permutations is infeasible")
        perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
        inverse = np.argsort(perms, axis=1)
        null = _cross(m1, m2, inverse) / scale
        seed = None
    else:
        if permutations < 1:
            raise ValueError("QAP test needs at least one permutation")
        if seed is None:
            seed = fresh_seed()
        n_blocks = -(-permutations // BLOCK)
        children = np.random.SeedSequence(seed).spawn(n_blocks)

        def run_block(b: int) -> np.ndarray:
            size = min(BLOCK, permutations - b * BLOCK)
            rng = np.random.default_rng(children[b])
            perms = rng.permuted(np.tile(np.arange(n), (size, 1)), axis=1)
            return _cross(m1, m2, np.argsort(perms, axis=1)) / scale

        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                blocks = list(pool.map(run_block, range(n_blocks)))
        else:
            blocks = [run_block(b) for b in range(n_blocks)]
        null = np.concatenate(blocks)

    null = np.clip(null, -1.0, 1.0)
    # slack so that relabelings reproducing the observed matrix count as ties
    tol = 1e-12 * max(1.0, abs(rho_o))
    p_value = float(np.count_nonzero(null >= rho_o - tol) / len(null))
    return QapResult(
        float(np.clip(rho_o, -1.0, 1.0)), len(null), null, p_value, seed,
        include_diagonal, exhaustive,
    )
