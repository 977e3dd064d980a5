"""Ranking consistency: Kendall's tau-b, top-k overlap, and the hypergeometric overlap baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

EXACT_TAU_LIMIT = 30
EXACT_PMF_LIMIT = 5_000


@dataclass(frozen=True)
class Ranking:
    """Allocation ids ordered best first.

    Equal scores are ordered by allocation id; ``tie_groups`` holds the
    half-open position ranges of such runs so tie-aware statistics can still
    see them.
    """

    ids: tuple[str, ...]
    scores: tuple[float, ...]
    source: tuple[str, str] = ("", "")
    tie_groups: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("ranking ids must be unique")
        if len(self.ids) != len(self.scores):
            raise ValueError("ranking ids and scores differ in length")

    @classmethod
    def from_scores(cls, scores: Mapping[str, float], source: tuple[str, str] = ("", "")) -> "Ranking":
        items = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        ids = tuple(k for k, _ in items)
        vals = tuple(float(v) for _, v in items)
        groups = []
        start = 0
        for i in range(1, len(vals) + 1):
            if i == len(vals) or vals[i] != vals[start]:
                if i - start > 1:
                    groups.append((start, i))
                start = i
        return cls(ids, vals, source, tuple(groups))

    @classmethod
    def from_order(cls, ids: Iterable[str], source: tuple[str, str] = ("", "")) -> "Ranking":
        """A tie-free ranking from a best-first sequence."""
        ids = tuple(ids)
        return cls(ids, tuple(float(len(ids) - i) for i in range(len(ids))), source)

    def __len__(self) -> int:
        return len(self.ids)

    def score_map(self) -> dict[str, float]:
        return dict(zip(self.ids, self.scores))

    def top(self, k: int) -> tuple[str, ...]:
        return self.ids[:k]

    def restricted(self, keep: Iterable[str]) -> "Ranking":
        keep = set(keep)
        return Ranking.from_scores({i: s for i, s in zip(self.ids, self.scores) if i in keep}, self.source)


@dataclass(frozen=True)
class KendallResult:
    tau: float
    p_value: float
    n: int
    exact: bool = False


@dataclass(frozen=True)
class OverlapCurve:
    points: list[tuple[int, int, float]]
    n: int
    source: tuple = field(default=())


def _tie_sums(values: np.ndarray) -> tuple[float, float, float]:
    _, counts = np.unique(values, return_counts=True)
    t = counts[counts > 1].astype(np.float64)
    return (
        float(np.sum(t * (t - 1) / 2)),
        float(np.sum(t * (t - 1) * (2 * t + 5))),
        float(np.sum(t * (t - 1) * (t - 2))),
    )


def _s_statistic(x: np.ndarray, y: np.ndarray, chunk: int = 2048) -> int:
    s = 0
    n = len(x)
    for start in range(0, n, chunk):
        xs = x[start:start + chunk, None]
        ys = y[start:start + chunk, None]
        s += int(np.sum(np.sign(xs - x[None, :]) * np.sign(ys - y[None, :])))
    return s // 2  # every unordered pair was counted twice


@lru_cache(maxsize=None)
def _inversion_counts(n: int) -> tuple[int, ...]:
    """Number of permutations of n items with exactly j inversions, j = 0..n(n-1)/2."""
    counts = [1]
    for i in range(2, n + 1):
        new = [0] * (len(counts) + i - 1)
        for j, c in enumerate(counts):
            for shift in range(i):
                new[j + shift] += c
        counts = new
    return tuple(counts)


def _exact_two_sided(s: int, n: int) -> float:
    counts = _inversion_counts(n)
    pairs = n * (n - 1) // 2
    # S = pairs - 2 * inversions
    extreme = sum(c for inv, c in enumerate(counts) if abs(pairs - 2 * inv) >= abs(s))
    return float(Fraction(extreme, math.factorial(n)))


def kendall_tau(r1: Ranking, r2: Ranking, restrict_top: int | None = None) -> KendallResult:
    """Tie-corrected Kendall tau-b over the items the two rankings share.

    With ``restrict_top=k`` only items in both top-k sets are compared. The
    two-sided p-value is exact (inversion-count distribution) for tie-free
    samples below 30 items and a tie-corrected normal approximation otherwise.
    """
    if restrict_top is not None:
        common = set(r1.top(restrict_top)) & set(r2.top(restrict_top))
    else:
        common = set(r1.ids) & set(r2.ids)
    n = len(common)
    if n < 2:
        raise ValueError(f"Kendall tau needs at least 2 common items, got {n}")
    ids = sorted(common)
    s1, s2 = r1.score_map(), r2.score_map()
    x = np.array([s1[i] for i in ids])
    y = np.array([s2[i] for i in ids])
    s = _s_statistic(x, y)
    n0 = n * (n - 1) / 2
    tx, vx, wx = _tie_sums(x)
    ty, vy, wy = _tie_sums(y)
    denom = math.sqrt((n0 - tx) * (n0 - ty))
    if denom == 0:
        raise ValueError("Kendall tau undefined: one ranking has all scores tied")
    tau = max(-1.0, min(1.0, s / denom))
    if tx == 0 and ty == 0 and n < EXACT_TAU_LIMIT:
        return KendallResult(tau, _exact_two_sided(s, n), n, exact=True)
    var_s = (
        (n * (n - 1) * (2 * n + 5) - vx - vy) / 18.0
        + (2 * tx) * (2 * ty) / (2.0 * n * (n - 1))
        + (wx * wy) / (9.0 * n * (n - 1) * (n - 2) if n > 2 else 1.0)
    )
    if var_s <= 0:
        return KendallResult(tau, 1.0, n)
    z = s / math.sqrt(var_s)
    return KendallResult(tau, min(1.0, math.erfc(abs(z) / math.sqrt(2.0))), n)


def topk_overlap_curve(r1: Ranking, r2: Ranking, ks: Sequence[int]) -> OverlapCurve:
    """``|top_k(r1) ∩ top_k(r2)|`` for each k, next to its independence expectation k²/n."""
    if set(r1.ids) != set(r2.ids):
        raise ValueError("top-k overlap needs two rankings over the same items")
    n = len(r1)
    points = []
    for k in ks:
        k = int(k)
        if k < 0 or k > n:
            raise ValueError(f"k={k} outside 0..{n}")
        m = len(set(r1.top(k)) & set(r2.top(k)))
        points.append((k, m, k * k / n))
    return OverlapCurve(points, n, (r1.source, r2.source))


def overlap_pmf(n: int, k: int, m: int) -> float:
    """Probability that two random top-k sets out of n items share exactly m items."""
    if not (0 <= m <= k <= n) or k - m > n - k:
        raise ValueError(f"invalid overlap parameters n={n}, k={k}, m={m}")
    if n <= EXACT_PMF_LIMIT:
        # int / int true division is correctly rounded
        return math.comb(k, m) * math.comb(n - k, k - m) / math.comb(n, k)

    def log_comb(a, b):
        return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)

    return math.exp(log_comb(k, m) + log_comb(n - k, k - m) - log_comb(n, k))


def expected_overlap(n: int, k: int) -> float:
    return k * k / n
