import math

import numpy as np
import pytest
from scipy.stats import hypergeom, kendalltau

from evinet.ranking import Ranking, expected_overlap, kendall_tau, overlap_pmf, topk_overlap_curve


def rk(order):
    return Ranking.from_order([str(x) for x in order])


def test_tau_examples():
    assert kendall_tau(rk([1, 2, 3, 4]), rk([1, 2, 3, 4])).tau == 1.0
    assert kendall_tau(rk([1, 2, 3, 4]), rk([4, 3, 2, 1])).tau == -1.0
    assert kendall_tau(rk([1, 2, 3]), rk([1, 3, 2])).tau == pytest.approx(1 / 3)


def test_tau_errors():
    with pytest.raises(ValueError):
        kendall_tau(rk([1]), rk([1]))
    flat = Ranking.from_scores({"a": 1.0, "b": 1.0, "c": 1.0})
    with pytest.raises(ValueError):
        kendall_tau(flat, rk(["a", "b", "c"]))


def test_tau_matches_scipy_with_ties(rng):
    for n in (5, 12, 29, 40, 120):
        for _ in range(5):
            x = rng.integers(0, 6, size=n).astype(float)
            y = (x + rng.integers(0, 4, size=n)).astype(float)
            ids = [f"i{i:03d}" for i in range(n)]
            r1 = Ranking.from_scores(dict(zip(ids, x)))
            r2 = Ranking.from_scores(dict(zip(ids, y)))
            ours = kendall_tau(r1, r2)
            ref = kendalltau(x, y)
            assert ours.tau == pytest.approx(ref.statistic, abs=1e-12)
            assert not ours.exact
            assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-6, abs=1e-12)


def test_tau_exact_p_matches_scipy(rng):
    for n in (3, 6, 10, 20):
        x = rng.permutation(n).astype(float)
        y = rng.permutation(n).astype(float)
        ids = [str(i) for i in range(n)]
        ours = kendall_tau(Ranking.from_scores(dict(zip(ids, x))), Ranking.from_scores(dict(zip(ids, y))))
        ref = kendalltau(x, y, method="exact")
        assert ours.exact
        assert ours.tau == pytest.approx(ref.statistic, abs=1e-12)
        assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-9)


def test_tau_reversal_antisymmetry(rng):
    for _ in range(50):
        order = rng.permutation(15)
        other = rng.permutation(15)
        t = kendall_tau(rk(order), rk(other)).tau
        assert kendall_tau(rk(order), rk(other[::-1])).tau == pytest.approx(-t, abs=1e-12)


def test_restrict_top():
    a, b = rk(range(10)), rk(list(range(5))[::-1] + list(range(5, 10)))
    res = kendall_tau(a, b, restrict_top=5)
    assert res.n == 5 and res.tau == -1.0


def test_ties_recorded():
    r = Ranking.from_scores({"b": 2.0, "a": 2.0, "c": 1.0})
    assert r.ids == ("a", "b", "c") and r.tie_groups == ((0, 2),)


def test_topk_examples():
    a = rk(range(10))
    curve = topk_overlap_curve(a, a, [0, 1, 5, 10])
    assert [m for _, m, _ in curve.points] == [0, 1, 5, 10]
    b = rk(list(range(5, 10)) + list(range(5)))
    assert topk_overlap_curve(a, b, [5]).points[0][1] == 0
    assert expected_overlap(100, 10) == 1.0
    for k, _, e in curve.points:
        assert e == pytest.approx(k * k / 10, abs=1e-12)
    with pytest.raises(ValueError):
        topk_overlap_curve(a, a, [11])
    with pytest.raises(ValueError):
        topk_overlap_curve(a, rk(range(1, 11)), [2])


def test_topk_symmetric(rng):
    for _ in range(50):
        a, b = rk(rng.permutation(30)), rk(rng.permutation(30))
        ks = [1, 5, 17, 30]
        assert [p[1] for p in topk_overlap_curve(a, b, ks).points] == [p[1] for p in topk_overlap_curve(b, a, ks).points]


def test_pmf_examples():
    assert overlap_pmf(4, 2, 2) == pytest.approx(1 / 6)
    with pytest.raises(ValueError):
        overlap_pmf(4, 2, 3)


@pytest.mark.parametrize("n,k", [(4, 2), (10, 3), (50, 25), (100, 10), (3000, 40)])
def test_pmf_normalized_with_hypergeometric_mean(n, k):
    lo = max(0, 2 * k - n)
    support = range(lo, k + 1)
    probs = [overlap_pmf(n, k, m) for m in support]
    assert sum(probs) == pytest.approx(1.0, abs=1e-9)
    assert sum(m * p for m, p in zip(support, probs)) == pytest.approx(k * k / n, abs=1e-9)
    ref = hypergeom(n, k, k)
    for m, p in zip(support, probs):
        assert p == pytest.approx(ref.pmf(m), rel=1e-7, abs=1e-300)
