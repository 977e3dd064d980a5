"""Time the compiled and pure-Python kernel backends on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from evinet import kernels
from evinet.synth import PlantedWorld, generate_world


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(seed=0):
    rng = np.random.default_rng(seed)
    nets, _, _ = generate_world(PlantedWorld.balanced(2000, 20, p_in=0.1, p_out=0.002, seed=seed))
    g = nets[0]
    src, dst, _ = g.arcs()
    keep = src < dst
    src, dst = src[keep], dst[keep]
    m = len(src)
    e1, e2 = rng.integers(0, m, 10 * m), rng.integers(0, m, 10 * m)
    flip = rng.random(10 * m) < 0.5
    A = g.undirected_adjacency()
    sources = np.arange(0, g.n, 4)
    W = (rng.random((16, 16)) < 0.4).astype(float)
    W = np.triu(W, 1) + np.triu(W, 1).T
    return {
        f"rewire_swaps (m={m}, 10m attempts)":
            lambda: kernels.rewire_swaps(src.copy(), dst.copy(), g.n, False, e1, e2, flip),
        "min_cut_exhaustive (16 nodes)": lambda: kernels.min_cut_exhaustive(W, False),
        f"bfs_distances ({len(sources)} sources, n={g.n})":
            lambda: kernels.bfs_distances(A.indptr, A.indices, sources),
        f"distance_histogram ({len(sources)} sources)":
            lambda: kernels.distance_histogram(A.indptr, A.indices, sources),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.compiled is None:
        raise SystemExit("compiled extension not built; reinstall without EVINET_NO_EXT")
    work = cases()
    print(f"{'kernel':48s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s}")
    for name, fn in work.items():
        timing = {}
        for label, impl in (("cython", kernels.compiled), ("python", kernels.python)):
            kernels._impl = impl
            timing[label] = best_of(fn, args.repeat)
        print(f"{name:48s} {timing['cython']:10.4f} {timing['python']:10.4f} "
              f"{timing['python'] / timing['cython']:8.1f}x")


if __name__ == "__main__":
    main()
