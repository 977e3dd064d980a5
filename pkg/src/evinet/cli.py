"""Command-line front end: ``evinet <subcommand> ...``.

Exit codes: 0 ok, 2 bad input, 3 stage failure. ``EVINET_WORKERS`` caps
parallelism of the permutation test.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from evinet import __version__, stats
from evinet.community import QUALITY_FUNCTIONS, QualityScoreTable, rate_allocations, read_allocations, write_allocation
from evinet.graph import read_edgelist, restrict_to_common, write_edgelist
from evinet.nullmodels import RewirePlan, fresh_seed, rewire_degree_preserving
from evinet.overlap import MEASURES, overlap_degree_profile
from evinet.pipeline import StageError, meta, run_pipeline, write_csv, write_json
from evinet.qap import qap_test
from evinet.ranking import Ranking, kendall_tau, topk_overlap_curve
from evinet.semantics import distance_similarity_profile, read_tags, write_tags
from evinet.synth import allocation_family, generate_world, load_world_spec

EXIT_OK, EXIT_BAD_INPUT, EXIT_STAGE = 0, 2, 3


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("EVINET_WORKERS", "1")))
    except ValueError:
        return 1


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _seed(args) -> int:
    return fresh_seed() if args.seed is None else args.seed


def _config(args, **extra) -> dict:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
    cfg.update(extra)
    return cfg


def _sidecar(out: Path, suffix: str) -> Path:
    return out.with_name(f"{out.stem}_{suffix}.csv")


def cmd_stats(args) -> int:
    g = read_edgelist(args.edges, args.directed)
    seed = _seed(args) if args.sample_pairs else args.seed
    cfg = _config(args, seed=seed)
    report = stats.summary(g, args.sample_pairs, seed)
    report["meta"] = meta(cfg)
    out = Path(args.out)
    write_json(out, report)
    write_csv(_sidecar(out, "ccdf"),
              [{"mode": m, "k": k, "fraction": p} for m in ("in", "out", "total")
               for k, p in stats.degree_ccdf(g, m)],
              ["mode", "k", "fraction"], cfg)
    try:
        sample = None if not args.sample_pairs else (max(1, int(args.sample_pairs ** 0.5)), seed)
        ps = stats.path_length_stats(g, sample=sample)
        rows = [{"length": k, "count": c, "pair_unit": ps.pair_unit} for k, c in ps.length_histogram.items()]
    except ValueError:
        rows = []
    write_csv(_sidecar(out, "pathhist"), rows, ["length", "count", "pair_unit"], cfg)
    write_csv(_sidecar(out, "knn"),
              [{"k": k, "mean_nn_degree": v, "count": c, "source": g.name, "null_flag": 0}
               for k, v, c in stats.knn_profile(g).points],
              ["k", "mean_nn_degree", "count", "source", "null_flag"], cfg)
    return EXIT_OK


def cmd_simprofile(args) -> int:
    g = read_edgelist(args.edges, args.directed)
    profiles = read_tags(args.tags)
    seed = _seed(args)
    prof = distance_similarity_profile(
        g, profiles, args.max_dist, args.pair_sample, args.shuffles, seed, args.directed_distances,
    )
    cfg = _config(args, seed=seed, excluded_users=prof.excluded_users, global_mean=prof.global_mean,
                  global_population=prof.global_population, pair_unit=prof.pair_unit)
    nulls = prof.means(null=True)
    rows = [{"distance": d, "mean_cosine": c, "pairs": n, "null_mean_cosine": nulls.get(d),
             "global_mean": prof.global_mean} for d, c, n in prof.points]
    write_csv(args.out, rows, ["distance", "mean_cosine", "pairs", "null_mean_cosine", "global_mean"], cfg)
    return EXIT_OK


def cmd_overlap(args) -> int:
    pair = restrict_to_common(read_edgelist(args.g1, args.directed), read_edgelist(args.g2, args.directed))
    seed = _seed(args)
    prof = overlap_degree_profile(pair, args.measure, args.null, seed)
    nulls = {k: (v, se) for k, v, _, se in prof.null_points}
    rows = []
    for k, v, c in prof.points:
        nv, se = nulls.get(k, (None, None))
        rows.append({"k": k, "mean": v, "count": c, "null_mean": nv, "null_se": se})
    cfg = _config(args, seed=seed, common_nodes=pair.n, skipped_nodes=prof.skipped)
    write_csv(args.out, rows, ["k", "mean", "count", "null_mean", "null_se"], cfg)
    return EXIT_OK


def cmd_qap(args) -> int:
    pair = restrict_to_common(read_edgelist(args.g1, args.directed), read_edgelist(args.g2, args.directed))
    seed = None if args.exhaustive else _seed(args)
    res = qap_test(pair, args.perms, seed, weighted=args.weighted,
                   include_diagonal=not args.off_diagonal, exhaustive=args.exhaustive,
                   workers=_workers())
    counts, edges = res.histogram(args.bins)
    payload = {
        "meta": meta(_config(args, seed=seed)),
        "common_nodes": pair.n,
        "rho_observed": res.rho_observed,
        "p_value": res.p_value,
        "permutations": res.permutations,
        "seed": res.seed,
        "diagonal_included": res.diagonal_included,
        "exhaustive": res.exhaustive,
        "null_histogram": {"counts": counts.tolist(), "edges": edges.tolist()},
    }
    write_json(args.out, payload)
    return EXIT_OK


def cmd_quality(args) -> int:
    networks = [read_edgelist(p, args.directed) for p in args.networks.split(",") if p]
    allocs = read_allocations(args.allocs)
    functions = [f for f in args.functions.split(",") if f]
    table = rate_allocations(allocs, networks, functions, args.method, args.weighted)
    table.to_csv(args.out, [f"evinet {__version__}", "config: " + json.dumps(_config(args), sort_keys=True)])
    return EXIT_OK


def cmd_rank_compare(args) -> int:
    table = QualityScoreTable.from_csv(args.scores)
    ks = _int_list(args.ks)
    functions = [f for f in args.functions.split(",") if f] if args.functions else table.functions
    nets = table.network_ids
    curve_rows, tau_rows = [], []
    for fn in functions:
        for i in range(len(nets)):
            for j in range(i + 1, len(nets)):
                a, b = table.scores(nets[i], fn), table.scores(nets[j], fn)
                common = set(a) & set(b)
                if len(common) < 2:
                    continue
                r1 = Ranking.from_scores({x: a[x] for x in common}, (nets[i], fn))
                r2 = Ranking.from_scores({x: b[x] for x in common}, (nets[j], fn))
                kt = kendall_tau(r1, r2)
                tau_rows.append({"function": fn, "first": nets[i], "second": nets[j], "n": kt.n,
                                 "tau": kt.tau, "p_value": kt.p_value,
                                 "ties_first": len(r1.tie_groups), "ties_second": len(r2.tie_groups)})
                for k, m, e in topk_overlap_curve(r1, r2, [k for k in ks if k <= len(common)]).points:
                    curve_rows.append({"function": fn, "first": nets[i], "second": nets[j], "k": k,
                                       "observed": m, "expected": e, "max": k, "null": 0})
    cfg = _config(args)
    write_csv(args.out, curve_rows, ["function", "first", "second", "k", "observed", "expected", "max", "null"], cfg)
    write_csv(_sidecar(Path(args.out), "tau"), tau_rows,
              ["function", "first", "second", "n", "tau", "p_value", "ties_first", "ties_second"], cfg)
    return EXIT_OK


def cmd_rewire(args) -> int:
    g = read_edgelist(args.edges, args.directed)
    plan = RewirePlan(seed=_seed(args), attempts_factor=args.attempts_factor)
    h = rewire_degree_preserving(g, plan)
    header = [f"evinet {__version__}",
              "config: " + json.dumps(_config(args, seed=plan.seed), sort_keys=True),
              f"swap_attempts={plan.swap_attempts} achieved={plan.achieved_swaps} rejected={plan.rejected}"]
    write_edgelist(h, args.out, header)
    return EXIT_OK


def cmd_synth(args) -> int:
    world = load_world_spec(args.spec)
    networks, profiles, truth = generate_world(world)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = [f"evinet {__version__}", "config: " + json.dumps(world.to_dict(), sort_keys=True)]
    for g in networks:
        write_edgelist(g, out / f"{g.name}.tsv", header)
    write_tags(profiles, out / "tags.tsv")
    write_allocation(truth, out / "truth.tsv")
    if args.per_fraction:
        adir = out / "allocs"
        adir.mkdir(exist_ok=True)
        for alloc in allocation_family(truth, [float(x) for x in args.fractions.split(",")],
                                       args.per_fraction, world.seed):
            write_allocation(alloc, adir / f"{alloc.allocation_id}.tsv")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
    if args.seed is not None:
        config["seed"] = args.seed
    if args.out_dir:
        config["out_dir"] = str(args.out_dir)
    if "out_dir" not in config:
        raise ValueError("pipeline needs an output directory (--out-dir or out_dir in config)")
    config.setdefault("workers", _workers())
    run_pipeline(config)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evinet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"evinet {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="structural statistics of one network")
    p.add_argument("edges")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--sample-pairs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("simprofile", help="profile similarity vs. network distance")
    p.add_argument("edges")
    p.add_argument("tags")
    p.add_argument("--directed", action="store_true", help="read the edge list as directed")
    p.add_argument("--directed-distances", action="store_true")
    p.add_argument("--max-dist", type=int, default=None)
    p.add_argument("--pair-sample", type=int, default=None, help="number of BFS source users to sample")
    p.add_argument("--shuffles", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simprofile)

    p = sub.add_parser("overlap", help="common-neighborhood profile of two networks")
    p.add_argument("g1")
    p.add_argument("g2")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--measure", choices=MEASURES, default="precision")
    p.add_argument("--null", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("qap", help="graph correlation with QAP permutation test")
    p.add_argument("g1")
    p.add_argument("g2")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--perms", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--binary", dest="weighted", action="store_false")
    mode.add_argument("--weighted", dest="weighted", action="store_true")
    p.add_argument("--off-diagonal", action="store_true")
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_qap, weighted=False)

    p = sub.add_parser("quality", help="score allocations in evidence networks")
    p.add_argument("--networks", required=True, help="comma-separated edge-list files")
    p.add_argument("--allocs", required=True, help="directory of allocation TSV files")
    p.add_argument("--functions", default=",".join(QUALITY_FUNCTIONS))
    p.add_argument("--directed", action="store_true")
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--method", choices=("auto", "brute", "sweep"), default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("rank-compare", help="Kendall tau and top-k overlap of induced rankings")
    p.add_argument("scores")
    p.add_argument("--ks", default="5,10,25,50,100")
    p.add_argument("--functions", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank_compare)

    p = sub.add_parser("rewire", help="degree-preserving null model of a network")
    p.add_argument("edges")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--attempts-factor", type=float, default=10.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rewire)

    p = sub.add_parser("synth", help="generate a planted world")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--fractions", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    p.add_argument("--per-fraction", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pipeline", help="end-to-end ranking-consistency experiment")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"evinet: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (ValueError, KeyError, OSError) as exc:
        print(f"evinet: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
