"""End-to-end runs: synth or load -> structure -> quality -> rankings vs. null models -> plot data.

Every file written here starts with comment lines carrying the tool version
and the full run configuration, and contains nothing time-dependent, so
identical configurations reproduce identical bytes.
"""
from __future__ import annotations

import csv
import json
import logging
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from evinet import __version__, stats
from evinet.community import (
    QUALITY_FUNCTIONS, CommunityAllocation, QualityScore, QualityScoreTable,
    rate_allocations, read_allocations, score_allocation,
)
from evinet.graph import EvidenceNetwork, read_edgelist, restrict_to_common
from evinet.nullmodels import RewirePlan, fresh_seed, rewire_degree_preserving, shuffle_vertex_labels
from evinet.overlap import overlap_degree_profile
from evinet.qap import qap_test
from evinet.ranking import Ranking, kendall_tau, topk_overlap_curve
from evinet.semantics import distance_similarity_profile, read_tags
from evinet.synth import PlantedWorld, allocation_family, generate_world

logger = logging.getLogger(__name__)

ANALYSES = ("stats", "semantics", "overlap", "qap")

DEFAULTS = {
    "fractions": [round(0.1 * i, 1) for i in range(10)],
    "per_fraction": 5,
    "functions": ["modularity", "segregation", "intra_conductance", "inter_conductance"],
    "null_replicas": 5,
    "ks": [5, 10, 25, 50],
    "analyses": list(ANALYSES),
    "qap_permutations": 1000,
    "shuffles": 5,
    "max_distance": None,
    "method": "auto",
    "weighted": False,
    "directed": False,
    "workers": 1,
}


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and the inputs involved."""

    def __init__(self, stage: str, inputs: Sequence[str], cause: Exception):
        self.stage = stage
        self.inputs = list(inputs)
        super().__init__(f"stage {stage!r} failed for {', '.join(self.inputs) or 'run'}: {cause}")


def derive_seed(seed: int, *keys) -> int:
    """Independent child seed for a named stream; stable across runs and platforms."""
    ints = [k if isinstance(k, int) else zlib.crc32(str(k).encode()) for k in keys]
    return int(np.random.SeedSequence(seed, spawn_key=tuple(ints)).generate_state(1)[0])


@dataclass
class Bundle:
    config: dict
    networks: list[EvidenceNetwork]
    allocations: list[CommunityAllocation]
    scores: QualityScoreTable
    null_scores: QualityScoreTable
    tau: dict[str, list[list[float | None]]] = field(default_factory=dict)
    curves: list[dict] = field(default_factory=list)
    network_stats: dict[str, dict] = field(default_factory=dict)
    ccdf: list[dict] = field(default_factory=list)
    path_hist: list[dict] = field(default_factory=list)
    knn: list[dict] = field(default_factory=list)
    simprofile: list[dict] = field(default_factory=list)
    overlap_profiles: list[dict] = field(default_factory=list)
    qap: list[dict] = field(default_factory=list)
    qap_hist: list[dict] = field(default_factory=list)

    def report(self) -> dict:
        return {
            "meta": meta(self.config),
            "networks": [{"name": g.name, "nodes": g.n, "edges": g.m, "directed": g.directed}
                         for g in self.networks],
            "allocations": len(self.allocations),
            "network_stats": self.network_stats,
            "tau": self.tau,
            "tau_layout": "tau[f][i][j]: j>i compares G_i with G_j; j<=i compares null(G_i) with G_j",
            "qap": self.qap,
            "ties": "rankings order equal scores by allocation id; tau-b accounts for ties",
        }


def meta(config: dict) -> dict:
    return {"tool": "evinet", "version": __version__, "config": config}


def _header(config: dict) -> list[str]:
    return [f"evinet {__version__}", "config: " + json.dumps(config, sort_keys=True)]


def normalize_config(config: dict) -> dict:
    """Fill defaults and make sure a seed is present (generated and recorded if absent)."""
    cfg = {**DEFAULTS, **config}
    if cfg.get("seed") is None:
        cfg["seed"] = fresh_seed()
    unknown = [f for f in cfg["functions"] if f not in QUALITY_FUNCTIONS]
    if unknown:
        raise ValueError(f"unknown quality functions {unknown}")
    bad = [a for a in cfg["analyses"] if a not in ANALYSES]
    if bad:
        raise ValueError(f"unknown analyses {bad}; expected a subset of {ANALYSES}")
    if "world" not in cfg and "networks" not in cfg:
        cfg["world"] = PlantedWorld.balanced(seed=int(cfg["seed"])).to_dict()
    return cfg


def _stage(name: str, inputs: Sequence[str] = ()):
    class _Guard:
        def __enter__(self):
            logger.info("stage %s", name)

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, StageError):
                raise StageError(name, inputs, exc) from exc
            return False

    return _Guard()


def _load(cfg: dict):
    if "networks" in cfg:
        with _stage("load", cfg["networks"]):
            networks = [read_edgelist(p, cfg["directed"]) for p in cfg["networks"]]
        with _stage("allocations", [str(cfg.get("allocations"))]):
            if not cfg.get("allocations"):
                raise ValueError("config names networks but no allocation directory")
            allocs = read_allocations(cfg["allocations"])
        profiles = None
        if cfg.get("tags"):
            with _stage("load", [cfg["tags"]]):
                profiles = read_tags(cfg["tags"])
        return networks, allocs, profiles
    with _stage("synth", ["world"]):
        world = PlantedWorld.from_dict(cfg["world"])
        networks, profiles, truth = generate_world(world)
        allocs = allocation_family(
            truth, cfg["fractions"], cfg["per_fraction"], derive_seed(cfg["seed"], "allocations"),
        )
    return networks, allocs, profiles


def null_quality(
    networks: Sequence[EvidenceNetwork],
    allocs: Sequence[CommunityAllocation],
    functions: Sequence[str],
    replicas: int,
    seed: int,
    method: str = "auto",
    weighted: bool = False,
) -> QualityScoreTable:
    """Quality of every allocation in rewired copies of each network, averaged over replicas.

    Rows are keyed by the original network's name.
    """
    rows = []
    for i, g in enumerate(networks):
        nulls = [
            rewire_degree_preserving(g, RewirePlan(seed=derive_seed(seed, "null", i, r)))
            for r in range(replicas)
        ]
        for alloc in allocs:
            for fn in functions:
                vals = []
                note = ""
                for h in nulls:
                    try:
                        vals.append(score_allocation(h, alloc, fn, method, weighted).score)
                    except ValueError as exc:
                        note = str(exc)
                score = float(np.mean(vals)) if vals and not note else None
                rows.append(QualityScore(alloc.allocation_id, g.name, fn, score, note=note))
    return QualityScoreTable(rows)


def tau_matrix(scores: QualityScoreTable, null_scores: QualityScoreTable, names: Sequence[str], function: str):
    """Kendall tau matrix: above the diagonal G_i vs G_j, on and below it null(G_i) vs G_j."""
    k = len(names)
    mat: list[list[float | None]] = [[None] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            if j > i:
                a = scores.scores(names[i], function)
            else:
                a = null_scores.scores(names[i], function)
            b = scores.scores(names[j], function)
            try:
                mat[i][j] = kendall_tau(Ranking.from_scores(a), Ranking.from_scores(b)).tau
            except ValueError:
                mat[i][j] = None
    return mat


def _curves(scores, null_scores, names, function, ks) -> list[dict]:
    rows = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            for label, left in (("original", scores), ("null", null_scores)):
                a = left.scores(names[i], function)
                b = scores.scores(names[j], function)
                common = set(a) & set(b)
                if not common:
                    continue
                r1 = Ranking.from_scores({x: a[x] for x in common}, (names[i], function))
                r2 = Ranking.from_scores({x: b[x] for x in common}, (names[j], function))
                curve = topk_overlap_curve(r1, r2, [k for k in ks if k <= len(common)])
                for k, m, e in curve.points:
                    rows.append({"function": function, "first": names[i], "second": names[j],
                                 "k": k, "observed": m, "expected": e, "max": k,
                                 "null": int(label == "null")})
    return rows


def _structure(bundle: Bundle, cfg: dict) -> None:
    seed = cfg["seed"]
    for i, g in enumerate(bundle.networks):
        with _stage("stats", [g.name]):
            bundle.network_stats[g.name] = stats.summary(g)
            for k, p in stats.degree_ccdf(g, "total"):
                bundle.ccdf.append({"source": g.name, "mode": "total", "k": k, "fraction": p})
            try:
                ps = stats.path_length_stats(g)
                for length, count in ps.length_histogram.items():
                    bundle.path_hist.append({"source": g.name, "length": length, "count": count,
                                             "pair_unit": ps.pair_unit})
            except ValueError as exc:
                logger.warning("path histogram skipped for %s: %s", g.name, exc)
            for k, v, c in stats.knn_profile(g).points:
                bundle.knn.append({"source": g.name, "k": k, "mean_nn_degree": v, "count": c, "null_flag": 0})
            # label-shuffled replicas leave the profile unchanged; kept as the visual baseline
            for r in range(5):
                h = shuffle_vertex_labels(g, derive_seed(seed, "labels", i, r))
                for k, v, c in stats.knn_profile(h).points:
                    bundle.knn.append({"source": g.name, "k": k, "mean_nn_degree": v,
                                       "count": c, "null_flag": 1, "replica": r})


def _semantics(bundle: Bundle, cfg: dict, profiles) -> None:
    if profiles is None:
        return
    for i, g in enumerate(bundle.networks):
        with _stage("semantics", [g.name]):
            prof = distance_similarity_profile(
                g, profiles, cfg["max_distance"], shuffles=cfg["shuffles"],
                seed=derive_seed(cfg["seed"], "semantics", i),
            )
            nulls = prof.means(null=True)
            for d, c, n in prof.points:
                bundle.simprofile.append({"source": g.name, "distance": d, "mean_cosine": c,
                                          "pairs": n, "null_mean_cosine": nulls.get(d),
                                          "global_mean": prof.global_mean})


def _pairwise(bundle: Bundle, cfg: dict) -> None:
    nets = bundle.networks
    for i in range(len(nets)):
        for j in range(len(nets)):
            if i == j:
                continue
            pair_names = [nets[i].name, nets[j].name]
            if "overlap" in cfg["analyses"]:
                with _stage("overlap", pair_names):
                    pair = restrict_to_common(nets[i], nets[j])
                    prof = overlap_degree_profile(pair, "precision", cfg["null_replicas"],
                                                  derive_seed(cfg["seed"], "overlap", i, j))
                    nulls = {k: (v, se) for k, v, _, se in prof.null_points}
                    for k, v, c in prof.points:
                        nv, se = nulls.get(k, (None, None))
                        bundle.overlap_profiles.append({
                            "first": nets[i].name, "second": nets[j].name, "measure": "precision",
                            "k": k, "mean": v, "count": c, "null_mean": nv, "null_se": se,
                        })
            if "qap" in cfg["analyses"] and i < j:
                with _stage("qap", pair_names):
                    pair = restrict_to_common(nets[i], nets[j])
                    res = qap_test(pair, cfg["qap_permutations"], derive_seed(cfg["seed"], "qap", i, j),
                                   weighted=cfg["weighted"], workers=cfg["workers"])
                    bundle.qap.append({"first": nets[i].name, "second": nets[j].name,
                                       "rho": res.rho_observed, "p_value": res.p_value,
                                       "permutations": res.permutations, "seed": res.seed})
                    counts, edges = res.histogram()
                    for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
                        bundle.qap_hist.append({"first": nets[i].name, "second": nets[j].name,
                                                "bin_low": float(lo), "bin_high": float(hi),
                                                "count": int(c), "observed": res.rho_observed})


def run_pipeline(config: dict) -> Bundle:
    """Run the full experiment described by ``config`` and return the results.

    Writes the report and plot data when ``config['out_dir']`` is set. Any
    stage failure raises :class:`StageError` naming the stage and inputs.
    """
    cfg = normalize_config(config)
    networks, allocs, profiles = _load(cfg)
    names = [g.name for g in networks]
    with _stage("quality", names):
        scores = rate_allocations(allocs, networks, cfg["functions"], cfg["method"], cfg["weighted"])
    with _stage("null-quality", names):
        null_scores = null_quality(networks, allocs, cfg["functions"], cfg["null_replicas"],
                                   cfg["seed"], cfg["method"], cfg["weighted"])
    bundle = Bundle(cfg, networks, allocs, scores, null_scores)
    with _stage("ranking", names):
        for fn in cfg["functions"]:
            bundle.tau[fn] = tau_matrix(scores, null_scores, names, fn)
            bundle.curves.extend(_curves(scores, null_scores, names, fn, cfg["ks"]))
    if "stats" in cfg["analyses"]:
        _structure(bundle, cfg)
    if "semantics" in cfg["analyses"]:
        _semantics(bundle, cfg, profiles)
    _pairwise(bundle, cfg)
    if cfg.get("out_dir"):
        with _stage("write", [str(cfg["out_dir"])]):
            write_bundle(bundle, cfg["out_dir"])
    return bundle


def write_csv(path, rows: Sequence[dict], columns: Sequence[str], config: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in _header(config):
            fh.write(f"# {line}\n")
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.ndarray, tuple, frozenset, set)):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def quality_histogram(scores: QualityScoreTable, bins: int = 20) -> list[dict]:
    rows = []
    for fn in scores.functions:
        for net in scores.network_ids:
            vals = np.array(list(scores.scores(net, fn).values()))
            if len(vals) == 0:
                continue
            lo, hi = float(vals.min()), float(vals.max())
            counts, edges = np.histogram(vals, bins=bins, range=(lo, hi if hi > lo else lo + 1e-9))
            for c, a, b in zip(counts, edges[:-1], edges[1:]):
                rows.append({"function": fn, "source": net, "bin_low": float(a),
                             "bin_high": float(b), "count": int(c)})
    return rows


PLOT_FILES = {
    "degree_ccdf.csv": ("ccdf", ["source", "mode", "k", "fraction"]),
    "path_hist.csv": ("path_hist", ["source", "length", "count", "pair_unit"]),
    "knn.csv": ("knn", ["k", "mean_nn_degree", "count", "source", "null_flag", "replica"]),
    "similarity_profile.csv": ("simprofile", ["source", "distance", "mean_cosine", "pairs",
                                              "null_mean_cosine", "global_mean"]),
    "overlap_profile.csv": ("overlap_profiles", ["first", "second", "measure", "k", "mean", "count",
                                                 "null_mean", "null_se"]),
    "qap_hist.csv": ("qap_hist", ["first", "second", "bin_low", "bin_high", "count", "observed"]),
    "overlap_curves.csv": ("curves", ["function", "first", "second", "k", "observed", "expected",
                                      "max", "null"]),
}


def emit_plotdata(bundle: Bundle, out_dir) -> list[Path]:
    """One tidy CSV per figure family; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fname, (attr, columns) in PLOT_FILES.items():
        path = out / fname
        write_csv(path, getattr(bundle, attr), columns, bundle.config)
        written.append(path)
    path = out / "quality_hist.csv"
    write_csv(path, quality_histogram(bundle.scores), ["function", "source", "bin_low", "bin_high", "count"],
              bundle.config)
    written.append(path)
    return written


def write_bundle(bundle: Bundle, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = _header(bundle.config)
    bundle.scores.to_csv(out / "scores.csv", header)
    bundle.null_scores.to_csv(out / "null_scores.csv", header)
    tau_rows = []
    names = [g.name for g in bundle.networks]
    for fn, mat in bundle.tau.items():
        for i, row in enumerate(mat):
            for j, tau in enumerate(row):
                tau_rows.append({"function": fn, "row": names[i], "column": names[j],
                                 "comparison": "original" if j > i else "null", "tau": tau})
    write_csv(out / "tau.csv", tau_rows, ["function", "row", "column", "comparison", "tau"], bundle.config)
    write_json(out / "report.json", bundle.report())
    emit_plotdata(bundle, out)
