"""Command line interface: simulate, fit, select, signs, evaluate, analyze,
and the end-to-end replicated pipeline.

Every invocation writes a manifest JSON naming its configuration, seed, input
checksums, and output checksums; output tables carry the manifest id in a
leading comment line. Random streams derive from one root seed per
invocation: replicate streams are spawned by index, and within a replicate
the generator, the fitting chain, and the sign chain get separate spawned
streams, so any stage can be reproduced in isolation.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, inference, io, metrics
from .datagen import (
    GenConfig,
    random_chain_graph,
    sample_data,
    sample_parameters,
)
from .errors import MlggmError
from .graph import DIRECTED, UNDIRECTED, ChainGraphSpec, Edge, normalize_pair
from .sampler import PriorConfig, run_bans, run_bans_parallel, structured_sign_run


def spawn_seeds(seed: int, n: int) -> list[int]:
    """Deterministic child seeds: entry k is built from the k-th spawn of
    SeedSequence(seed) by packing its first two 32-bit words."""
    children = np.random.SeedSequence(seed).spawn(n)
    out = []
    for child in children:
        lo, hi = child.generate_state(2, np.uint32)
        out.append(int(lo) | (int(hi) << 32))
    return out


def _out_dir(args) -> Path:
    root = args.out or os.environ.get("MLGGM_OUT", ".")
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _read_prior_edges(path, names):
    index = {name: i + 1 for i, name in enumerate(names)}
    directed = {}
    undirected = {}
    edges, scores, _ = io.read_edges_tsv(path, names)
    for e in edges:
        if e not in scores:
            raise MlggmError(f"{path}: prior edge {e} has no probability column")
        if e.kind == DIRECTED:
            directed[(e.src, e.dst)] = scores[e]
        else:
            undirected[normalize_pair(e.src, e.dst)] = scores[e]
    return directed, undirected


def _prior_from_args(args, names) -> PriorConfig:
    directed, undirected = {}, {}
    if getattr(args, "prior_edges", None):
        directed, undirected = _read_prior_edges(args.prior_edges, names)
    return PriorConfig(
        lambda_tau=args.lambda_tau,
        delta_tau=args.delta_tau,
        c2=args.c2,
        p_dir=args.p_dir,
        q_undir=args.q_undir,
        directed_overrides=directed,
        undirected_overrides=undirected,
    )


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    started = time.time()
    cfg = GenConfig(
        p=args.p, n=args.n, q=args.q, p_e=args.edge_prob,
        magnitude_low=args.mag_low, magnitude_high=args.mag_high,
        diag_pad=args.diag_pad, seed=args.seed,
    )
    manifest = io.RunManifest(
        command="simulate",
        config={k: getattr(args, k) for k in
                ("p", "n", "q", "edge_prob", "mag_low", "mag_high", "diag_pad")},
        seed=args.seed,
    )
    mid = manifest.manifest_id
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    spec = random_chain_graph(cfg, rng)
    params = sample_parameters(spec, cfg, rng)
    data = sample_data(params, args.n, rng)
    paths = {
        "data": out / "data.csv",
        "layers": out / "layers.tsv",
        "truth_graph": out / "truth_graph.tsv",
        "params": out / "params.json",
    }
    io.write_data_csv(paths["data"], data, mid)
    io.write_layers_tsv(paths["layers"], data.names, data.layers, mid)
    io.write_graph_tsv(paths["truth_graph"], spec, data.names, mid)
    io.write_params_json(paths["params"], params, data.names, mid)
    manifest.finish(paths, started)
    manifest.write(out / "manifest_simulate.json")
    print(f"simulate: {len(spec.directed_edges)} directed and "
          f"{len(spec.undirected_edges)} undirected true edges -> {out}")
    return 0


def cmd_fit(args) -> int:
    out = _out_dir(args)
    started = time.time()
    data = io.ingest(args.data, args.layers, standardize=args.standardize)
    manifest = io.RunManifest(
        command="fit",
        config={k: getattr(args, k) for k in
                ("iters", "burnin", "thin", "lambda_tau", "delta_tau", "c2",
                 "p_dir", "q_undir", "mode", "symmetrize", "standardize")},
        seed=args.seed,
    )
    manifest.add_input("data", args.data)
    manifest.add_input("layers", args.layers)
    if args.prior_edges:
        manifest.add_input("prior_edges", args.prior_edges)
    mid = manifest.manifest_id
    prior = _prior_from_args(args, data.names)
    run_kwargs = dict(
        prior=prior, n_iter=args.iters, burn_in=args.burnin,
        thin=args.thin, seed=args.seed, jobs=args.jobs,
    )
    if args.mode == "bans":
        trace = run_bans(data, **run_kwargs)
    else:
        trace = run_bans_parallel(data, symmetrize=args.symmetrize, **run_kwargs)
    g = inference.ppi(trace)
    paths = {"ppi": out / "ppi.tsv", "trace_summary": out / "trace_summary.json"}
    io.write_ppi_tsv(paths["ppi"], g, data.names, mid)
    io.write_trace_summary(paths["trace_summary"], trace, mid)
    manifest.finish(paths, started)
    manifest.write(out / "manifest_fit.json")
    print(f"fit: {trace.mode} stored {trace.n_stored} iterations -> {out}")
    return 0


def cmd_select(args) -> int:
    out = _out_dir(args)
    started = time.time()
    names_l, layers = io.read_layers_tsv(args.layers)
    names, g_matrix = io.read_ppi_tsv(args.ppi)
    if names != names_l:
        raise MlggmError("ppi matrix and layer map disagree on vertex names")
    manifest = io.RunManifest(
        command="select",
        config={"alpha": args.alpha, "rule": args.rule, "symmetrize": args.symmetrize},
        seed=None,
    )
    manifest.add_input("ppi", args.ppi)
    manifest.add_input("layers", args.layers)
    mid = manifest.manifest_id
    g = inference.ppis_from_matrix(g_matrix, layers, args.symmetrize)
    if args.rule == "fdr":
        sel = inference.fdr_select(g, args.alpha)
    else:
        sel = inference.median_model_select(g)
    paths = {"selected": out / "selected_edges.tsv"}
    io.write_edges_tsv(paths["selected"], sel.selected, names, ppi=g, manifest_id=mid)
    manifest.finish(paths, started)
    manifest.write(out / "manifest_select.json")
    print(f"select: kept {len(sel.selected)} edges at threshold {sel.threshold:.4g} -> {out}")
    return 0


def cmd_signs(args) -> int:
    out = _out_dir(args)
    started = time.time()
    data = io.ingest(args.data, args.layers, standardize=args.standardize)
    edges, scores, _ = io.read_edges_tsv(args.edges, data.names)
    manifest = io.RunManifest(
        command="signs",
        config={k: getattr(args, k) for k in
                ("iters", "burnin", "thin", "lambda_tau", "delta_tau", "c2",
                 "sign_cutoff", "standardize")},
        seed=args.seed,
    )
    for name in ("data", "layers", "edges"):
        manifest.add_input(name, getattr(args, name))
    mid = manifest.manifest_id
    prior = _prior_from_args(args, data.names)
    sign_prob = structured_sign_run(
        data, edges, prior=prior, n_iter=args.iters, burn_in=args.burnin,
        thin=args.thin, seed=args.seed, jobs=args.jobs,
    )
    signs = inference.call_signs(sign_prob, args.sign_cutoff)
    paths = {"signed": out / "signed_edges.tsv"}
    io.write_edges_tsv(
        paths["signed"], sign_prob.keys(), data.names,
        ppi=scores, signs=signs, sign_prob=sign_prob, manifest_id=mid,
    )
    manifest.finish(paths, started)
    manifest.write(out / "manifest_signs.json")
    print(f"signs: {sum(1 for s in signs.values() if s == '+')} positive of "
          f"{len(signs)} edges -> {out}")
    return 0


def _metrics_row(selected, scores, truth_spec, alpha, threshold):
    truth = set(truth_spec.edges())
    c = metrics.confusion(selected, truth, truth_spec)
    row = {
        "true_edges": len(truth),
        "discoveries": len(selected),
        "sensitivity": c.sensitivity,
        "specificity": c.specificity,
        "mcc": metrics.mcc(c),
        "threshold": threshold,
        "alpha": alpha,
    }
    if scores:
        r = metrics.roc(scores, truth, truth_spec)
        row["pauc"] = r.pauc
        row["auc"] = r.auc
    else:
        row["pauc"] = ""
        row["auc"] = ""
    return row


METRIC_COLUMNS = ["true_edges", "discoveries", "sensitivity", "specificity",
                  "mcc", "pauc", "auc", "threshold", "alpha"]


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    started = time.time()
    names, layers = io.read_layers_tsv(args.layers)
    truth_spec = io.read_graph_tsv(args.truth, names, layers)
    manifest = io.RunManifest(
        command="evaluate",
        config={"alpha": args.alpha, "rule": args.rule, "symmetrize": args.symmetrize},
        seed=None,
    )
    manifest.add_input("truth", args.truth)
    manifest.add_input("layers", args.layers)
    if args.ppi:
        manifest.add_input("ppi", args.ppi)
        names_p, g_matrix = io.read_ppi_tsv(args.ppi)
        if names_p != names:
            raise MlggmError("ppi matrix and layer map disagree on vertex names")
        scores = inference.ppis_from_matrix(g_matrix, layers, args.symmetrize)
        if args.rule == "fdr":
            sel = inference.fdr_select(scores, args.alpha)
        else:
            sel = inference.median_model_select(scores)
        selected, threshold = sel.selected, sel.threshold
    elif args.edges:
        manifest.add_input("edges", args.edges)
        selected, scores, _ = io.read_edges_tsv(args.edges, names)
        threshold = ""
    else:
        raise MlggmError("evaluate needs --ppi or --edges")
    mid = manifest.manifest_id
    row = _metrics_row(selected, scores, truth_spec, args.alpha, threshold)
    paths = {"metrics": out / "metrics.tsv"}
    io.write_table(paths["metrics"], METRIC_COLUMNS,
                   [[row[c] for c in METRIC_COLUMNS]], mid)
    manifest.finish(paths, started)
    manifest.write(out / "manifest_evaluate.json")
    print("evaluate: " + " ".join(
        f"{k}={row[k]:.3f}" if isinstance(row[k], float) else f"{k}={row[k]}"
        for k in ("sensitivity", "specificity", "mcc", "discoveries")))
    return 0


def cmd_analyze(args) -> int:
    out = _out_dir(args)
    started = time.time()
    names, layers = io.read_layers_tsv(args.layers)
    manifest = io.RunManifest(
        command="analyze",
        config={"degree_all_candidates": args.degree_all_candidates,
                "component": args.component},
        seed=None,
    )
    runs = {}
    run_scores = {}
    for path in args.edges:
        label = Path(path).stem
        manifest.add_input(label, path)
        edges, scores, _ = io.read_edges_tsv(path, names)
        runs[label] = edges
        run_scores[label] = scores
    mid = manifest.manifest_id
    paths = {}

    cs_rows = []
    labels = list(runs.keys())
    for block_label, per_run, mean, sd in inference.cs_table(runs, layers):
        cs_rows.append([block_label] + [per_run[l] for l in labels] + [mean, sd])
    paths["cs_table"] = out / "cs_table.tsv"
    io.write_table(paths["cs_table"], ["block"] + labels + ["mean", "sd"], cs_rows, mid)

    inter_rows = [("+".join(combo), count)
                  for combo, count in inference.intersection_counts(runs)]
    paths["intersections"] = out / "intersections.tsv"
    io.write_table(paths["intersections"], ["runs", "exclusive_count"], inter_rows, mid)

    deg_rows = []
    for label in labels:
        scores = run_scores[label]
        g = {e: scores.get(e, 1.0) for e in runs[label]}
        selected = None if args.degree_all_candidates else set(runs[label])
        w = inference.weighted_degree(g, len(names), selected)
        deg_rows.extend([label, names[i], w[i]] for i in range(len(names)))
    paths["weighted_degree"] = out / "weighted_degree.tsv"
    io.write_table(paths["weighted_degree"], ["run", "vertex", "weighted_degree"], deg_rows, mid)

    if args.component:
        if args.component not in names:
            raise MlggmError(f"unknown vertex name {args.component!r}")
        v = names.index(args.component) + 1
        comp_rows = []
        for label in labels:
            members = inference.connected_component(runs[label], v)
            for e in runs[label]:
                if e.src in members or e.dst in members:
                    comp_rows.append([label, names[e.src - 1], names[e.dst - 1], e.kind])
        paths["component"] = out / "component_edges.tsv"
        io.write_table(paths["component"], ["run", "src", "dst", "kind"], comp_rows, mid)

    manifest.finish(paths, started)
    manifest.write(out / "manifest_analyze.json")
    print(f"analyze: {len(runs)} runs -> {out}")
    return 0


def _replicate(args, rep: int, seed: int, rep_dir: Path) -> dict:
    gen_seed, fit_seed, sign_seed = spawn_seeds(seed, 3)
    ns = argparse.Namespace(**vars(args))
    ns.out = str(rep_dir)
    ns.seed = gen_seed
    cmd_simulate(ns)
    ns = argparse.Namespace(**vars(args))
    ns.out = str(rep_dir)
    ns.seed = fit_seed
    ns.data = str(rep_dir / "data.csv")
    ns.layers = str(rep_dir / "layers.tsv")
    cmd_fit(ns)
    ns.ppi = str(rep_dir / "ppi.tsv")
    ns.symmetrize = args.symmetrize if args.mode == "bans-parallel" else None
    cmd_select(ns)
    if args.with_signs:
        ns.edges = str(rep_dir / "selected_edges.tsv")
        ns.seed = sign_seed
        ns.iters = args.sign_iters
        ns.burnin = args.sign_burnin
        cmd_signs(ns)
    ns.truth = str(rep_dir / "truth_graph.tsv")
    cmd_evaluate(ns)
    rows = io._open_rows(rep_dir / "metrics.tsv")
    return dict(zip(rows[0], rows[1]))


def cmd_pipeline(args) -> int:
    out = _out_dir(args)
    started = time.time()
    manifest = io.RunManifest(
        command="pipeline",
        config={k: getattr(args, k) for k in
                ("p", "n", "q", "edge_prob", "reps", "alpha", "iters", "burnin",
                 "thin", "mode", "symmetrize", "with_signs")},
        seed=args.seed,
    )
    mid = manifest.manifest_id
    rep_seeds = spawn_seeds(args.seed, args.reps)
    rep_dirs = [out / f"rep_{i:04d}" for i in range(args.reps)]

    def one(i):
        return _replicate(args, i, rep_seeds[i], rep_dirs[i])

    if args.jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(one, range(args.reps)))
    else:
        rows = [one(i) for i in range(args.reps)]

    numeric = [c for c in METRIC_COLUMNS if c not in ("threshold", "alpha")]
    table = []
    for i, row in enumerate(rows):
        table.append([i] + [row[c] for c in METRIC_COLUMNS])
    agg_mean = ["mean"] + [""] * len(METRIC_COLUMNS)
    agg_se = ["se"] + [""] * len(METRIC_COLUMNS)
    for j, c in enumerate(METRIC_COLUMNS, start=1):
        if c in numeric:
            vals = np.array([float(row[c]) for row in rows if row[c] != ""])
            if vals.size:
                agg_mean[j] = repr(float(vals.mean()))
                agg_se[j] = repr(float(vals.std(ddof=1) / np.sqrt(vals.size))) if vals.size > 1 else "0.0"
    paths = {"summary": out / "summary.tsv"}
    io.write_table(paths["summary"], ["replicate"] + METRIC_COLUMNS,
                   table + [agg_mean, agg_se], mid)
    manifest.finish(paths, started)
    manifest.write(out / "manifest_pipeline.json")
    print(f"pipeline: {args.reps} replicates -> {out / 'summary.tsv'}")
    return 0


def _add_prior_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lambda_tau", type=float, default=2.0,
                   help="scale hyperparameter of the precision prior (default 2)")
    p.add_argument("--delta", dest="delta_tau", type=float, default=2.0,
                   help="shape-related hyperparameter of the precision prior (default 2)")
    p.add_argument("--c2", type=float, default=None,
                   help="slab variance scale for directed coefficients (default 1/lambda)")
    p.add_argument("--p-dir", type=float, default=0.1,
                   help="prior inclusion probability for directed edges (default 0.1)")
    p.add_argument("--q-undir", type=float, default=0.1,
                   help="prior inclusion probability for undirected edges (default 0.1)")
    p.add_argument("--prior-edges", default=None,
                   help="TSV (src, dst, kind, ppi) of per-edge prior inclusion overrides")


def _add_run_flags(p: argparse.ArgumentParser, iters: int, burnin: int) -> None:
    p.add_argument("--iters", type=int, default=iters,
                   help=f"total iterations including burn-in (default {iters})")
    p.add_argument("--burnin", type=int, default=burnin,
                   help=f"burn-in iterations (default {burnin})")
    p.add_argument("--thin", type=int, default=1, help="thinning stride (default 1)")
    p.add_argument("--seed", type=int, default=0, help="root random seed (default 0)")
    p.add_argument("--jobs", type=int, default=1, help="worker threads (default 1)")
    p.add_argument("--standardize", action="store_true",
                   help="scale columns to unit variance in addition to centering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlggm",
        description="Structure learning for multi-layered Gaussian graphical models. "
                    "See README.md for file formats and a worked two-layer example.",
    )
    parser.add_argument("--version", action="version", version=f"mlggm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a random layered graph, parameters, and data")
    p.add_argument("--p", type=int, required=True, help="number of vertices")
    p.add_argument("--n", type=int, required=True, help="number of observations")
    p.add_argument("--q", type=int, required=True, help="number of layers")
    p.add_argument("--edge-prob", type=float, required=True,
                   help="within-layer edge probability; between consecutive layers half of it")
    p.add_argument("--mag-low", type=float, default=0.5)
    p.add_argument("--mag-high", type=float, default=1.5)
    p.add_argument("--diag-pad", type=float, default=0.1,
                   help="constant added to the dominant diagonal of the residual precision")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory (default $MLGGM_OUT or .)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="run the sampler and write posterior inclusion probabilities")
    p.add_argument("--data", required=True, help="data CSV")
    p.add_argument("--layers", required=True, help="layer TSV")
    p.add_argument("--mode", choices=["bans", "bans-parallel"], default="bans")
    p.add_argument("--symmetrize", choices=["and", "or"], default="and",
                   help="pair-probability symmetrization for bans-parallel")
    _add_run_flags(p, 30_000, 10_000)
    _add_prior_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="FDR-based edge selection from a PPI matrix")
    p.add_argument("--ppi", required=True)
    p.add_argument("--layers", required=True)
    p.add_argument("--alpha", type=float, default=0.1, help="target FDR (default 0.1)")
    p.add_argument("--rule", choices=["fdr", "median"], default="fdr",
                   help="fdr thresholding or the fixed 0.5 median-model cut")
    p.add_argument("--symmetrize", choices=["and", "or"], default=None,
                   help="set when the matrix comes from a bans-parallel fit")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("signs", help="sign inference with the structure held fixed")
    p.add_argument("--data", required=True)
    p.add_argument("--layers", required=True)
    p.add_argument("--edges", required=True, help="selected edge TSV")
    p.add_argument("--sign-cutoff", type=float, default=0.5,
                   help="positive-sign probability cutoff (default 0.5)")
    _add_run_flags(p, 12_000, 4_000)
    _add_prior_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_signs)

    p = sub.add_parser("evaluate", help="score an estimate against a truth graph")
    p.add_argument("--truth", required=True, help="truth graph TSV")
    p.add_argument("--layers", required=True)
    p.add_argument("--ppi", default=None, help="PPI matrix TSV from fit")
    p.add_argument("--edges", default=None,
                   help="edge TSV with optional scores (for externally produced estimates)")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--rule", choices=["fdr", "median"], default="fdr")
    p.add_argument("--symmetrize", choices=["and", "or"], default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="connectivity scores, intersections, weighted degrees")
    p.add_argument("--edges", nargs="+", required=True, help="one edge TSV per run")
    p.add_argument("--layers", required=True)
    p.add_argument("--degree-all-candidates", action="store_true",
                   help="weight degrees over all scored candidates, not only listed edges")
    p.add_argument("--component", default=None,
                   help="also extract the connected component of this vertex name")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("pipeline", help="simulate + fit + select (+ signs) + evaluate, replicated")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--edge-prob", type=float, required=True)
    p.add_argument("--mag-low", type=float, default=0.5)
    p.add_argument("--mag-high", type=float, default=1.5)
    p.add_argument("--diag-pad", type=float, default=0.1)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--rule", choices=["fdr", "median"], default="fdr")
    p.add_argument("--mode", choices=["bans", "bans-parallel"], default="bans")
    p.add_argument("--with-signs", action="store_true")
    p.add_argument("--sign-cutoff", type=float, default=0.5)
    p.add_argument("--sign-iters", type=int, default=12_000,
                   help="total iterations of the sign chain (default 12000)")
    p.add_argument("--sign-burnin", type=int, default=4_000)
    p.add_argument("--symmetrize", choices=["and", "or"], default="and")
    _add_run_flags(p, 30_000, 10_000)
    _add_prior_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MlggmError, OSError) as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
