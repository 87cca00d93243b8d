"""Command line interface.

    wdlsm simulate   --config sim.json --out DIR
    wdlsm fit        --data edges.csv --config fit.json --out DIR [--chains K]
    wdlsm diagnose   --data edges.csv --samples DIR --out DIR [--truth truth.json]
                     [--exogenous attrs.csv]
    wdlsm summarize  --samples DIR --out DIR
    wdlsm preprocess --data edges.csv --op {rescale,log,log1p} --out edges2.csv

Exit codes: 0 success, 2 usage error, 3 data or parse error, 4 numerical
failure. ``WDLSM_NUM_THREADS`` caps the worker processes used for
``fit --chains``.
"""

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .config import (config_hash, load_raw, parse_overrides, resolve_fit_config,
                     resolve_sim_config)
from .diagnostics import (category_distance_matrix, chain_diagnostics,
                          distance_ratio_distribution, mantel_test, pseudo_r2_count,
                          pseudo_r2_tobit)
from .errors import UsageError, WDLSMError
from .model import DyadKind, ModelParams, pairwise_distances
from .preprocess import preprocess_log, preprocess_log1p, preprocess_rescale_total
from .sampler import PosteriorSamples, chain_seeds, posterior_summary, run_chain
from .simgen import simulate

logger = logging.getLogger("wdlsm")

THREADS_ENV = "WDLSM_NUM_THREADS"


def _num_workers():
    value = os.environ.get(THREADS_ENV)
    if value is None:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer") from None


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- simulate

def cmd_simulate(args):
    raw = load_raw(args.config)
    raw.update(parse_overrides(args.set))
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg, resolved = resolve_sim_config(raw)
    digest = config_hash(resolved)
    Y, X, params = simulate(cfg)
    out = _outdir(args.out)
    meta = {"seed": cfg.seed, "config_hash": digest}
    io.write_edge_list(Y, out / "edges.csv", meta)
    io.write_truth(out / "truth.json", X, params, Y.labels, meta)
    io.write_json(out / "manifest.json", {"command": "simulate", "config": resolved, **meta})
    return 0


# ---------------------------------------------------------------- fit

def _load_network(path, kind, directed):
    meta = io.read_metadata(path)
    if "kind" in meta and DyadKind.parse(meta["kind"]) is not kind:
        raise UsageError(f"data declares kind={meta['kind']} but the configuration says {kind.value}")
    if "directed" in meta and (meta["directed"].lower() == "true") != directed:
        raise UsageError("data and configuration disagree on directedness")
    return io.read_edge_list(path, kind, directed)


def _write_samples(out, samples, meta, resolved, wall_time):
    out = _outdir(out)
    for name, draws in samples.scalars().items():
        io.write_scalar_draws(out / f"{name}.csv", draws, meta)
    io.write_matrix_draws(out / "radii.csv", samples.radii, samples.labels, meta)
    io.write_positions(out / "positions.bin", samples.X, meta)
    io.write_positions(out / "target.bin", samples.target[None], meta)
    io.write_json(out / "acceptance.json", {"acceptance": samples.acceptance, **meta})
    io.write_json(out / "manifest.json", {
        "command": "fit", "config": resolved, "kind": samples.kind.value,
        "directed": samples.directed, "labels": samples.labels, **meta})
    # wall time kept apart so the remaining outputs are reproducible byte for byte
    io.write_json(out / "timing.json", {"wall_time_seconds": wall_time, **meta})


def _fit_one(job):
    Y, sampler, hyper, init_cfg, resolved, out, seed = job
    from dataclasses import replace
    sampler = replace(sampler, seed=seed)
    resolved = dict(resolved, seed=seed)
    meta = {"seed": seed, "config_hash": config_hash(resolved)}
    start = time.perf_counter()
    samples = run_chain(Y, sampler, init_cfg, hyper)
    _write_samples(out, samples, meta, resolved, time.perf_counter() - start)
    return str(out)


def cmd_fit(args):
    raw = load_raw(args.config)
    raw.update(parse_overrides(args.set))
    if args.seed is not None:
        raw["seed"] = args.seed
    sampler, hyper, init_cfg, kind, directed, resolved = resolve_fit_config(raw)
    Y = _load_network(args.data, kind, directed)
    out = _outdir(args.out)
    if args.chains == 1:
        jobs = [(Y, sampler, hyper, init_cfg, resolved, out, sampler.seed)]
    else:
        seeds = chain_seeds(sampler.seed, args.chains)
        jobs = [(Y, sampler, hyper, init_cfg, resolved, out / f"chain_{k}", s)
                for k, s in enumerate(seeds)]
    workers = min(_num_workers(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_fit_one, jobs))
    else:
        for job in jobs:
            _fit_one(job)
    return 0


# ---------------------------------------------------------------- reading fits

def load_samples(path):
    path = Path(path)
    if not (path / "manifest.json").exists():
        raise FileNotFoundError(f"{path} holds no fit output (manifest.json missing)")
    manifest = io.read_json(path / "manifest.json")
    kind = DyadKind.parse(manifest["kind"])
    scalars = {}
    for name in ("beta_in", "beta_out", "tau2", "sigma2", "gamma2"):
        f = path / f"{name}.csv"
        if f.exists():
            scalars[name] = io.read_draws(f)[0]
    radii, _, _ = io.read_draws(path / "radii.csv")
    X, header = io.read_positions(path / "positions.bin")
    target, _ = io.read_positions(path / "target.bin")
    acceptance = io.read_json(path / "acceptance.json")["acceptance"]
    return PosteriorSamples(radii=radii, X=X, acceptance=acceptance, kind=kind,
                            directed=manifest["directed"], labels=manifest["labels"],
                            config=manifest["config"], target=target[0],
                            gamma2=scalars.pop("gamma2", None), **scalars), manifest


# ---------------------------------------------------------------- diagnose

def cmd_diagnose(args):
    samples, manifest = load_samples(args.samples)
    Y = io.read_edge_list(args.data, samples.kind, samples.directed)
    if list(Y.labels) != list(samples.labels):
        raise UsageError("actor labels of the data and the fit differ")
    out = _outdir(args.out)
    meta = {"seed": manifest["seed"], "config_hash": manifest["config_hash"]}
    if samples.X.shape[0] == 0:
        raise UsageError("fit stored no position draws; lower thin")
    X_mean = samples.posterior_mean_positions()
    params = samples.posterior_mean_params()
    fit = (pseudo_r2_count if Y.kind is DyadKind.COUNT else pseudo_r2_tobit)(Y, X_mean, params)
    report = {"fit": fit.to_dict(), "posterior_mean": {
        "beta_in": params.beta_in, "beta_out": params.beta_out, "tau2": params.tau2,
        "sigma2": params.sigma2, "gamma2": params.gamma2}, "skipped": [], **meta}

    if args.truth:
        truth = io.read_truth(args.truth)
        X_true = io.reorder_to_labels(truth["positions"], truth["labels"], Y.labels)
        ratios = distance_ratio_distribution(X_mean, X_true)
        report["distance_ratios"] = {"median": ratios.median, "iqr": ratios.iqr,
                                     "n_excluded": ratios.n_excluded, **ratios.quantiles()}
        io.write_scalar_draws(out / "distance_ratios.csv", ratios.ratios, meta)
    else:
        report["skipped"].append("distance ratios: no --truth sidecar given")

    if args.exogenous:
        D_latent = pairwise_distances(X_mean).mean(axis=0)
        rng = np.random.default_rng(args.seed if args.seed is not None else manifest["seed"])
        mantel = {}
        for name, mapping in io.read_categories(args.exogenous).items():
            try:
                cats = [mapping[lab] for lab in Y.labels]
            except KeyError as exc:
                raise UsageError(f"actor {exc.args[0]!r} missing from {args.exogenous}") from None
            res = mantel_test(D_latent, category_distance_matrix(cats), args.n_boot, rng)
            mantel[name] = res.to_dict()
        io.write_json(out / "mantel.json", {"tests": mantel, **meta})
        report["mantel"] = mantel
    else:
        report["skipped"].append("Mantel tests: no --exogenous file given")

    diag = chain_diagnostics(samples)
    acceptance = diag.pop("acceptance")
    io.write_json(out / "chain_diagnostics.json", {
        "parameters": {k: v.to_dict() for k, v in diag.items()},
        "acceptance": acceptance, **meta})
    names = list(diag)
    traces = np.column_stack([diag[k].trace for k in names])
    io.write_matrix_draws(out / "traces.csv", traces, names, meta)
    io.write_json(out / "fit_report.json", report)
    return 0


# ---------------------------------------------------------------- summarize

def cmd_summarize(args):
    samples, manifest = load_samples(args.samples)
    out = _outdir(args.out)
    meta = {"seed": manifest["seed"], "config_hash": manifest["config_hash"]}
    summary = posterior_summary(samples)
    io.write_json(out / "posterior_summary.json", {
        "scalars": summary.scalars,
        "radii": {lab: {"mean": float(m), "sd": float(s), "lower": float(lo), "upper": float(hi)}
                  for lab, m, s, (lo, hi) in zip(samples.labels, summary.radii_mean,
                                                 summary.radii_sd, summary.radii_interval)},
        "acceptance": summary.acceptance, **meta})
    if summary.positions_mean is None:
        return 0
    p = summary.positions_mean.shape[2]
    header = "label," + ",".join(f"x{c + 1}" for c in range(p))
    for t, slice_ in enumerate(summary.positions_mean, start=1):
        lines = [f"# {k}={v}" for k, v in meta.items()] + [f"# t={t}", header]
        lines += [f"{lab}," + ",".join(repr(float(v)) for v in row)
                  for lab, row in zip(samples.labels, slice_)]
        (out / f"positions_t{t:03d}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


# ---------------------------------------------------------------- preprocess

PREPROCESS = {"rescale": preprocess_rescale_total, "log": preprocess_log, "log1p": preprocess_log1p}


def cmd_preprocess(args):
    Y = io.read_edge_list(args.data, args.kind, not args.undirected)
    for op in args.op:
        Y = PREPROCESS[op](Y)
    meta = io.read_metadata(args.data)
    meta["preprocess"] = "+".join(Y.metadata["preprocess"])
    meta["kind"] = Y.kind.value
    io.write_edge_list(Y, args.out, meta)
    return 0


# ---------------------------------------------------------------- entry point

def build_parser():
    parser = argparse.ArgumentParser(prog="wdlsm", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dynamic network")
    p.add_argument("--config", help="JSON file of SimConfig fields")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="overrides the configured seed")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="run the MCMC sampler")
    p.add_argument("--data", required=True, help="edge list CSV (t,i,j,w)")
    p.add_argument("--config", help="JSON file of sampler, prior and initialization fields")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="overrides the configured seed")
    p.add_argument("--chains", type=int, default=1,
                   help="independent chains, written to chain_<k>/ (workers: WDLSM_NUM_THREADS)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnose", help="fit report, distance ratios, Mantel tests, ESS")
    p.add_argument("--data", required=True, help="edge list the samples were fitted to")
    p.add_argument("--samples", required=True, help="fit output directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--truth", help="truth.json from simulate, enables distance ratios")
    p.add_argument("--exogenous", help="CSV of actor categories, enables Mantel tests")
    p.add_argument("--n-boot", type=int, default=999, help="Mantel permutations")
    p.add_argument("--seed", type=int, help="seed for the Mantel permutations")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("summarize", help="posterior summaries and per-time position tables")
    p.add_argument("--samples", required=True, help="fit output directory")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("preprocess", help="rescale or log-transform a real-valued edge list")
    p.add_argument("--data", required=True, help="edge list CSV")
    p.add_argument("--op", action="append", choices=sorted(PREPROCESS), required=True,
                   help="transform, repeatable and applied in order")
    p.add_argument("--kind", default="nonneg", help="observation kind of the input")
    p.add_argument("--undirected", action="store_true", help="input is undirected")
    p.add_argument("--out", required=True, help="output edge list")
    p.set_defaults(func=cmd_preprocess)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "chains", 1) < 1:
        print("error: --chains must be positive", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except WDLSMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
