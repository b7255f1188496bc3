"""Command-line pipeline: simulate, fit, cluster, assess, replicate, summarize.

Settings resolve in the order flags > ``BCGWR_*`` environment variables >
YAML config file (``--config``) > built-in defaults.  Environment variable
names are the upper-cased setting names, e.g. ``BCGWR_SEED=3`` or
``BCGWR_KERNEL=gaussian``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import BcgwrError, ConfigurationError, DataError, NumericalError

log = logging.getLogger("bcgwr")

ENV_PREFIX = "BCGWR_"


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"not a boolean: {v!r}")


def _opt_float(v):
    return None if v is None or str(v).lower() in ("", "none", "null") else float(v)


def _opt_int(v):
    return None if v is None or str(v).lower() in ("", "none", "null") else int(v)


def _upper(v):
    """A number, ``max`` (largest distance) or ``nn`` (median nearest-neighbour distance)."""
    if v is None or str(v).lower() in ("", "none", "null", "max"):
        return None
    if str(v).lower() == "nn":
        return "nn"
    return float(v)


def _resolve_upper(setting, dist) -> float:
    if setting is None:
        return dist.max_finite
    if setting == "nn":
        return dist.nearest_neighbour
    return setting


def _str_list(v):
    if v is None or isinstance(v, (list, tuple)):
        return v
    return [s for s in str(v).split(",") if s]


# name: (type, default, help)
SETTINGS = {
    "seed": (int, None, "random seed (mandatory)"),
    "out": (str, None, "output directory"),
    "data": (str, None, "data CSV (region_id, y, covariates)"),
    "schema": (str, None, "covariate schema JSON (default: <data>.schema.json if present)"),
    "frame": (str, None, "region CSV (region_id, x, y or lat, lon)"),
    "adjacency": (str, None, "edge CSV (region_id_a, region_id_b)"),
    "coords": (str, "planar", "coordinate mode: planar or spherical"),
    "draws": (str, None, "draw log CSV written by fit"),
    "truth": (str, None, "CSV of true labels (region_id, label)"),
    "study": (str, "flat64", "simulation study: flat64 or georgia159"),
    "setting": (_opt_int, None, "georgia159 setting (1, 2 or 3)"),
    "obs_per_region": (_opt_int, None, "observations per region in simulations"),
    "covariate_bandwidth": (_opt_float, None, "georgia159 covariate correlation scale"),
    "kernel": (str, "exponential", "kernel: exponential, gaussian, bisquare, graph_hybrid"),
    "distance": (str, "euclidean", "distance: euclidean, great_circle, graph"),
    "upper": (_upper, None, "upper end D of the bandwidth prior: a number, max or nn (default: max)"),
    "bandwidth": (_opt_float, None, "fix the bandwidth at this value instead of sampling it"),
    "iters": (int, 10_000, "total MCMC sweeps"),
    "burnin": (int, 2_000, "burn-in sweeps"),
    "thin": (int, 1, "keep every thin-th sweep"),
    "select": (_bool, False, "per-region variable selection (reversible jump)"),
    "method": (str, "both", "clustering model: gmm, dpmm or both"),
    "configuration": (str, "both", "configuration estimator: dahl, mode or both"),
    "n_samples": (int, 500, "posterior iterations sampled for clustering"),
    "coefficients": (_str_list, None, "coefficients to cluster on (default all)"),
    "k_max": (int, 10, "largest K tried by the GMM"),
    "restarts": (int, 10, "EM restarts per K"),
    "alpha": (float, 1.0, "DPMM concentration"),
    "truncation": (int, 20, "DPMM truncation level L"),
    "dpmm_iters": (int, 2000, "DPMM Gibbs iterations per sample"),
    "dpmm_burnin": (int, 1000, "DPMM burn-in per sample"),
    "replicates": (int, 1, "number of replicates"),
    "workers": (int, 1, "worker processes"),
    "top_k": (int, 10, "k for top-k probabilities"),
    "plug_in": (_bool, True, "WAIC plug-in convention (false: log-mean-exp)"),
    "scope": (str, "weighted", "WAIC/DIC pointwise scope: weighted or local"),
}

COMMAND_SETTINGS = {
    "simulate": ["seed", "out", "study", "setting", "obs_per_region", "covariate_bandwidth"],
    "fit": ["seed", "out", "data", "schema", "frame", "adjacency", "coords", "kernel", "distance",
            "upper", "bandwidth", "iters", "burnin", "thin", "select", "plug_in", "scope"],
    "cluster": ["seed", "out", "draws", "truth", "method", "configuration", "n_samples", "coefficients",
                "k_max", "restarts", "alpha", "truncation", "dpmm_iters", "dpmm_burnin", "workers"],
    "assess": ["seed", "out", "data", "schema", "frame", "adjacency", "coords", "draws", "kernel",
               "distance", "upper", "plug_in", "scope"],
    "replicate": ["seed", "out", "study", "setting", "obs_per_region", "covariate_bandwidth", "kernel",
                  "distance", "upper", "bandwidth", "iters", "burnin", "thin", "select", "replicates",
                  "workers"],
    "summarize": ["seed", "out", "draws", "top_k"],
}


def resolve_settings(command: str, flags: dict, config_path=None, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    names = COMMAND_SETTINGS[command]
    cfg = {k: SETTINGS[k][1] for k in names}
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigurationError(f"config file not found: {path}")
        try:
            loaded = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{path}: invalid YAML ({exc})") from None
        if not isinstance(loaded, dict):
            raise ConfigurationError(f"{path}: top level must be a mapping")
        unknown = sorted(set(loaded) - set(SETTINGS))
        if unknown:
            raise ConfigurationError(f"{path}: unknown settings {unknown}")
        cfg.update({k: v for k, v in loaded.items() if k in cfg})
    for k in names:
        env = environ.get(ENV_PREFIX + k.upper())
        if env is not None:
            cfg[k] = env
    cfg.update({k: v for k, v in flags.items() if k in cfg and v is not None})
    for k in names:
        conv = SETTINGS[k][0]
        if cfg[k] is not None:
            try:
                cfg[k] = conv(cfg[k])
            except (TypeError, ValueError) as exc:
                raise ConfigurationError(f"setting {k!r}: {exc}") from None
    if cfg.get("seed") is None:
        raise ConfigurationError("a seed is required (--seed, BCGWR_SEED or 'seed' in the config file)")
    if cfg.get("out") is None:
        raise ConfigurationError("an output directory is required (--out)")
    return cfg


def _out_dir(cfg) -> Path:
    out = Path(cfg["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise ConfigurationError(f"output directory not writable: {out}")
    return out


def _require(cfg, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise ConfigurationError(f"--{k.replace('_', '-')} is required")


def _existing(path, what) -> Path:
    p = Path(path)
    if not p.exists():
        raise DataError(f"{what} not found: {p}")
    return p


# ----------------------------------------------------------------------------
# shared loaders
# ----------------------------------------------------------------------------

def _load_problem(cfg):
    from .data import read_data_csv
    from .geometry import distances, read_frame_csv
    from .kernels import KernelSpec

    _require(cfg, "data", "frame")
    frame = read_frame_csv(_existing(cfg["frame"], "frame file"), cfg["coords"],
                           _existing(cfg["adjacency"], "adjacency file") if cfg.get("adjacency") else None)
    data = read_data_csv(_existing(cfg["data"], "data file"), frame, cfg.get("schema"))
    dist = distances(frame, cfg["distance"])
    upper = _resolve_upper(cfg["upper"], dist)
    return frame, data, dist, KernelSpec(cfg["kernel"], upper)


def _sampler_config(cfg, seed=None):
    from .bgwr import BgwrConfig
    from .rjmcmc import RjmcmcConfig

    kw = dict(n_iter=cfg["iters"], burn_in=cfg["burnin"], thin=cfg["thin"],
              seed=cfg["seed"] if seed is None else seed)
    if cfg.get("bandwidth") is not None:
        kw.update(init_bandwidth=cfg["bandwidth"], update_bandwidth=False)
    return RjmcmcConfig(**kw) if cfg["select"] else BgwrConfig(**kw)


def _fit(data, frame, dist, kernel, config, select):
    from .bgwr import run_bgwr
    from .rjmcmc import run_rjmcmc

    run = run_rjmcmc if select else run_bgwr
    return run(data, frame, kernel, config, distances=dist)


def _write_fit_outputs(out: Path, draws, model, cfg) -> list[str]:
    from .assessment import assess
    from .bgwr import posterior_summary
    from .io import write_draws_csv, write_summary_csv, write_table_csv
    from .rjmcmc import inclusion_summary

    files = ["draws.csv", "posterior_summary.csv", "acceptance.csv", "assessment.csv"]
    write_draws_csv(draws, out / "draws.csv")
    write_summary_csv(posterior_summary(draws), out / "posterior_summary.csv")
    write_table_csv(out / "acceptance.csv", ["block", "rate"],
                    [[k, float(v)] for k, v in sorted(draws.acceptance.items())])
    a = assess(draws, model, plug_in=cfg["plug_in"], scope=cfg["scope"])
    write_table_csv(out / "assessment.csv", ["kernel", "waic", "dic", "p_d", "V"],
                    [[model.kernel.kind, a.waic, a.dic, a.p_d, a.V]])
    if cfg["select"]:
        inc = inclusion_summary(draws)
        rows = []
        for s, r in enumerate(inc.region_ids):
            for j, n in enumerate(inc.names):
                rows.append([r, n, float(inc.inclusion_prob[s, j]), float(inc.conditional_mean[s, j]),
                             float(inc.model_averaged_mean[s, j])])
        write_table_csv(out / "inclusion.csv",
                        ["region_id", "coefficient", "inclusion_prob", "conditional_mean",
                         "model_averaged_mean"], rows)
        files.append("inclusion.csv")
    return files


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------

def cmd_simulate(cfg) -> list[str]:
    from .data import write_data_csv
    from .geometry import write_frame_csv
    from .io import write_table_csv
    from .simgen import SimStudySpec, generate

    out = _out_dir(cfg)
    spec = SimStudySpec(cfg["study"], cfg["setting"], cfg["obs_per_region"], cfg["seed"],
                        cfg["covariate_bandwidth"])
    ds = generate(spec)
    write_data_csv(ds.data, ds.frame, out / "data.csv")
    write_frame_csv(ds.frame, out / "frame.csv", out / "adjacency.csv")
    rows = [[r, *(float(v) for v in ds.true_beta[s])] for s, r in enumerate(ds.frame.region_ids)]
    write_table_csv(out / "true_beta.csv", ["region_id", *ds.data.names], rows)
    files = ["data.csv", "frame.csv", "adjacency.csv", "true_beta.csv"]
    if ds.true_labels is not None:
        write_table_csv(out / "labels.csv", ["region_id", "label"],
                        [[r, int(ds.true_labels[s])] for s, r in enumerate(ds.frame.region_ids)])
        files.append("labels.csv")
    return files


def cmd_fit(cfg) -> list[str]:
    from .bgwr import LocalModel

    out = _out_dir(cfg)
    frame, data, dist, kernel = _load_problem(cfg)
    draws = _fit(data, frame, dist, kernel, _sampler_config(cfg), cfg["select"])
    return _write_fit_outputs(out, draws, LocalModel(data, dist, kernel), cfg)


def cmd_assess(cfg) -> list[str]:
    from .assessment import assess
    from .bgwr import LocalModel
    from .io import read_draws_csv, write_table_csv

    _require(cfg, "draws")
    out = _out_dir(cfg)
    frame, data, dist, kernel = _load_problem(cfg)
    draws = read_draws_csv(cfg["draws"])
    if tuple(draws.region_ids) != tuple(frame.region_ids):
        raise DataError("draw log regions do not match the frame")
    a = assess(draws, LocalModel(data, dist, kernel), plug_in=cfg["plug_in"], scope=cfg["scope"])
    write_table_csv(out / "assessment.csv", ["kernel", "waic", "dic", "p_d", "V"],
                    [[kernel.kind, a.waic, a.dic, a.p_d, a.V]])
    return ["assessment.csv"]


def _read_truth(path, region_ids):
    from .io import read_table_csv

    header, rows = read_table_csv(_existing(path, "truth file"))
    if header[:2] != ["region_id", "label"]:
        raise DataError(f"{path}: expected columns region_id,label")
    lab = {r[0]: int(r[1]) for r in rows}
    missing = [r for r in region_ids if r not in lab]
    if missing:
        raise DataError(f"{path}: no label for regions {missing[:5]}")
    return np.array([lab[r] for r in region_ids])


def cmd_cluster(cfg) -> list[str]:
    from .clustering import (DpmmPrior, coefficient_samples, configuration, gmm_cluster_draws,
                             rand_index, two_stage_dpmm)
    from .io import read_draws_csv, write_configuration_csv, write_label_matrix_csv, write_table_csv

    _require(cfg, "draws")
    out = _out_dir(cfg)
    draws = read_draws_csv(cfg["draws"])
    methods = ["gmm", "dpmm"] if cfg["method"] == "both" else [cfg["method"]]
    confs = ["dahl", "mode"] if cfg["configuration"] == "both" else [cfg["configuration"]]
    if any(m not in ("gmm", "dpmm") for m in methods):
        raise ConfigurationError(f"--method must be gmm, dpmm or both, got {cfg['method']!r}")
    if any(c not in ("dahl", "mode") for c in confs):
        raise ConfigurationError(f"--configuration must be dahl, mode or both, got {cfg['configuration']!r}")
    coefs = None
    if cfg["coefficients"]:
        try:
            coefs = [draws.coefficient_index(c) for c in cfg["coefficients"]]
        except KeyError as exc:
            raise ConfigurationError(str(exc)) from None
    samples = coefficient_samples(draws.beta, cfg["n_samples"], coefs, np.random.default_rng(cfg["seed"]))
    truth = _read_truth(cfg["truth"], draws.region_ids) if cfg.get("truth") else None
    files, ri_rows = [], []
    for m in methods:
        if m == "gmm":
            labels = gmm_cluster_draws(samples, cfg["k_max"], cfg["restarts"], cfg["seed"])
            write_label_matrix_csv(labels.labels, draws.region_ids, out / "gmm_sample_labels.csv",
                                   [s.sample_id for s in samples])
            files.append("gmm_sample_labels.csv")
            results = {c: configuration(labels, c) for c in confs}
        else:
            prior = DpmmPrior(alpha=cfg["alpha"], L=cfg["truncation"])
            results = {}
            for c in confs:
                ts = two_stage_dpmm(samples, prior, cfg["dpmm_iters"], cfg["dpmm_burnin"], cfg["seed"],
                                    stage1_method=c, stage2_method=c, workers=cfg["workers"])
                results[c] = ts.configuration
                write_label_matrix_csv(ts.stage1, draws.region_ids, out / f"dpmm_{c}_stage1.csv", ts.sample_ids)
                write_label_matrix_csv(ts.cluster_sizes, [f"cluster_{k + 1}" for k in
                                                          range(ts.cluster_sizes.shape[1])],
                                       out / f"dpmm_{c}_cluster_sizes.csv", ts.sample_ids)
                files += [f"dpmm_{c}_stage1.csv", f"dpmm_{c}_cluster_sizes.csv"]
        for c, conf in results.items():
            name = f"configuration_{m}_{c}.csv"
            write_configuration_csv(conf, draws.region_ids, out / name)
            files.append(name)
            if truth is not None:
                ri_rows.append([m, c, conf.n_clusters, rand_index(conf.labels, truth)])
    if truth is not None:
        write_table_csv(out / "rand_index.csv", ["model", "method", "n_clusters", "rand_index"], ri_rows)
        files.append("rand_index.csv")
    return files


def cmd_summarize(cfg) -> list[str]:
    from .bgwr import posterior_summary, prob_exceed_own_mean, top_k_probability
    from .io import read_draws_csv, write_summary_csv, write_table_csv
    from .rjmcmc import SelectionDraws, inclusion_summary

    _require(cfg, "draws")
    out = _out_dir(cfg)
    draws = read_draws_csv(cfg["draws"])
    write_summary_csv(posterior_summary(draws), out / "posterior_summary.csv")
    k = min(cfg["top_k"], len(draws.region_ids))
    rows = []
    for j, n in enumerate(draws.names):
        pe = prob_exceed_own_mean(draws, j)
        tk = top_k_probability(draws, j, k)
        rows += [[r, n, float(pe[s]), float(tk[s])] for s, r in enumerate(draws.region_ids)]
    write_table_csv(out / "probabilities.csv", ["region_id", "coefficient", "prob_above_mean",
                                                f"prob_top_{k}"], rows)
    files = ["posterior_summary.csv", "probabilities.csv"]
    if isinstance(draws, SelectionDraws):
        inc = inclusion_summary(draws)
        write_table_csv(out / "inclusion.csv", ["region_id", "coefficient", "inclusion_prob"],
                        [[r, n, float(inc.inclusion_prob[s, j])] for s, r in enumerate(inc.region_ids)
                         for j, n in enumerate(inc.names)])
        files.append("inclusion.csv")
    return files


def replicate_seed(seed: int, index: int) -> int:
    """Seed of replicate ``index``; independent of how many replicates are run."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _one_replicate(args):
    cfg, index, path = args
    from .bgwr import posterior_summary
    from .geometry import distances
    from .kernels import KernelSpec
    from .rjmcmc import inclusion_summary
    from .simgen import SimStudySpec, generate

    seed = replicate_seed(cfg["seed"], index)
    ds = generate(SimStudySpec(cfg["study"], cfg["setting"], cfg["obs_per_region"], seed,
                               cfg["covariate_bandwidth"]))
    dist = distances(ds.frame, cfg["distance"])
    upper = _resolve_upper(cfg["upper"], dist)
    draws = _fit(ds.data, ds.frame, dist, KernelSpec(cfg["kernel"], upper), _sampler_config(cfg, seed),
                 cfg["select"])
    summ = posterior_summary(draws)
    res = {"index": index, "seed": seed, "mean": summ.mean.tolist(), "sd": summ.sd.tolist(),
           "true": ds.true_beta.tolist(),
           "bandwidth": float(np.mean(draws.bandwidth)), "names": list(draws.names)}
    if cfg["select"]:
        inc = inclusion_summary(draws)
        res["inclusion"] = inc.inclusion_prob.mean(axis=0).tolist()
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(res, sort_keys=True) + "\n")
    tmp.replace(path)
    return index


def cmd_replicate(cfg) -> list[str]:
    from .bgwr import replication_metrics
    from .io import write_table_csv

    if cfg["replicates"] <= 0:
        raise ConfigurationError("--replicates must be positive")
    out = _out_dir(cfg)
    rep_dir = out / "replicates"
    rep_dir.mkdir(exist_ok=True)
    paths = {i: rep_dir / f"replicate_{i:04d}.json" for i in range(cfg["replicates"])}
    todo = [(cfg, i, p) for i, p in paths.items() if not p.exists()]
    if todo:
        log.info("running %d of %d replicates", len(todo), len(paths))
    if cfg["workers"] > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as ex:
            list(ex.map(_one_replicate, todo))
    else:
        for job in todo:
            _one_replicate(job)
    results = [json.loads(paths[i].read_text()) for i in sorted(paths)]
    means = np.array([r["mean"] for r in results])
    sds = np.array([r["sd"] for r in results])
    true = np.array([r["true"] for r in results])
    met = replication_metrics(means, sds, true)
    bw = float(np.mean([r["bandwidth"] for r in results]))
    header = ["coefficient", "true", "mean", "MAB", "MSD", "MMSE", "bandwidth"]
    rows = []
    for j, n in enumerate(results[0]["names"]):
        rows.append([n, float(true[..., j].mean()), float(met["mean"][j]), float(met["MAB"][j]), float(met["MSD"][j]),
                     float(met["MMSE"][j]), bw if j == 0 else ""])
    if cfg["select"]:
        header.append("inclusion_prob")
        inc = np.mean([r["inclusion"] for r in results], axis=0)
        for j, row in enumerate(rows):
            row.append(float(inc[j]))
    write_table_csv(out / "replication.csv", header, rows)
    return ["replication.csv"] + [f"replicates/{p.name}" for p in paths.values()]


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "cluster": cmd_cluster,
    "assess": cmd_assess,
    "replicate": cmd_replicate,
    "summarize": cmd_summarize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bcgwr", description="Bayesian cluster geographically weighted regression")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, keys in COMMAND_SETTINGS.items():
        p = sub.add_parser(name, help=(COMMANDS[name].__doc__ or name).strip().splitlines()[0]
                           if COMMANDS[name].__doc__ else name)
        p.add_argument("--config", help="YAML settings file")
        p.add_argument("-v", "--verbose", action="store_true")
        for k in keys:
            conv, default, help_ = SETTINGS[k]
            flag = "--" + k.replace("_", "-")
            if conv is _bool:
                p.add_argument(flag, dest=k, action="store_const", const=True, default=None, help=help_)
                p.add_argument("--no-" + k.replace("_", "-"), dest=k, action="store_const", const=False)
            else:
                p.add_argument(flag, dest=k, default=None, help=f"{help_} (default: {default})")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_settings(args.command, vars(args), args.config)
        files = COMMANDS[args.command](cfg)
        from .io import write_manifest

        write_manifest(Path(cfg["out"]) / "manifest.json", args.command, cfg, files)
    except BcgwrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return NumericalError.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigurationError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
