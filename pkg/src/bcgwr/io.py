"""CSV/JSON persistence for draws, summaries, configurations and manifests.

Draw log layout (one row per retained sweep, fixed column order)::

    iteration, bandwidth, sigma2_beta,
    sigma2__<region>            for every region, in frame order,
    beta__<region>__<coef>      region-major, coefficients in data order,
    gamma__<region>__<coef>     (selection runs only, same order),
    psi__<coef>                 (selection runs only)

Floats are written with 17 significant digits, so a read-back is exact.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .bgwr import PosteriorDraws
from .errors import DataError
from .rjmcmc import SelectionDraws

SEP = "__"
NA_TEXT = "NA"


def _fmt(v) -> str:
    return "%.17g" % v


def draw_log_columns(region_ids, names, selection: bool) -> list[str]:
    cols = ["iteration", "bandwidth", "sigma2_beta"]
    cols += [f"sigma2{SEP}{r}" for r in region_ids]
    cols += [f"beta{SEP}{r}{SEP}{n}" for r in region_ids for n in names]
    if selection:
        cols += [f"gamma{SEP}{r}{SEP}{n}" for r in region_ids for n in names]
        cols += [f"psi{SEP}{n}" for n in names]
    return cols


def write_draws_csv(draws: PosteriorDraws, path) -> None:
    selection = isinstance(draws, SelectionDraws) and draws.gamma is not None
    M, S, p = draws.beta.shape
    cols = draw_log_columns(draws.region_ids, draws.names, selection)
    with Path(path).open("w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for m in range(M):
            row = [str(int(draws.iterations[m])), _fmt(draws.bandwidth[m]), _fmt(draws.sigma2_beta[m])]
            row += [_fmt(v) for v in draws.sigma2[m]]
            row += [_fmt(v) for v in draws.beta[m].ravel()]
            if selection:
                row += [str(int(v)) for v in draws.gamma[m].ravel()]
                row += [_fmt(v) for v in draws.psi[m]]
            fh.write(",".join(row) + "\n")


def read_draws_csv(path) -> PosteriorDraws:
    """Inverse of :func:`write_draws_csv`; raises DataError on a malformed log."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"draw log not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty draw log") from None
        rows = list(reader)
    if header[:3] != ["iteration", "bandwidth", "sigma2_beta"]:
        raise DataError(f"{path}: not a draw log (unexpected leading columns {header[:3]})")
    regions = [h[len("sigma2" + SEP):] for h in header if h.startswith("sigma2" + SEP)]
    S = len(regions)
    n_beta = sum(h.startswith("beta" + SEP) for h in header)
    if S == 0 or n_beta % S:
        raise DataError(f"{path}: inconsistent sigma2/beta column counts")
    p = n_beta // S
    prefix = f"beta{SEP}{regions[0]}{SEP}"
    names = [h[len(prefix):] for h in header[3 + S:3 + S + p]]
    selection = any(h.startswith("gamma" + SEP) for h in header)
    if header != draw_log_columns(regions, names, selection):
        raise DataError(f"{path}: columns out of the documented order")
    try:
        arr = np.array([[float(v) for v in r] for r in rows], dtype=float).reshape(len(rows), len(header))
    except ValueError as exc:
        raise DataError(f"{path}: unparseable value ({exc})") from None
    M = arr.shape[0]
    beta = arr[:, 3 + S:3 + S + S * p].reshape(M, S, p)
    kw = dict(beta=beta, sigma2=arr[:, 3:3 + S], sigma2_beta=arr[:, 2], bandwidth=arr[:, 1],
              iterations=arr[:, 0].astype(np.int64), region_ids=tuple(regions), names=tuple(names))
    if selection:
        off = 3 + S + S * p
        gamma = arr[:, off:off + S * p].reshape(M, S, p).astype(np.int8)
        return SelectionDraws(**kw, gamma=gamma, psi=arr[:, off + S * p:])
    return PosteriorDraws(**kw)


def write_table_csv(path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def read_table_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)


def write_summary_csv(summary, path) -> None:
    """Long format: one row per (region, coefficient)."""
    rows = []
    for s, r in enumerate(summary.region_ids):
        for j, n in enumerate(summary.names):
            rows.append([r, n, float(summary.mean[s, j]), float(summary.sd[s, j]),
                         float(summary.lower[s, j]), float(summary.upper[s, j])])
    write_table_csv(path, ["region_id", "coefficient", "mean", "sd", "lower", "upper"], rows)


def write_configuration_csv(conf, region_ids, path) -> None:
    header = ["region_id", "final_label"] + [f"prob_{int(v)}" for v in conf.label_values]
    rows = [[r, int(conf.labels[s]), *(float(x) for x in conf.probabilities[s])]
            for s, r in enumerate(region_ids)]
    write_table_csv(path, header, rows)


def write_label_matrix_csv(labels, region_ids, path, sample_ids=None) -> None:
    """One row per sample; NaN or negative entries are written as NA."""
    labels = np.asarray(labels, dtype=float)
    header = (["sample_id"] if sample_ids is not None else []) + list(region_ids)
    rows = []
    for i, row in enumerate(labels):
        cells = [NA_TEXT if (np.isnan(v) or v < 0) else str(int(v)) for v in row]
        rows.append(([str(int(sample_ids[i]))] if sample_ids is not None else []) + cells)
    write_table_csv(path, header, rows)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


# settings that change where or how fast results are produced, not what they are
NON_SEMANTIC = ("out", "workers")


def config_hash(config: dict) -> str:
    semantic = {k: v for k, v in config.items() if k not in NON_SEMANTIC}
    return hashlib.sha256(canonical_json(semantic).encode()).hexdigest()


def write_manifest(path, command: str, config: dict, outputs=()) -> dict:
    """Metadata needed to reproduce a command's outputs; no timestamps."""
    manifest = {
        "command": command,
        "version": __version__,
        "seed": config.get("seed"),
        "config": config,
        "config_sha256": config_hash(config),
        "outputs": sorted(str(o) for o in outputs),
    }
    Path(path).write_text(json.dumps(manifest, sort_keys=True, indent=2, default=str) + "\n")
    return manifest
