"""Response/covariate containers and their CSV form.

Data files have columns ``region_id, y, <covariates...>``.  A JSON sidecar
(``<data>.schema.json`` by default) maps each covariate name to
``"continuous"`` or ``"categorical"``; covariates missing from the schema are
treated as continuous.  Categorical covariates are one-hot encoded with
the first level (sorted) as the baseline.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class RegressionData:
    """Responses ``y`` (n,), design matrix ``X`` (n, p), observation regions (n,).

    ``obs_region`` holds integer indices into the owning ``SpatialFrame``.
    """

    y: np.ndarray
    X: np.ndarray
    obs_region: np.ndarray
    names: tuple = ()
    categorical_groups: tuple = ()

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        r = np.asarray(self.obs_region, dtype=np.int64)
        if y.ndim != 1 or X.ndim != 2 or r.ndim != 1:
            raise DataError("y and obs_region must be vectors and X a matrix")
        if not (len(y) == X.shape[0] == len(r)):
            raise DataError(f"row mismatch: y={len(y)}, X={X.shape[0]}, obs_region={len(r)}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("y and X must be finite")
        names = tuple(self.names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError("one name per design column required")
        for arr in (y, X, r):
            arr.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "obs_region", r)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def p(self) -> int:
        return self.X.shape[1]


def encode_covariates(columns: dict, schema: dict | None = None):
    """Turn raw covariate columns into a design matrix.

    Returns the matrix, the column names, and a tuple of
    ``(covariate, [column indices])`` for each categorical covariate.
    """
    schema = schema or {}
    blocks, names, groups = [], [], []
    for name, raw in columns.items():
        kind = schema.get(name, "continuous")
        if kind == "continuous":
            try:
                blocks.append(np.asarray(raw, dtype=float)[:, None])
            except ValueError:
                raise DataError(f"covariate {name!r} declared continuous but has non-numeric values") from None
            names.append(name)
        elif kind == "categorical":
            raw = [str(v) for v in raw]
            levels = sorted(set(raw))
            if len(levels) < 2:
                raise DataError(f"categorical covariate {name!r} has a single level")
            start = len(names)
            for level in levels[1:]:
                blocks.append(np.array([v == level for v in raw], dtype=float)[:, None])
                names.append(f"{name}[{level}]")
            groups.append((name, list(range(start, len(names)))))
        else:
            raise DataError(f"covariate {name!r}: unknown kind {kind!r}")
    if not blocks:
        raise DataError("no covariates")
    return np.hstack(blocks), names, tuple(groups)


def read_data_csv(path, frame, schema_path=None) -> RegressionData:
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    if schema_path is None:
        candidate = path.with_suffix(".schema.json")
        schema_path = candidate if candidate.exists() else None
    schema = {}
    if schema_path is not None:
        try:
            schema = json.loads(Path(schema_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read schema {schema_path}: {exc}") from None
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if "region_id" not in fields or "y" not in fields:
            raise DataError(f"{path}: need region_id and y columns")
        cov_names = [c for c in fields if c not in ("region_id", "y")]
        rows = list(reader)
    if not rows:
        raise DataError(f"{path}: no observations")
    try:
        y = np.array([float(r["y"]) for r in rows])
    except ValueError:
        raise DataError(f"{path}: non-numeric response") from None
    try:
        region = np.array([frame.index_of(r["region_id"]) for r in rows])
    except KeyError as exc:
        raise DataError(f"{path}: {exc.args[0]}") from None
    X, names, groups = encode_covariates({c: [r[c] for r in rows] for c in cov_names}, schema)
    return RegressionData(y, X, region, tuple(names), groups)


def write_data_csv(data: RegressionData, frame, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["region_id", "y", *data.names])
        for k in range(data.n):
            w.writerow([frame.region_ids[data.obs_region[k]], repr(float(data.y[k])),
                        *(repr(float(v)) for v in data.X[k])])
