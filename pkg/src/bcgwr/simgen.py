"""Synthetic datasets for the two simulation studies.

``flat64``
    64 regions on an 8 x 8 lattice scaled so the largest inter-region
    distance is 10; three observations per region; five iid standard normal
    covariates; one global coefficient vector ``(2, 0, 0, 4, 8)``.

``georgia159``
    159 regions on a fixed irregular lattice, split by centroid position
    into three contiguous blocks of 51, 49 and 59 regions.  Six covariates
    are spatially correlated Gaussian fields whose covariance is the
    exponential kernel of the inter-region distance; each block has its own
    coefficient vector, one table per setting.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import RegressionData
from .errors import ConfigurationError
from .geometry import SpatialFrame, _grid_frame, euclidean_distances, lattice_frame
from .kernels import exponential_weight

FLAT_BETA = (2.0, 0.0, 0.0, 4.0, 8.0)

GEORGIA_BETA = {
    1: ((1, 0, 1, 0, 0.5, 2), (1, 0.7, 0.3, 2, 0, 3), (2, 1, 0.8, 1, 0, 1)),
    2: ((2, 0, 1, 0, 4, 2), (1, 0, 3, 2, 0, 3), (4, 1, 0, 3, 0, 1)),
    3: ((9, 0, -4, 0, 2, 5), (1, 7, 3, 6, 0, -1), (2, 0, 6, 1, 7, 0)),
}
GEORGIA_SIZES = (51, 49, 59)

FLAT_MAX_DISTANCE = 10.0


@dataclass(frozen=True)
class SimStudySpec:
    study: str = "flat64"
    setting: int | None = None
    obs_per_region: int | None = None
    seed: int = 0
    covariate_bandwidth: float | None = None

    def __post_init__(self):
        if self.study not in ("flat64", "georgia159"):
            raise ConfigurationError(f"unknown study {self.study!r}")
        if self.study == "georgia159":
            if self.setting not in GEORGIA_BETA:
                raise ConfigurationError(f"georgia159 needs setting 1, 2 or 3, got {self.setting!r}")
        elif self.setting is not None:
            raise ConfigurationError("setting applies to georgia159 only")
        if self.obs_per_region is not None and self.obs_per_region < 1:
            raise ConfigurationError("obs_per_region must be positive")


@dataclass(frozen=True)
class SimDataset:
    frame: SpatialFrame
    data: RegressionData
    true_beta: np.ndarray          # (S, p)
    true_labels: np.ndarray | None = None
    spec: SimStudySpec | None = None


def generate(spec: SimStudySpec) -> SimDataset:
    if spec.study == "flat64":
        return generate_flat_study(spec.seed, spec.obs_per_region or 3)
    return generate_georgia_study(spec.setting, spec.seed, spec.covariate_bandwidth,
                                  obs_per_region=spec.obs_per_region or 1)


def flat_frame() -> SpatialFrame:
    spacing = FLAT_MAX_DISTANCE / (7.0 * np.sqrt(2.0))
    return lattice_frame(8, 8, spacing)


def generate_flat_study(seed: int, obs_per_region: int = 3) -> SimDataset:
    """Flat-coefficient study: ``y = X beta + eps`` with no spatial variation."""
    rng = np.random.default_rng(seed)
    frame = flat_frame()
    S = frame.n_regions
    region = np.repeat(np.arange(S), obs_per_region)
    X = rng.standard_normal((len(region), 5))
    beta = np.asarray(FLAT_BETA)
    y = X @ beta + rng.standard_normal(len(region))
    data = RegressionData(y, X, region, tuple(f"x{j + 1}" for j in range(5)))
    return SimDataset(frame, data, np.tile(beta, (S, 1)), None,
                      SimStudySpec("flat64", None, obs_per_region, seed))


def georgia_frame() -> SpatialFrame:
    """13 x 13 lattice with ten corner cells removed (159 regions)."""
    cut = {(0, 0), (1, 0), (0, 1), (12, 0), (11, 0), (12, 1), (0, 12), (0, 11), (12, 12), (12, 11)}
    cells = [(c, r) for c in range(13) for r in range(13) if (c, r) not in cut]
    return _grid_frame(cells, 1.0)


def georgia_labels(frame: SpatialFrame) -> np.ndarray:
    """Blocks of 51, 49 and 59 regions by west-to-east centroid order."""
    order = np.lexsort((frame.coords[:, 1], frame.coords[:, 0]))
    labels = np.empty(frame.n_regions, dtype=np.int64)
    bounds = np.cumsum((0,) + GEORGIA_SIZES)
    for k in range(3):
        labels[order[bounds[k]:bounds[k + 1]]] = k + 1
    return labels


def spatial_covariance(distances, bandwidth: float, jitter: float = 1e-10) -> np.ndarray:
    K = exponential_weight(np.asarray(getattr(distances, "values", distances)), bandwidth)
    return K + jitter * np.eye(K.shape[0])


def generate_georgia_study(setting: int, seed: int, covariate_bandwidth: float | None = None,
                           obs_per_region: int = 1) -> SimDataset:
    """Three-block study with cluster-specific coefficients and no intercept.

    With ``obs_per_region > 1`` every observation in a region gets its own
    draw of the six covariate fields.
    """
    if setting not in GEORGIA_BETA:
        raise ValueError(f"setting must be 1, 2 or 3, got {setting!r}")
    rng = np.random.default_rng(seed)
    frame = georgia_frame()
    S = frame.n_regions
    dist = euclidean_distances(frame)
    if covariate_bandwidth is None:
        covariate_bandwidth = dist.max_finite / 4.0
    chol = np.linalg.cholesky(spatial_covariance(dist, covariate_bandwidth))
    labels = georgia_labels(frame)
    table = np.asarray(GEORGIA_BETA[setting], dtype=float)
    true_beta = table[labels - 1]
    fields = [chol @ rng.standard_normal((S, 6)) for _ in range(obs_per_region)]
    X = np.concatenate(fields, axis=0)
    region = np.tile(np.arange(S), obs_per_region)
    order = np.argsort(region, kind="stable")
    X, region = X[order], region[order]
    y = np.einsum("ij,ij->i", X, true_beta[region]) + rng.standard_normal(len(region))
    data = RegressionData(y, X, region, tuple(f"x{j + 1}" for j in range(6)))
    return SimDataset(frame, data, true_beta, labels,
                      SimStudySpec("georgia159", setting, obs_per_region, seed, covariate_bandwidth))
