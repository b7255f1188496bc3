"""Distance-decay kernels and per-region weight matrices.

Every kernel maps distance 0 to exactly 1 and ``inf`` to exactly 0, and is
nonincreasing in distance for a fixed bandwidth.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


def _check_bandwidth(b):
    if not np.all(np.asarray(b) > 0):
        raise ValueError(f"bandwidth must be positive, got {b}")


def exponential_weight(d, b):
    """``exp(-d / b)``."""
    _check_bandwidth(b)
    return np.exp(-np.asarray(d, dtype=float) / b)


def gaussian_weight(d, b):
    """``exp(-(d / b)**2)``."""
    _check_bandwidth(b)
    r = np.asarray(d, dtype=float) / b
    return np.exp(-r * r)


def bisquare_weight(d, b):
    """``(1 - (d / b)**2)**2`` inside the bandwidth, 0 from ``d >= b`` on."""
    _check_bandwidth(b)
    r = np.asarray(d, dtype=float) / b
    with np.errstate(invalid="ignore"):
        w = (1.0 - r * r) ** 2
    return np.where(r < 1.0, w, 0.0)


def graph_hybrid_weight(d, b):
    """1 for neighbours (``d <= 1``), exponential decay beyond."""
    _check_bandwidth(b)
    d = np.asarray(d, dtype=float)
    return np.where(d <= 1.0, 1.0, np.exp(-d / b))


KERNELS = {
    "exponential": exponential_weight,
    "gaussian": gaussian_weight,
    "bisquare": bisquare_weight,
    "graph_hybrid": graph_hybrid_weight,
}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus the upper end ``D`` of the uniform bandwidth prior."""

    kind: str = "exponential"
    upper: float = 100.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ConfigurationError(f"unknown kernel {self.kind!r}; choose from {sorted(KERNELS)}")
        if not self.upper > 0:
            raise ConfigurationError(f"bandwidth prior upper bound D must be positive, got {self.upper}")

    def __call__(self, d, b):
        return KERNELS[self.kind](d, b)


def observation_distances(distances, obs_region) -> np.ndarray:
    """S x n matrix: distance from each focal region to each observation's region."""
    values = getattr(distances, "values", distances)
    return np.asarray(values)[:, np.asarray(obs_region)]


def weight_rows(distances, spec: KernelSpec, b: float, obs_region) -> np.ndarray:
    """Weights ``w_i(s)`` for every focal region ``s`` (rows) and observation ``i``.

    Parameters
    ----------
    distances : DistanceMatrix or array of shape (S, S)
    spec : KernelSpec
    b : float
        Bandwidth in ``(0, D]``.
    obs_region : int array of shape (n,)
        Region index of each observation.

    Returns
    -------
    array of shape (S, n)
    """
    if not 0 < b <= spec.upper:
        raise ValueError(f"bandwidth {b} outside (0, {spec.upper}]")
    return spec(observation_distances(distances, obs_region), b)
