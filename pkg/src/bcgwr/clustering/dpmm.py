"""Dirichlet process mixture of diagonal Gaussians, truncated stick-breaking.

Blocked Gibbs sampler over ``L`` components.  The base measure is
Normal-Inverse-Gamma per dimension::

    sigma2_kd ~ IG(a0, b0_d),   mu_kd | sigma2_kd ~ N(m0_d, sigma2_kd / kappa0)

with ``m0`` the sample mean and ``b0 = (a0 - 1) * variance_scale * var(x)``
so that the prior mean of a component variance is ``variance_scale``
times the sample variance.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

LOG2PI = float(np.log(2.0 * np.pi))


def stick_breaking_weights(V) -> np.ndarray:
    """``C_1 = V_1``, ``C_k = V_k prod_{j<k} (1 - V_j)``; ``C_L`` takes the remainder."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 1 or V.size < 1:
        raise ValueError("V must be a non-empty vector")
    if np.any((V < 0) | (V > 1)):
        raise ValueError("stick fractions must lie in [0, 1]")
    remaining = np.concatenate(([1.0], np.cumprod(1.0 - V[:-1])))
    C = V * remaining
    C[-1] = max(0.0, 1.0 - C[:-1].sum())
    return C


@dataclass(frozen=True)
class DpmmPrior:
    alpha: float = 1.0
    kappa0: float = 0.1
    a0: float = 2.0
    variance_scale: float = 1.0
    L: int = 20

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.L < 2:
            raise ValueError("truncation L must be >= 2")
        if not (self.kappa0 > 0 and self.a0 > 1 and self.variance_scale > 0):
            raise ValueError("kappa0 > 0, a0 > 1 and variance_scale > 0 required")


@dataclass(frozen=True)
class ClusterDraws:
    """Label vectors, one row per retained iteration (or per sample)."""

    labels: np.ndarray           # (Q, S) integer labels
    n_occupied: np.ndarray | None = None

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim == 1:
            lab = lab[None, :]
        if lab.ndim != 2:
            raise ValueError("labels must be (Q, S)")
        object.__setattr__(self, "labels", lab.astype(np.int64))

    @property
    def Q(self) -> int:
        return self.labels.shape[0]

    @property
    def S(self) -> int:
        return self.labels.shape[1]


def _sample_theta(X, z, L, m0, b0, prior, rng):
    """Draw (mu, sigma2) for every component from its NIG full conditional."""
    q = X.shape[1]
    onehot = np.zeros((X.shape[0], L))
    onehot[np.arange(X.shape[0]), z] = 1.0
    nk = onehot.sum(axis=0)
    sums = onehot.T @ X
    with np.errstate(invalid="ignore", divide="ignore"):
        xbar = np.where(nk[:, None] > 0, sums / np.maximum(nk, 1)[:, None], 0.0)
    ss = onehot.T @ (X * X) - nk[:, None] * xbar * xbar
    ss = np.maximum(ss, 0.0)
    kn = prior.kappa0 + nk[:, None]
    mn = (prior.kappa0 * m0[None, :] + sums) / kn
    an = prior.a0 + 0.5 * nk[:, None]
    bn = b0[None, :] + 0.5 * ss + 0.5 * prior.kappa0 * nk[:, None] * (xbar - m0[None, :]) ** 2 / kn
    sigma2 = bn / rng.gamma(an, 1.0, size=(L, q))
    mu = mn + np.sqrt(sigma2 / kn) * rng.standard_normal((L, q))
    return mu, sigma2, nk


def dpmm_fit(values, prior: DpmmPrior, n_iter: int, burn_in: int, rng: np.random.Generator,
             init_labels=None) -> ClusterDraws:
    """Blocked Gibbs sampler; returns post-burn-in label vectors (0-based).

    Parameters
    ----------
    values : array of shape (S, q) or (S,)
    prior : DpmmPrior
    n_iter : total Gibbs iterations
    burn_in : iterations discarded
    rng : numpy Generator
    init_labels : optional starting labels in ``0..L-1``; all in one cluster otherwise
    """
    X = np.asarray(values, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if not np.all(np.isfinite(X)):
        raise ValueError("sample must be finite")
    if not 0 <= burn_in < n_iter:
        raise ValueError("need 0 <= burn_in < n_iter")
    S, q = X.shape
    L = prior.L
    m0 = X.mean(axis=0)
    var = X.var(axis=0)
    var = np.where(var > 0, var, 1.0)
    b0 = (prior.a0 - 1.0) * prior.variance_scale * var
    z = np.zeros(S, dtype=np.int64) if init_labels is None else np.asarray(init_labels, dtype=np.int64)
    kept = np.empty((n_iter - burn_in, S), dtype=np.int64)
    occupied = np.empty(n_iter - burn_in, dtype=np.int64)
    saturated = 0
    for t in range(n_iter):
        mu, sigma2, nk = _sample_theta(X, z, L, m0, b0, prior, rng)
        tail = np.concatenate((np.cumsum(nk[::-1])[::-1][1:], [0.0]))
        V = rng.beta(1.0 + nk[:-1], prior.alpha + tail[:-1])
        C = stick_breaking_weights(np.concatenate((V, [1.0])))
        with np.errstate(divide="ignore"):
            logC = np.log(C)
        diff = X[:, None, :] - mu[None, :, :]
        loglik = -0.5 * np.sum(LOG2PI + np.log(sigma2)[None] + diff * diff / sigma2[None], axis=2)
        logp = logC[None, :] + loglik
        # Gumbel-max categorical draw
        z = np.argmax(logp + rng.gumbel(size=logp.shape), axis=1)
        if t >= burn_in:
            kept[t - burn_in] = z
            k = len(np.unique(z))
            occupied[t - burn_in] = k
            saturated += k >= L
    if saturated:
        warnings.warn(f"all {L} components occupied in {saturated} iterations; increase the truncation L",
                      stacklevel=2)
    return ClusterDraws(kept, occupied)
