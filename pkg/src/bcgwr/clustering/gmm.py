"""Diagonal-covariance Gaussian mixtures fitted by EM, with BIC selection of K."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

VAR_FLOOR = 1e-8
LOG2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class GmmModel:
    weights: np.ndarray      # (K,)
    means: np.ndarray        # (K, q)
    variances: np.ndarray    # (K, q)
    loglik: float
    n_iter: int
    converged: bool
    floored: bool = False
    sizes: np.ndarray | None = None   # expected member counts at the fit

    def degenerate(self, min_size: float) -> bool:
        """Variance floored or a component supported by fewer than ``min_size`` items."""
        return bool(self.floored or (self.sizes is not None and self.sizes.min() < min_size))

    @property
    def K(self) -> int:
        return len(self.weights)

    @property
    def n_params(self) -> int:
        K, q = self.means.shape
        return (K - 1) + 2 * K * q

    def log_joint(self, X) -> np.ndarray:
        """(n, K) matrix of ``log alpha_k + log N(x | mu_k, diag var_k)``."""
        return np.log(self.weights)[None, :] + _component_logpdf(X, self.means, self.variances)

    def responsibilities(self, X) -> np.ndarray:
        lj = self.log_joint(X)
        return np.exp(lj - logsumexp(lj, axis=1, keepdims=True))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.log_joint(X), axis=1)

    def bic(self, n: int) -> float:
        return -2.0 * self.loglik + self.n_params * np.log(n)


def logsumexp(a, axis, keepdims=False):
    """Row log-sum-exp; scipy's version is several times slower on small arrays."""
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return out if keepdims else np.squeeze(out, axis=axis)


def _component_logpdf(X, means, variances):
    diff = X[:, None, :] - means[None, :, :]
    return -0.5 * np.sum(LOG2PI + np.log(variances)[None] + diff * diff / variances[None], axis=2)


def _as_matrix(values):
    X = np.asarray(values, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or not np.all(np.isfinite(X)):
        raise ValueError("sample must be a finite (S, q) array")
    return X


def _init_means(X, K, rng):
    """k-means++ seeding."""
    n = X.shape[0]
    idx = [int(rng.integers(n))]
    d2 = np.sum((X - X[idx[0]]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total <= 0:
            nxt = int(rng.integers(n))
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        idx.append(nxt)
        d2 = np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1))
    return X[idx].copy()


def gmm_em_fit(values, K: int, rng: np.random.Generator, max_iter: int = 500, tol: float = 1e-8,
               trace: list | None = None):
    """Fit a K-component diagonal Gaussian mixture by expectation-maximisation.

    Parameters
    ----------
    values : array of shape (S, q) or (S,)
    K : int
    rng : numpy Generator, used for k-means++ initialisation
    max_iter, tol : stopping rule on the absolute log-likelihood change
    trace : list, optional
        Receives the log-likelihood after every E-step.

    Returns
    -------
    model : GmmModel
    resp : array of shape (S, K)
    """
    X = _as_matrix(values)
    n, q = X.shape
    if K < 1:
        raise ValueError("K must be >= 1")
    if n < K:
        raise ValueError(f"need at least K={K} points, got {n}")
    total_var = np.maximum(X.var(axis=0), VAR_FLOOR)
    means = _init_means(X, K, rng)
    variances = np.tile(total_var, (K, 1))
    weights = np.full(K, 1.0 / K)
    floored = False
    prev = -np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        lj = np.log(weights)[None, :] + _component_logpdf(X, means, variances)
        norm = logsumexp(lj, axis=1, keepdims=True)
        ll = float(norm.sum())
        if trace is not None:
            trace.append(ll)
        if abs(ll - prev) < tol:
            converged = True
            break
        prev = ll
        resp = np.exp(lj - norm)
        nk = resp.sum(axis=0)
        # keep emptied components at negligible weight instead of dividing by zero
        nk_safe = np.maximum(nk, 1e-300)
        weights = np.maximum(nk / n, 1e-300)
        weights /= weights.sum()
        new_means = (resp.T @ X) / nk_safe[:, None]
        means = np.where(nk[:, None] > 0, new_means, means)
        diff = X[:, None, :] - means[None, :, :]
        new_var = np.einsum("nk,nkq->kq", resp, diff * diff) / nk_safe[:, None]
        new_var = np.where(nk[:, None] > 0, new_var, variances)
        if np.any(new_var < VAR_FLOOR):
            floored = True
        variances = np.maximum(new_var, VAR_FLOOR)
    if floored:
        log.debug("GMM K=%d: component variance floored at %g", K, VAR_FLOOR)
    model = GmmModel(weights, means, variances, ll, it, converged, floored)
    resp = model.responsibilities(X)
    model = GmmModel(weights, means, variances, ll, it, converged, floored, resp.sum(axis=0))
    return model, resp


@dataclass(frozen=True)
class GmmSelection:
    K: int
    model: GmmModel
    bic: np.ndarray          # BIC per K = 1..K_max
    labels: np.ndarray       # hard assignment under the chosen model


def gmm_select_k(values, K_max: int, restarts: int, rng: np.random.Generator, max_iter: int = 500,
                 tol: float = 1e-8, min_size: float | None = None) -> GmmSelection:
    """Fit K = 1..K_max (best of ``restarts`` each) and keep the lowest BIC.

    BIC uses the number of clustered items (regions) as its sample size.
    Fits that collapse a component onto a handful of points have unbounded
    likelihood, so a restart is admissible only if no variance was floored
    and every component carries at least ``min_size`` expected members
    (default ``q + 1``).  A K with no admissible restart gets BIC = inf.
    """
    X = _as_matrix(values)
    n = X.shape[0]
    if K_max < 1 or restarts < 1:
        raise ValueError("K_max and restarts must be >= 1")
    if K_max >= n:
        warnings.warn(f"K_max={K_max} >= number of items {n}; clamped to {n - 1}", stacklevel=2)
        K_max = max(n - 1, 1)
    if min_size is None:
        min_size = X.shape[1] + 1
    bics = np.full(K_max, np.inf)
    best_models = []
    for K in range(1, K_max + 1):
        best = None
        for _ in range(1 if K == 1 else restarts):
            m, _ = gmm_em_fit(X, K, rng, max_iter, tol)
            if K > 1 and m.degenerate(min_size):
                continue
            if best is None or m.loglik > best.loglik:
                best = m
        best_models.append(best)
        if best is not None:
            bics[K - 1] = best.bic(n)
    k = int(np.argmin(bics))
    model = best_models[k]
    return GmmSelection(k + 1, model, bics, model.predict(X))
