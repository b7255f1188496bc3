"""Dense multivariate-normal baseline and a timing harness.

The baseline evaluates each region's likelihood as one multivariate normal
density with the full covariance ``sigma2_s * W_s^{-1}`` (scipy, Cholesky
based), the way a non-factorised implementation would.  It plugs into the
same sampler, so the two chains differ only in how the likelihood is
computed.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import multivariate_normal

from .bgwr import BgwrConfig, LocalModel, _run_chain, check_model, initial_state
from .geometry import distances as compute_distances


def dense_mvn_loglik(y, X, beta_s, sigma2_s, weights) -> float:
    """``log N(y | X beta_s, sigma2_s * diag(1 / w))`` over positive weights."""
    w = np.asarray(weights, dtype=float)
    pos = w > 0
    cov = np.diag(sigma2_s / w[pos])
    return float(multivariate_normal.logpdf(np.asarray(y)[pos], mean=np.asarray(X)[pos] @ beta_s, cov=cov))


class DenseMvnModel(LocalModel):
    """LocalModel whose region likelihoods go through dense covariance matrices."""

    def region_loglik(self, resid, sigma2, wc):
        out = np.empty(self.S)
        for s in range(self.S):
            pos = wc.W[s] > 0
            cov = np.diag(sigma2[s] / wc.W[s, pos])
            out[s] = multivariate_normal.logpdf(resid[s, pos], mean=np.zeros(pos.sum()), cov=cov)
        return out


@dataclass(frozen=True)
class TimingResult:
    vectorized_seconds: float
    dense_seconds: float
    n_sweeps: int
    max_abs_loglik_diff: float

    @property
    def speedup(self) -> float:
        return self.dense_seconds / self.vectorized_seconds


def time_chain(model: LocalModel, frame, config: BgwrConfig) -> float:
    state = initial_state(model, config)
    check_model(model, frame, state.bandwidth)
    t0 = time.perf_counter()
    _run_chain(model, state, config, frame)
    return time.perf_counter() - t0


def compare_samplers(data, frame, kernel, n_sweeps: int = 200, seed: int = 0, metric: str = "euclidean",
                     config: BgwrConfig | None = None) -> TimingResult:
    """Time ``n_sweeps`` sweeps of the vectorized and dense samplers on the same problem.

    Also reports the largest absolute difference between the two region
    log-likelihood vectors at the starting state.
    """
    dist = compute_distances(frame, metric)
    base = config or BgwrConfig()
    cfg = replace(base, n_iter=n_sweeps, burn_in=n_sweeps // 2, seed=seed)
    fast = LocalModel(data, dist, kernel)
    dense = DenseMvnModel(data, dist, kernel)
    st = initial_state(fast, cfg)
    wc = fast.weights(st.bandwidth)
    resid = fast.residuals(st.beta)
    diff = float(np.max(np.abs(fast.region_loglik(resid, st.sigma2, wc)
                                - dense.region_loglik(resid, st.sigma2, wc))))
    return TimingResult(time_chain(fast, frame, cfg), time_chain(dense, frame, cfg), n_sweeps, diff)
