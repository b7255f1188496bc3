import numpy as np
import pytest
from scipy import stats

from bcgwr.benchmark import DenseMvnModel, compare_samplers, dense_mvn_loglik
from bcgwr.bgwr import LocalModel, local_log_likelihood
from bcgwr.geometry import euclidean_distances
from bcgwr.kernels import KernelSpec
from bcgwr.simgen import generate_flat_study


def test_dense_loglik_matches_vectorized(rng):
    for _ in range(50):
        n = rng.integers(1, 12)
        X, y, b = rng.normal(size=(n, 2)), rng.normal(size=n), rng.normal(size=2)
        w = rng.uniform(0.05, 1, n)
        assert dense_mvn_loglik(y, X, b, 1.7, w) == pytest.approx(local_log_likelihood(y, X, b, 1.7, w), abs=1e-10)


def test_dense_model_region_loglik(rng):
    ds = generate_flat_study(0)
    dist = euclidean_distances(ds.frame)
    k = KernelSpec("bisquare", 10.0)
    fast, dense = LocalModel(ds.data, dist, k), DenseMvnModel(ds.data, dist, k)
    wc = fast.weights(3.0)
    resid = fast.residuals(rng.normal(size=(64, 5)))
    s2 = rng.uniform(0.5, 2, 64)
    np.testing.assert_allclose(dense.region_loglik(resid, s2, wc), fast.region_loglik(resid, s2, wc), atol=1e-9)


def test_compare_samplers_small():
    ds = generate_flat_study(1)
    res = compare_samplers(ds.data, ds.frame, KernelSpec("exponential", 10.0), n_sweeps=4, seed=0)
    assert res.n_sweeps == 4 and res.max_abs_loglik_diff < 1e-8
    assert res.speedup > 1
