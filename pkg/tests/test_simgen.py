import numpy as np
import pytest

from bcgwr.errors import ConfigurationError
from bcgwr.geometry import euclidean_distances
from bcgwr.simgen import (FLAT_BETA, GEORGIA_BETA, SimStudySpec, flat_frame, generate, generate_flat_study,
                          generate_georgia_study, georgia_frame, georgia_labels, spatial_covariance)


def test_flat_shape_and_geometry():
    ds = generate_flat_study(0)
    assert ds.data.n == 192 and ds.data.p == 5 and ds.frame.n_regions == 64
    assert euclidean_distances(flat_frame()).max_finite == pytest.approx(10.0, rel=1e-12)
    np.testing.assert_array_equal(ds.true_beta, np.tile(FLAT_BETA, (64, 1)))
    assert ds.true_beta[0].tolist() == [2, 0, 0, 4, 8]


def test_determinism():
    for spec in (SimStudySpec(seed=3), SimStudySpec("georgia159", 2, seed=3)):
        a, b = generate(spec), generate(spec)
        np.testing.assert_array_equal(a.data.y, b.data.y)
        np.testing.assert_array_equal(a.data.X, b.data.X)
    assert not np.array_equal(generate(SimStudySpec(seed=1)).data.y, generate(SimStudySpec(seed=2)).data.y)


def test_flat_covariate_means():
    means = np.array([generate_flat_study(s, obs_per_region=1).data.X.mean(0) for s in range(2000)])
    se = 1 / np.sqrt(64 * 2000)
    assert np.all(np.abs(means.mean(0)) < 3 * se)


def test_ols_recovers_flat_beta():
    ds = generate_flat_study(11)
    est, *_ = np.linalg.lstsq(ds.data.X, ds.data.y, rcond=None)
    assert np.all(np.abs(est - FLAT_BETA) < 0.5)


def test_georgia_blocks():
    frame = georgia_frame()
    assert frame.n_regions == 159
    lab = georgia_labels(frame)
    assert np.bincount(lab)[1:].tolist() == [51, 49, 59]
    x = frame.coords[:, 0]
    # blocks are ordered west to east
    assert x[lab == 1].max() <= x[lab == 2].min() and x[lab == 2].max() <= x[lab == 3].min()


def test_georgia_setting3_coefficients():
    ds = generate_georgia_study(3, 0)
    assert GEORGIA_BETA[3][0] == (9, 0, -4, 0, 2, 5)
    np.testing.assert_array_equal(ds.true_beta[ds.true_labels == 1][0], [9, 0, -4, 0, 2, 5])
    assert ds.data.n == 159 and ds.data.p == 6
    for k in (1, 2, 3):
        for s in range(3):
            np.testing.assert_array_equal(generate_georgia_study(s + 1, 0).true_beta[ds.true_labels == k][0],
                                          GEORGIA_BETA[s + 1][k - 1])


def test_covariance_cholesky():
    dist = euclidean_distances(georgia_frame())
    for frac in (0.05, 0.1, 0.25, 0.5, 1.0):
        C = spatial_covariance(dist, frac * dist.max_finite)
        np.testing.assert_array_equal(C, C.T)
        np.linalg.cholesky(C)


def test_covariates_spatially_correlated():
    frame = georgia_frame()
    D = euclidean_distances(frame).values
    X = np.stack([generate_georgia_study(1, s).data.X[:, 0] for s in range(300)])
    C = np.corrcoef(X.T)
    near = C[(D > 0) & (D <= 1.0 + 1e-9)].mean()
    far = C[D > 8].mean()
    assert near > far + 0.3


def test_obs_per_region():
    ds = generate_georgia_study(1, 0, obs_per_region=3)
    assert ds.data.n == 477 and np.all(np.bincount(ds.data.obs_region) == 3)


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        SimStudySpec("georgia159", 4)
    with pytest.raises(ConfigurationError):
        SimStudySpec("flat64", 1)
    with pytest.raises(ConfigurationError):
        SimStudySpec("louisiana")
