import numpy as np
import pytest

from convexattn.numutil import RngStream, gauss_sample, svd_thin, uniform_sample


def test_svd_identity():
    U, s, V = svd_thin(np.eye(2))
    assert np.allclose(s, [1.0, 1.0])


def test_svd_diagonal():
    U, s, V = svd_thin(np.diag([3.0, 1.0]))
    assert np.allclose(s, [3.0, 1.0])


def test_svd_reconstruction_and_gram_oracle():
    rng = np.random.default_rng(42)
    M = rng.normal(size=(40, 9))
    U, s, V = svd_thin(M)
    R = (U * s) @ V.T
    assert np.linalg.norm(R - M) <= 1e-9 * max(1.0, np.linalg.norm(M))
    # independent oracle: singular values from eigenvalues of M^T M
    ev = np.sort(np.linalg.eigvalsh(M.T @ M))[::-1]
    assert np.allclose(s, np.sqrt(np.maximum(ev, 0.0)), atol=1e-8)


def test_svd_properties_random_sizes():
    rng = np.random.default_rng(0)
    for _ in range(20):
        r, c = rng.integers(1, 129, size=2)
        M = rng.normal(size=(r, c))
        U, s, V = svd_thin(M)
        assert np.all(np.diff(s) <= 1e-12)
        assert np.all(s >= 0)
        assert np.linalg.norm((U * s) @ V.T - M) <= 1e-9 * max(1.0, np.linalg.norm(M))
        k = min(r, c)
        assert np.allclose(U.T @ U, np.eye(k), atol=1e-9)
        assert np.allclose(V.T @ V, np.eye(k), atol=1e-9)
        # nuclear norm consistent with the Gram-eigenvalue oracle
        ev = np.maximum(np.linalg.eigvalsh(M.T @ M if c <= r else M @ M.T), 0.0)
        assert abs(s.sum() - np.sqrt(ev).sum()) <= 1e-8 * max(1.0, s.sum())


def test_svd_rejects_nonfinite():
    with pytest.raises(ValueError):
        svd_thin(np.array([[1.0, np.nan]]))


def test_gauss_clt_bound():
    x = gauss_sample(RngStream(1), 10000, 0.0, 1.0)
    assert -0.05 <= x.mean() <= 0.05
    assert x.shape == (10000,)


def test_gauss_single_value():
    x = gauss_sample(RngStream(9), 1, 3.0, 0.5)
    assert x.shape == (1,) and np.isfinite(x[0])


def test_gauss_rejects_bad_stddev():
    with pytest.raises(ValueError):
        gauss_sample(RngStream(0), 10, 0.0, 0.0)


def test_uniform_range_and_mean():
    x = uniform_sample(RngStream(3), 1000, 0.0, 2 * np.pi)
    assert np.all((x >= 0) & (x < 2 * np.pi))
    y = uniform_sample(RngStream(4), 100000, 0.0, 1.0)
    assert 0.49 <= y.mean() <= 0.51


def test_uniform_rejects_bad_range():
    with pytest.raises(ValueError):
        uniform_sample(RngStream(0), 5, 1.0, 1.0)


def test_rng_reproducible():
    a = RngStream(42)
    b = RngStream(42)
    assert np.array_equal(a.gauss(100), b.gauss(100))
    assert np.array_equal(a.uniform(100), b.uniform(100))


def test_derived_streams_differ():
    root = RngStream(7)
    assert not np.array_equal(root.derive(1).gauss(10), root.derive(2).gauss(10))
    # deriving is itself reproducible
    assert np.array_equal(RngStream(7).derive(1).gauss(10), RngStream(7).derive(1).gauss(10))
