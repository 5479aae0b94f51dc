"""Gaussian-process surrogate tests and the kernel-network equivalence."""

import numpy as np
import pytest

from surrhmc import GaussianProcessSurrogate, fit_kernel_network


def finite_difference_gradient(fn, q, h=1e-5):
    q = np.asarray(q, dtype=float)
    grad = np.empty_like(q)
    for j in range(q.shape[0]):
        step = np.zeros_like(q)
        step[j] = h
        grad[j] = (fn(q + step) - fn(q - step)) / (2.0 * h)
    return grad


class TestGaussianProcessSurrogate:
    def test_interpolates_single_point(self):
        gp = GaussianProcessSurrogate(length_scale=1.0, noise_variance=1e-12)
        gp.fit(np.array([[0.5, -0.5]]), np.array([3.25]))
        assert gp.potential([0.5, -0.5]) == pytest.approx(3.25, rel=1e-9)

    def test_mean_decays_far_from_data(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(12, 2))
        y = rng.normal(size=12) + 5.0
        gp = GaussianProcessSurrogate(length_scale=0.8, noise_variance=1e-6).fit(X, y)
        far = np.array([50.0, -50.0])  # beyond 10 length scales from everything
        assert abs(gp.potential(far)) < 1e-8

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(30, 3))
        y = np.sin(X[:, 0]) + X[:, 1] ** 2
        gp = GaussianProcessSurrogate(length_scale=1.2, noise_variance=1e-4).fit(X, y)
        for q in rng.normal(size=(50, 3)):
            numeric = finite_difference_gradient(gp.potential, q)
            analytic = gp.gradient(q)
            scale = max(np.linalg.norm(numeric), 1.0)
            assert np.linalg.norm(analytic - numeric) / scale < 1e-6

    def test_median_heuristic_default(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(20, 2))
        y = rng.normal(size=20)
        gp = GaussianProcessSurrogate().fit(X, y)
        from scipy.spatial.distance import pdist

        assert gp.length_scale_ == pytest.approx(np.median(pdist(X)))

    def test_non_pd_kernel_suggests_larger_noise(self):
        X = np.zeros((5, 2))  # identical points make the kernel singular
        y = np.arange(5.0)
        gp = GaussianProcessSurrogate(length_scale=1.0, noise_variance=0.0)
        with pytest.raises(np.linalg.LinAlgError, match="noise_variance"):
            gp.fit(X, y)

    def test_fused_evaluation_consistent(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(15, 2))
        y = rng.normal(size=15)
        gp = GaussianProcessSurrogate(length_scale=1.0, noise_variance=1e-4).fit(X, y)
        q = rng.normal(size=2)
        value, grad = gp.potential_and_gradient(q)
        assert value == pytest.approx(gp.potential(q), abs=1e-14)
        assert np.allclose(grad, gp.gradient(q), atol=1e-14)

    def test_get_params(self):
        gp = GaussianProcessSurrogate(signal_variance=2.0, length_scale=0.7)
        assert gp.get_params()["signal_variance"] == 2.0


class TestKernelNetworkEquivalence:
    @pytest.mark.parametrize("signal_variance", [1.0, 2.5])
    def test_predictive_means_agree(self, signal_variance):
        # Two routes to the same estimator: the GP solves
        # (K + noise I) alpha = t by Cholesky and predicts k* . alpha; the
        # network uses kernel bases as hidden nodes and solves the
        # generalized-ridge normal equations, then evaluates through the
        # ordinary feature-map path.
        rng = np.random.default_rng(4)
        X = rng.normal(size=(20, 3))
        y = np.cos(X[:, 0]) + 0.3 * X[:, 2]
        length_scale = 1.1
        noise = 1e-2
        gp = GaussianProcessSurrogate(
            signal_variance=signal_variance,
            length_scale=length_scale,
            noise_variance=noise,
        ).fit(X, y)
        network = fit_kernel_network(X, y, signal_variance, length_scale, noise)
        test_points = rng.normal(size=(50, 3))
        gp_mean = gp.predict(test_points)
        net_mean = network.predict(test_points)
        assert np.max(np.abs(gp_mean - net_mean)) < 1e-8

    def test_gradients_agree_too(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(15, 2))
        y = rng.normal(size=15)
        gp = GaussianProcessSurrogate(
            signal_variance=1.0, length_scale=0.9, noise_variance=1e-2
        ).fit(X, y)
        network = fit_kernel_network(X, y, 1.0, 0.9, 1e-2)
        for q in rng.normal(size=(20, 2)):
            assert np.allclose(gp.gradient(q), network.gradient(q), atol=1e-8)
