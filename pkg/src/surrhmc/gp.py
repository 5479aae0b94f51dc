"""Gaussian-process surrogate baseline with squared-exponential kernel.

Fitting solves an N x N linear system (cubic in the number of training
points), which is exactly the cost profile the random-feature surrogate
avoids; the GP is kept as a reference surrogate and for the
kernel-network equivalence: an rbf network whose nodes are the kernel
functions at the training points, fit with the generalized ridge penalty
noise_variance * v' K v, reproduces the GP predictive mean.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .surrogates import HiddenNodes, SurrogatePotential, median_pairwise_distance
from .targets import check_point


def squared_exponential_kernel(a, b, signal_variance, length_scale):
    sq = cdist(np.atleast_2d(a), np.atleast_2d(b), "sqeuclidean")
    return signal_variance * np.exp(-sq / (2.0 * length_scale**2))


class GaussianProcessSurrogate(BaseEstimator, RegressorMixin):
    """GP regression predictive mean, with its analytic gradient.

    Parameters
    ----------
    signal_variance : float
        Kernel amplitude sigma_f^2.
    length_scale : float or None
        Kernel length scale; None picks the median pairwise distance of the
        training points at fit time.
    noise_variance : float
        Observation noise added to the kernel diagonal.
    """

    def __init__(self, signal_variance=1.0, length_scale=None, noise_variance=1e-6):
        self.signal_variance = signal_variance
        self.length_scale = length_scale
        self.noise_variance = noise_variance

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        if self.signal_variance <= 0 or self.noise_variance < 0:
            raise ValueError("signal_variance must be > 0 and noise_variance >= 0")
        scale = self.length_scale
        if scale is None:
            scale = median_pairwise_distance(X)
        if scale <= 0:
            raise ValueError("length_scale must be positive")
        K = squared_exponential_kernel(X, X, self.signal_variance, scale)
        K[np.diag_indices_from(K)] += self.noise_variance
        try:
            factor = cho_factor(K)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                "kernel matrix plus noise is not positive definite; "
                "increase noise_variance"
            ) from exc
        self.train_points_ = X
        self.length_scale_ = float(scale)
        self.alpha_ = cho_solve(factor, y)
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def dim(self):
        check_is_fitted(self, "alpha_")
        return self.n_features_in_

    def predict(self, X):
        check_is_fitted(self, "alpha_")
        X = check_array(X)
        k = squared_exponential_kernel(
            X, self.train_points_, self.signal_variance, self.length_scale_
        )
        return k @ self.alpha_

    def potential(self, q):
        check_is_fitted(self, "alpha_")
        q = check_point(q, self.n_features_in_)
        return float(self.predict(q[None, :])[0])

    def gradient(self, q):
        """Gradient of the predictive mean: sum_j alpha_j grad_q K(x_j, q)."""
        check_is_fitted(self, "alpha_")
        q = check_point(q, self.n_features_in_)
        diff = self.train_points_ - q
        k = self.signal_variance * np.exp(
            -np.sum(diff**2, axis=1) / (2.0 * self.length_scale_**2)
        )
        return (self.alpha_ * k) @ diff / self.length_scale_**2

    def potential_and_gradient(self, q):
        check_is_fitted(self, "alpha_")
        q = check_point(q, self.n_features_in_)
        diff = self.train_points_ - q
        k = self.signal_variance * np.exp(
            -np.sum(diff**2, axis=1) / (2.0 * self.length_scale_**2)
        )
        value = float(k @ self.alpha_)
        grad = (self.alpha_ * k) @ diff / self.length_scale_**2
        return value, grad

    def predict_gradient(self, X):
        check_is_fitted(self, "alpha_")
        X = check_array(X)
        return np.stack([self.gradient(q) for q in X])


def fit_kernel_network(points, values, signal_variance, length_scale, noise_variance):
    """Rbf network with one node per training point, generalized-ridge fit.

    Uses the kernel functions K(x_j, .) as hidden nodes (H = K_N) and
    minimizes ||H v - t||^2 + noise_variance * v' H v through the normal
    equations, a deliberately different linear-algebra route from the GP's
    Cholesky solve.  The resulting network evaluates through the ordinary
    feature-map path and should match the GP predictive mean.
    """
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    n = points.shape[0]
    nodes = HiddenNodes(
        kind="rbf", centers=points, widths=np.full(n, float(length_scale))
    )
    H = squared_exponential_kernel(points, points, signal_variance, length_scale)
    # Normal equations of the generalized ridge objective: (H'H + lam H) v = H't.
    lhs = H.T @ H + noise_variance * H
    rhs = H.T @ values
    v, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    # The network's features omit the signal variance, so fold it into the
    # weights; the constant feature gets weight zero (GP prior mean is 0).
    weights = np.append(signal_variance * v, 0.0)
    return SurrogatePotential(nodes=nodes, weights=weights)
