"""Target distributions: potential energy functions and analytic gradients.

A target is the negative log of an unnormalized density.  Every target
exposes ``potential``, ``gradient`` and a fused ``potential_and_gradient``
that shares the expensive forward pass when both quantities are needed at
the same point.  Instances are immutable after construction, so concurrent
read-only evaluation from several threads is safe.  Likelihood sums reduce
in array row order via numpy, which keeps results deterministic for a
fixed dataset.
"""

from __future__ import annotations

import abc

import numpy as np
from scipy.special import expit


def softplus(x):
    """Overflow-safe log(1 + exp(x)), computed as max(x, 0) + log1p(exp(-|x|))."""
    x = np.asarray(x, dtype=float)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def check_point(q, dim, name="q"):
    """Coerce ``q`` to a float vector of length ``dim`` or raise ValueError."""
    q = np.asarray(q, dtype=float)
    if q.ndim != 1 or q.shape[0] != dim:
        raise ValueError(
            f"{name} must be a vector of length {dim}, got shape {q.shape}"
        )
    return q


class TargetModel(abc.ABC):
    """Potential energy U(q) and its gradient for a d-dimensional parameter."""

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        """Number of parameters."""

    @abc.abstractmethod
    def potential(self, q) -> float:
        """Negative log unnormalized density at ``q``."""

    @abc.abstractmethod
    def gradient(self, q) -> np.ndarray:
        """Gradient of the potential at ``q``."""

    def potential_and_gradient(self, q):
        """Potential and gradient together; subclasses fuse the data pass."""
        return self.potential(q), self.gradient(q)


class GaussianTarget(TargetModel):
    """Multivariate Gaussian potential U(q) = (q-mu)' P (q-mu) / 2.

    Parameters
    ----------
    precision : (d, d) array
        Symmetric positive-definite precision matrix (inverse covariance).
    mean : (d,) array, optional
        Defaults to the origin.
    """

    def __init__(self, precision, mean=None):
        precision = np.asarray(precision, dtype=float)
        if precision.ndim != 2 or precision.shape[0] != precision.shape[1]:
            raise ValueError("precision must be a square matrix")
        asym = np.max(np.abs(precision - precision.T))
        if asym > 1e-12:
            raise ValueError(f"precision matrix not symmetric (max asymmetry {asym:.3e})")
        try:
            chol = np.linalg.cholesky(precision)
        except np.linalg.LinAlgError as exc:
            raise ValueError("precision matrix is not positive definite") from exc
        self._precision = precision
        self._chol = chol
        self._dim = precision.shape[0]
        if mean is None:
            mean = np.zeros(self._dim)
        self._mean = check_point(mean, self._dim, "mean")

    @classmethod
    def from_covariance(cls, covariance, mean=None):
        covariance = np.asarray(covariance, dtype=float)
        precision = np.linalg.inv(covariance)
        return cls((precision + precision.T) / 2.0, mean)

    @classmethod
    def correlated(cls, dim, main_variance=1.0, minor_variance=0.01, mean=None):
        """Gaussian whose covariance has one wide axis along (1, ..., 1)/sqrt(d).

        The principal eigenvector is the normalized all-ones direction with
        eigenvalue ``main_variance``; every other eigenvalue equals
        ``minor_variance``, so all coordinates are strongly correlated.
        """
        u = np.ones(dim) / np.sqrt(dim)
        outer = np.outer(u, u)
        cov = main_variance * outer + minor_variance * (np.eye(dim) - outer)
        return cls.from_covariance(cov, mean)

    @property
    def dim(self):
        return self._dim

    @property
    def mean(self):
        return self._mean.copy()

    @property
    def precision(self):
        return self._precision.copy()

    @property
    def covariance(self):
        return np.linalg.inv(self._precision)

    def potential(self, q):
        q = check_point(q, self._dim)
        r = q - self._mean
        return 0.5 * float(r @ (self._precision @ r))

    def gradient(self, q):
        q = check_point(q, self._dim)
        return self._precision @ (q - self._mean)

    def potential_and_gradient(self, q):
        q = check_point(q, self._dim)
        g = self._precision @ (q - self._mean)
        return 0.5 * float((q - self._mean) @ g), g

    def sample_exact(self, rng, size):
        """Independent exact draws, for oracle comparisons."""
        z = rng.standard_normal((size, self._dim))
        # precision = L L', so covariance = L^-T L^-1 and x = mu + L^-T z
        from scipy.linalg import solve_triangular

        x = solve_triangular(self._chol.T, z.T, lower=False).T
        return self._mean + x


class BananaTarget(TargetModel):
    """Two-dimensional banana-shaped potential (twisted Gaussian).

    U(q) = q1^2 / (2 scale^2) + (q2 + bend * (q1^2 - scale^2))^2 / 2

    ``q1`` is marginally N(0, scale^2) and ``q2`` given ``q1`` is a unit
    Gaussian centered on -bend * (q1^2 - scale^2), which curves the density
    into a banana-shaped ridge.
    """

    def __init__(self, bend=0.1, scale=10.0):
        if bend < 0:
            raise ValueError("bend must be non-negative")
        if scale <= 0:
            raise ValueError("scale must be positive")
        self._bend = float(bend)
        self._scale = float(scale)

    @property
    def dim(self):
        return 2

    @property
    def bend(self):
        return self._bend

    @property
    def scale(self):
        return self._scale

    @property
    def mean(self):
        # E[q2] = -bend * (E[q1^2] - scale^2) = 0
        return np.zeros(2)

    @property
    def marginal_variance(self):
        # Var[q2] = 1 + bend^2 * Var[q1^2] = 1 + 2 bend^2 scale^4
        return np.array([self._scale**2, 1.0 + 2.0 * self._bend**2 * self._scale**4])

    def _twist(self, q1):
        return self._bend * (q1 * q1 - self._scale**2)

    def potential(self, q):
        q = check_point(q, 2)
        r = q[1] + self._twist(q[0])
        return 0.5 * float(q[0] ** 2) / self._scale**2 + 0.5 * float(r * r)

    def gradient(self, q):
        q = check_point(q, 2)
        r = q[1] + self._twist(q[0])
        return np.array(
            [q[0] / self._scale**2 + 2.0 * self._bend * q[0] * r, r]
        )

    def potential_and_gradient(self, q):
        q = check_point(q, 2)
        r = q[1] + self._twist(q[0])
        u = 0.5 * float(q[0] ** 2) / self._scale**2 + 0.5 * float(r * r)
        g = np.array([q[0] / self._scale**2 + 2.0 * self._bend * q[0] * r, r])
        return u, g

    def sample_exact(self, rng, size):
        """Ancestral exact draws: q1 first, then q2 given q1."""
        q1 = rng.standard_normal(size) * self._scale
        q2 = rng.standard_normal(size) - self._twist(q1)
        return np.column_stack([q1, q2])


class LogisticRegressionTarget(TargetModel):
    """Bayesian logistic regression posterior potential.

    U(q) = sum_i log(1 + exp(x_i' q)) - y' X q + ||q||^2 / (2 prior_variance)

    with binary responses and an isotropic Gaussian prior.  The log-sum term
    uses the overflow-safe softplus, so extreme logits stay finite.
    """

    def __init__(self, design, responses, prior_variance=100.0):
        design = np.asarray(design, dtype=float)
        responses = np.asarray(responses, dtype=float)
        if design.ndim != 2:
            raise ValueError("design must be a 2-d matrix")
        if responses.shape != (design.shape[0],):
            raise ValueError("responses length must match design rows")
        if design.shape[0] < 1:
            raise ValueError("need at least one observation")
        if not np.isfinite(design).all():
            raise ValueError("design matrix contains non-finite entries")
        if not np.isin(responses, (0.0, 1.0)).all():
            raise ValueError("responses must be 0 or 1")
        if prior_variance <= 0:
            raise ValueError("prior_variance must be positive")
        self._X = design
        self._y = responses
        self._prior_variance = float(prior_variance)

    @property
    def dim(self):
        return self._X.shape[1]

    @property
    def n_observations(self):
        return self._X.shape[0]

    @property
    def prior_variance(self):
        return self._prior_variance

    def potential(self, q):
        q = check_point(q, self.dim)
        eta = self._X @ q
        return float(
            np.sum(softplus(eta)) - self._y @ eta + q @ q / (2.0 * self._prior_variance)
        )

    def gradient(self, q):
        q = check_point(q, self.dim)
        eta = self._X @ q
        return self._X.T @ (expit(eta) - self._y) + q / self._prior_variance

    def potential_and_gradient(self, q):
        # One pass over the data: eta is computed once for both quantities.
        q = check_point(q, self.dim)
        eta = self._X @ q
        u = float(
            np.sum(softplus(eta)) - self._y @ eta + q @ q / (2.0 * self._prior_variance)
        )
        g = self._X.T @ (expit(eta) - self._y) + q / self._prior_variance
        return u, g
