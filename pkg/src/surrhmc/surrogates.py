"""Random-feature surrogates of the potential energy.

A surrogate is a single hidden layer of randomly drawn, frozen nodes with
output weights fit by (regularized) least squares.  Evaluating the
surrogate or its gradient costs O(n_hidden) independent of the size of the
data behind the true potential, which is what makes it useful as a cheap
proposal-generating stand-in inside a sampler.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist, pdist
from scipy.special import expit
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .targets import check_point, softplus

NODE_KINDS = ("additive", "rbf")

SERIAL_FORMAT = "surrhmc/surrogate"
SERIAL_VERSION = 1


def as_generator(seed_or_rng):
    """Accept an int seed, a Generator, or None and return a Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


@dataclass(frozen=True)
class HiddenNodes:
    """Frozen random hidden-node parameters.

    Additive nodes apply softplus(w_i . q + d_i); rbf nodes apply
    exp(-||q - c_i||^2 / (2 l_i^2)).  Exactly one parameter pair is set
    depending on ``kind``.
    """

    kind: str
    weights: np.ndarray | None = None
    biases: np.ndarray | None = None
    centers: np.ndarray | None = None
    widths: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise ValueError(f"unknown node kind {self.kind!r}")
        if self.kind == "additive":
            if self.weights is None or self.biases is None:
                raise ValueError("additive nodes need weights and biases")
            w = np.asarray(self.weights, dtype=float)
            b = np.asarray(self.biases, dtype=float)
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError("weights must be (s, d) with biases of length s")
            if w.shape[0] < 1:
                raise ValueError("need at least one hidden node")
            object.__setattr__(self, "weights", w)
            object.__setattr__(self, "biases", b)
        else:
            if self.centers is None or self.widths is None:
                raise ValueError("rbf nodes need centers and widths")
            c = np.asarray(self.centers, dtype=float)
            l = np.asarray(self.widths, dtype=float)
            if c.ndim != 2 or l.shape != (c.shape[0],):
                raise ValueError("centers must be (s, d) with widths of length s")
            if c.shape[0] < 1:
                raise ValueError("need at least one hidden node")
            if not (l > 0).all():
                raise ValueError("rbf widths must be strictly positive")
            object.__setattr__(self, "centers", c)
            object.__setattr__(self, "widths", l)

    @property
    def n_hidden(self):
        if self.kind == "additive":
            return self.weights.shape[0]
        return self.centers.shape[0]

    @property
    def dim(self):
        if self.kind == "additive":
            return self.weights.shape[1]
        return self.centers.shape[1]


class TrainingSet:
    """Ordered (point, value) pairs collected from a chain.

    Duplicates are allowed: chains revisit states after rejections.
    """

    def __init__(self, dim):
        self._dim = int(dim)
        self._points = []
        self._values = []

    @classmethod
    def from_arrays(cls, points, values):
        points = np.asarray(points, dtype=float)
        values = np.asarray(values, dtype=float)
        if points.ndim != 2 or values.shape != (points.shape[0],):
            raise ValueError("points must be (N, d) with values of length N")
        ts = cls(points.shape[1])
        for q, t in zip(points, values):
            ts.append(q, t)
        return ts

    def append(self, q, value):
        q = check_point(q, self._dim)
        value = float(value)
        if not np.isfinite(value):
            raise ValueError("training value must be finite")
        self._points.append(np.array(q))
        self._values.append(value)

    def __len__(self):
        return len(self._points)

    @property
    def dim(self):
        return self._dim

    @property
    def points(self):
        return np.array(self._points).reshape(len(self._points), self._dim)

    @property
    def values(self):
        return np.array(self._values)


def median_pairwise_distance(points, rng=None, max_points=500):
    """Median pairwise distance over (a subsample of) the given points."""
    points = np.asarray(points, dtype=float)
    if points.shape[0] > max_points:
        rng = as_generator(rng)
        idx = rng.choice(points.shape[0], size=max_points, replace=False)
        points = points[idx]
    if points.shape[0] < 2:
        raise ValueError("need at least two points for the median heuristic")
    return float(np.median(pdist(points)))


def sample_hidden_nodes(kind, n_hidden, dim, rng, preview_points=None):
    """Draw hidden-node parameters once; they stay frozen afterwards.

    Additive nodes draw rows w_i ~ N(0, I/dim) with biases uniform on
    [-1, 1], keeping pre-activations O(1) across dimensions.  Rbf nodes
    take centers from ``preview_points`` (without replacement unless
    n_hidden exceeds the preview size) and share a common width set by the
    median pairwise distance of a 500-point subsample.
    """
    if n_hidden < 1:
        raise ValueError("n_hidden must be at least 1")
    rng = as_generator(rng)
    if kind == "additive":
        weights = rng.normal(0.0, np.sqrt(1.0 / dim), size=(n_hidden, dim))
        biases = rng.uniform(-1.0, 1.0, size=n_hidden)
        return HiddenNodes(kind="additive", weights=weights, biases=biases)
    if kind == "rbf":
        if preview_points is None or len(preview_points) == 0:
            raise ValueError("rbf nodes need non-empty preview points for centers")
        preview = np.asarray(preview_points, dtype=float)
        if preview.ndim != 2 or preview.shape[1] != dim:
            raise ValueError("preview points must be (N, dim)")
        n_preview = preview.shape[0]
        idx = rng.choice(n_preview, size=n_hidden, replace=n_hidden > n_preview)
        centers = preview[idx]
        width = median_pairwise_distance(preview, rng=rng)
        if width <= 0:
            raise ValueError("preview points have zero median pairwise distance")
        return HiddenNodes(kind="rbf", centers=centers, widths=np.full(n_hidden, width))
    raise ValueError(f"unknown node kind {kind!r}")


def feature_map(nodes, q):
    """Hidden-layer features at one point, with a trailing constant 1.

    The constant column lets the output bias be learned as an ordinary
    weight by the same least-squares solve.
    """
    q = check_point(q, nodes.dim)
    if nodes.kind == "additive":
        a = softplus(nodes.weights @ q + nodes.biases)
    else:
        sq = np.sum((nodes.centers - q) ** 2, axis=1)
        a = np.exp(-sq / (2.0 * nodes.widths**2))
    return np.append(a, 1.0)


def feature_matrix(nodes, points):
    """Stacked feature rows for many points: shape (N, n_hidden + 1)."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != nodes.dim:
        raise ValueError(f"points must be (N, {nodes.dim})")
    if nodes.kind == "additive":
        a = softplus(points @ nodes.weights.T + nodes.biases)
    else:
        sq = cdist(points, nodes.centers, "sqeuclidean")
        a = np.exp(-sq / (2.0 * nodes.widths**2))
    return np.column_stack([a, np.ones(points.shape[0])])


def solve_output_weights(H, targets, ridge=0.0):
    """Least-squares output weights for a feature matrix.

    With ridge = 0 this is the minimum-norm solution H^+ targets, computed
    by SVD with singular values below eps * max(N, m) * s_max treated as
    zero.  With ridge > 0 it minimizes ||Hw - t||^2 + ridge * ||w||^2.
    """
    H = np.asarray(H, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if H.ndim != 2 or targets.shape != (H.shape[0],):
        raise ValueError("H must be (N, m) with targets of length N")
    bad_rows = ~np.isfinite(H).all(axis=1)
    if bad_rows.any():
        raise ValueError(
            f"non-finite feature values for training point {int(np.flatnonzero(bad_rows)[0])}"
        )
    bad = ~np.isfinite(targets)
    if bad.any():
        raise ValueError(
            f"non-finite target value for training point {int(np.flatnonzero(bad)[0])}"
        )
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    if ridge == 0.0:
        weights, *_ = np.linalg.lstsq(H, targets, rcond=None)
        return weights
    gram = H.T @ H
    gram[np.diag_indices_from(gram)] += ridge
    try:
        factor = cho_factor(gram)
        return cho_solve(factor, H.T @ targets)
    except np.linalg.LinAlgError:
        # Ill-conditioned Gram matrix: fall back to the stacked SVD route.
        m = H.shape[1]
        aug = np.vstack([H, np.sqrt(ridge) * np.eye(m)])
        rhs = np.concatenate([targets, np.zeros(m)])
        weights, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
        return weights


@dataclass(frozen=True)
class SurrogatePotential:
    """Trained surrogate: frozen nodes plus fitted output weights.

    ``weights`` has length n_hidden + 1; the last entry is the output bias
    (the weight of the constant feature).  Exposes the same
    potential/gradient interface as a target model, so samplers can use it
    as a drop-in gradient source.
    """

    nodes: HiddenNodes
    weights: np.ndarray
    ridge: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.nodes.n_hidden + 1,):
            raise ValueError(
                f"weights must have length {self.nodes.n_hidden + 1}, got {w.shape}"
            )
        if not np.isfinite(w).all():
            raise ValueError("weights must be finite")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self):
        return self.nodes.dim

    @property
    def output_weights(self):
        return self.weights[:-1]

    @property
    def output_bias(self):
        return float(self.weights[-1])

    def potential(self, q):
        return float(feature_map(self.nodes, q) @ self.weights)

    def gradient(self, q):
        q = check_point(q, self.dim)
        v = self.weights[:-1]
        if self.nodes.kind == "additive":
            act = expit(self.nodes.weights @ q + self.nodes.biases)
            return (v * act) @ self.nodes.weights
        diff = self.nodes.centers - q
        sq = np.sum(diff**2, axis=1)
        act = np.exp(-sq / (2.0 * self.nodes.widths**2))
        return (v * act / self.nodes.widths**2) @ diff

    def potential_and_gradient(self, q):
        q = check_point(q, self.dim)
        v = self.weights[:-1]
        if self.nodes.kind == "additive":
            pre = self.nodes.weights @ q + self.nodes.biases
            value = float(softplus(pre) @ v + self.weights[-1])
            grad = (v * expit(pre)) @ self.nodes.weights
            return value, grad
        diff = self.nodes.centers - q
        sq = np.sum(diff**2, axis=1)
        act = np.exp(-sq / (2.0 * self.nodes.widths**2))
        value = float(act @ v + self.weights[-1])
        grad = (v * act / self.nodes.widths**2) @ diff
        return value, grad

    def predict(self, points):
        return feature_matrix(self.nodes, points) @ self.weights


def fit_surrogate(nodes, points, values, ridge=0.0):
    """Fit output weights for frozen nodes on (points, values) pairs."""
    H = feature_matrix(nodes, points)
    weights = solve_output_weights(H, values, ridge=ridge)
    return SurrogatePotential(nodes=nodes, weights=weights, ridge=float(ridge))


def potential_matching_distance(surrogate, points, values):
    """Shift-invariant mean-square mismatch between surrogate and targets.

    This is the variance of the residuals z(q_n) - t_n, i.e. the squared
    distance already minimized over a free additive constant, so adding the
    same offset to every target leaves it unchanged.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] < 2:
        raise ValueError("need at least two points")
    residuals = surrogate.predict(points) - values
    return float(np.var(residuals))


class RandomFeatureSurrogate(BaseEstimator, RegressorMixin):
    """Scikit-learn style regressor wrapping the random-feature surrogate.

    Parameters
    ----------
    n_hidden : int
        Number of random hidden nodes.
    node_kind : {'additive', 'rbf'}
        Additive softplus ridges (default; good global shape) or Gaussian
        bumps centered on training points (good local detail).
    ridge : float
        L2 penalty on the output weights; 0 gives the minimum-norm
        least-squares solution.
    random_state : int, Generator or None
        Seed for the one-time node draw.
    """

    def __init__(self, n_hidden=100, node_kind="additive", ridge=1e-6, random_state=None):
        self.n_hidden = n_hidden
        self.node_kind = node_kind
        self.ridge = ridge
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        rng = as_generator(self.random_state)
        self.nodes_ = sample_hidden_nodes(
            self.node_kind, self.n_hidden, X.shape[1], rng, preview_points=X
        )
        self.model_ = fit_surrogate(self.nodes_, X, y, ridge=self.ridge)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        return self.model_.predict(X)

    def predict_gradient(self, X):
        """Gradient of the fitted surrogate at each row of X."""
        check_is_fitted(self, "model_")
        X = check_array(X)
        return np.stack([self.model_.gradient(q) for q in X])

    def to_potential(self):
        """The underlying immutable SurrogatePotential."""
        check_is_fitted(self, "model_")
        return self.model_


def _nodes_to_dict(nodes):
    if nodes.kind == "additive":
        return {
            "kind": "additive",
            "weights": nodes.weights.tolist(),
            "biases": nodes.biases.tolist(),
        }
    return {
        "kind": "rbf",
        "centers": nodes.centers.tolist(),
        "widths": nodes.widths.tolist(),
    }


def _nodes_from_dict(payload):
    if payload["kind"] == "additive":
        return HiddenNodes(
            kind="additive",
            weights=np.asarray(payload["weights"], dtype=float),
            biases=np.asarray(payload["biases"], dtype=float),
        )
    return HiddenNodes(
        kind="rbf",
        centers=np.asarray(payload["centers"], dtype=float),
        widths=np.asarray(payload["widths"], dtype=float),
    )


def surrogate_to_dict(model, seed=None):
    """Versioned JSON-ready container; floats survive round-trip exactly."""
    return {
        "format": SERIAL_FORMAT,
        "version": SERIAL_VERSION,
        "kind": model.nodes.kind,
        "n_hidden": model.nodes.n_hidden,
        "dim": model.nodes.dim,
        "nodes": _nodes_to_dict(model.nodes),
        "weights": model.weights.tolist(),
        "ridge": model.ridge,
        "seed": seed,
    }


def surrogate_from_dict(payload):
    if payload.get("format") != SERIAL_FORMAT:
        raise ValueError(f"not a surrogate container: format={payload.get('format')!r}")
    if payload.get("version") != SERIAL_VERSION:
        raise ValueError(f"unsupported container version {payload.get('version')!r}")
    nodes = _nodes_from_dict(payload["nodes"])
    return SurrogatePotential(
        nodes=nodes,
        weights=np.asarray(payload["weights"], dtype=float),
        ridge=float(payload["ridge"]),
    )


def save_surrogate(path, model, seed=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(surrogate_to_dict(model, seed=seed), fh)


def load_surrogate(path):
    with open(path, encoding="utf-8") as fh:
        return surrogate_from_dict(json.load(fh))
