"""Incremental minimum-norm least squares via pseudoinverse recursion.

Maintains the current estimator together with two auxiliary matrices:

    phi   = I - H' (H')^+   (projector onto the null space of H)
    theta = H^+ (H^+)'

so that appending one feature row costs O(m^2) regardless of how many rows
have been absorbed.  A new row h either lies in the row space of H
(phi h ~ 0, the rank-preserving branch) or extends it (the rank-growing
branch); the two branches update the auxiliaries differently but both end
with the same rank-one estimator correction.

Updates are single-writer: callers serialize them, and readers take
snapshots of the weights (the ``weights`` property returns a copy).
"""

from __future__ import annotations

import json

import numpy as np


def _pinv_rcond(shape):
    return np.finfo(float).eps * max(shape)


class OnlineLeastSquares:
    """Minimum-norm least-squares estimator with O(m^2) row updates.

    Parameters
    ----------
    n_features : int
        Number of columns m of the (growing) feature matrix.
    null_threshold : float
        The exact rank test "phi h = 0" is replaced by
        ||phi h||^2 <= null_threshold * ||h||^2; floating point never
        produces exact zeros, so the threshold sits near the machine
        precision scale of the projector.
    recheck_interval : int
        Every this many updates, the projector residual ||phi^2 - phi||_F
        is measured and the state is rebuilt from the retained rows if it
        drifted past ``drift_tolerance``.  Row retention is therefore
        mandatory.
    """

    def __init__(
        self,
        n_features,
        null_threshold=1e-10,
        recheck_interval=500,
        drift_tolerance=1e-6,
    ):
        self.n_features = int(n_features)
        self.null_threshold = float(null_threshold)
        self.recheck_interval = int(recheck_interval)
        self.drift_tolerance = float(drift_tolerance)
        # Empty-data convention: zero estimator, full null space, zero theta.
        self._weights = np.zeros(self.n_features)
        self._phi = np.eye(self.n_features)
        self._theta = np.zeros((self.n_features, self.n_features))
        self._count = 0
        self._rows = []
        self._targets = []

    @classmethod
    def from_batch(cls, rows, targets, **kwargs):
        """One-off batch initialization from existing rows (SVD, cubic in m)."""
        rows = np.asarray(rows, dtype=float)
        targets = np.asarray(targets, dtype=float)
        if rows.ndim != 2 or targets.shape != (rows.shape[0],):
            raise ValueError("rows must be (k, m) with targets of length k")
        if not (np.isfinite(rows).all() and np.isfinite(targets).all()):
            raise ValueError("batch initialization requires finite inputs")
        state = cls(rows.shape[1], **kwargs)
        if rows.shape[0] == 0:
            return state
        state._init_from(rows, targets)
        state._rows = [np.array(r) for r in rows]
        state._targets = list(map(float, targets))
        return state

    def _init_from(self, rows, targets):
        pinv = np.linalg.pinv(rows, rcond=_pinv_rcond(rows.shape))
        self._weights = pinv @ targets
        projector = pinv @ rows  # symmetric projector onto the row space
        self._phi = np.eye(self.n_features) - (projector + projector.T) / 2.0
        theta = pinv @ pinv.T
        self._theta = (theta + theta.T) / 2.0
        self._count = rows.shape[0]

    @property
    def count(self):
        return self._count

    @property
    def weights(self):
        """Snapshot of the current estimator (a copy; safe to publish)."""
        return self._weights.copy()

    @property
    def phi(self):
        return self._phi.copy()

    @property
    def theta(self):
        return self._theta.copy()

    def update(self, row, target):
        """Absorb one (feature row, target) pair.

        Cost is O(m^2), independent of how many rows came before.
        """
        h = np.asarray(row, dtype=float)
        if h.shape != (self.n_features,):
            raise ValueError(f"row must have length {self.n_features}")
        t = float(target)
        if not (np.isfinite(h).all() and np.isfinite(t)):
            raise ValueError("update requires finite inputs")
        c = self._phi @ h
        c_sq = float(c @ c)
        h_sq = float(h @ h)
        theta_h = self._theta @ h
        if c_sq <= self.null_threshold * h_sq:
            # Row already in the row space: rank unchanged.
            b = theta_h / (1.0 + float(h @ theta_h))
            self._theta = self._theta - np.outer(theta_h, b)
        else:
            b = c / c_sq
            self._phi = self._phi - np.outer(self._phi @ h, b)
            self._theta = (
                self._theta
                - np.outer(theta_h, b)
                + (1.0 + float(h @ theta_h)) * np.outer(b, b)
                - np.outer(b, self._theta.T @ h)
            )
        # Keep the auxiliaries symmetric against roundoff accumulation.
        self._theta = (self._theta + self._theta.T) / 2.0
        self._weights = self._weights + (t - float(h @ self._weights)) * b
        self._count += 1
        self._rows.append(np.array(h))
        self._targets.append(t)
        if self.recheck_interval > 0 and self._count % self.recheck_interval == 0:
            self._check_drift()
        return self

    def projector_residual(self):
        """Frobenius norm of phi^2 - phi (zero for an exact projector)."""
        return float(np.linalg.norm(self._phi @ self._phi - self._phi))

    def _check_drift(self):
        if self.projector_residual() > self.drift_tolerance:
            rows = np.array(self._rows)
            targets = np.array(self._targets)
            self._init_from(rows, targets)

    def to_dict(self):
        """Checkpoint container (extends the surrogate container fields)."""
        return {
            "format": "surrhmc/online-least-squares",
            "version": 1,
            "n_features": self.n_features,
            "weights": self._weights.tolist(),
            "phi": self._phi.tolist(),
            "theta": self._theta.tolist(),
            "count": self._count,
            "rows": [r.tolist() for r in self._rows],
            "row_targets": self._targets,
            "null_threshold": self.null_threshold,
            "recheck_interval": self.recheck_interval,
            "drift_tolerance": self.drift_tolerance,
        }

    @classmethod
    def from_dict(cls, payload):
        if payload.get("format") != "surrhmc/online-least-squares":
            raise ValueError("not an online-least-squares container")
        if payload.get("version") != 1:
            raise ValueError(f"unsupported container version {payload.get('version')!r}")
        state = cls(
            payload["n_features"],
            null_threshold=payload["null_threshold"],
            recheck_interval=payload["recheck_interval"],
            drift_tolerance=payload["drift_tolerance"],
        )
        state._weights = np.asarray(payload["weights"], dtype=float)
        state._phi = np.asarray(payload["phi"], dtype=float)
        state._theta = np.asarray(payload["theta"], dtype=float)
        state._count = int(payload["count"])
        state._rows = [np.asarray(r, dtype=float) for r in payload["rows"]]
        state._targets = list(map(float, payload["row_targets"]))
        return state

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
