"""Dataset containers, synthetic data generation and CSV input/output."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with a matching label vector.

    ``standardized`` records whether the feature columns have been centered
    and scaled to unit standard deviation (constant columns map to zero).
    """

    features: np.ndarray
    labels: np.ndarray
    standardized: bool = False

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=float)
        if features.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels length must match feature rows")
        if features.shape[0] < 1:
            raise ValueError("dataset needs at least one row")
        if not np.isfinite(features).all():
            raise ValueError("features contain non-finite values")
        if not np.isfinite(labels).all():
            raise ValueError("labels contain non-finite values")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]


def standardize_dataset(dataset):
    """Center each feature column and scale it to unit standard deviation.

    Columns with (numerically) zero variance cannot be scaled; they are
    mapped to all zeros and a warning is emitted.  The operation is
    idempotent up to floating-point roundoff.
    """
    x = dataset.features.copy()
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    # Constant columns leave roundoff-sized residual std; treat as zero.
    constant = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    if constant.any():
        warnings.warn(
            f"zero-variance feature column(s) {np.flatnonzero(constant).tolist()} "
            "standardized to all zeros",
            stacklevel=2,
        )
    safe_std = np.where(constant, 1.0, std)
    x = (x - mean) / safe_std
    x[:, constant] = 0.0
    return replace(dataset, features=x, standardized=True)


def generate_lr_data(dim, n_observations, seed):
    """Synthetic logistic-regression benchmark data.

    The design matrix is (0.1 * ones, X1) with X1 ~ N(0, I/100); the true
    coefficient vector is drawn uniformly from [0, 1]^dim and binary labels
    are Bernoulli with success probability sigmoid(x_i' beta).  Fully
    deterministic for a fixed seed.

    Returns
    -------
    (Dataset, ndarray)
        The dataset and the true coefficient vector used to simulate it.
    """
    if dim < 2:
        raise ValueError("dim must be at least 2")
    if n_observations < 1:
        raise ValueError("n_observations must be positive")
    rng = np.random.default_rng(seed)
    beta = rng.uniform(0.0, 1.0, size=dim)
    x_rest = rng.normal(0.0, 0.1, size=(n_observations, dim - 1))
    design = np.column_stack([np.full(n_observations, 0.1), x_rest])
    probs = expit(design @ beta)
    labels = (rng.uniform(size=n_observations) < probs).astype(float)
    return Dataset(design, labels), beta


def load_csv_dataset(path, label_column, standardize=False):
    """Read a comma-delimited numeric table with a header row.

    Parameters
    ----------
    path : str or Path
        UTF-8 CSV file, '.' decimal separator.
    label_column : str
        Header name of the label column; remaining columns become features.
    standardize : bool
        Apply :func:`standardize_dataset` after loading.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: file is empty") from None
        header = [name.strip() for name in header]
        if label_column not in header:
            raise ValueError(
                f"{path}: label column {label_column!r} not found; "
                f"columns are {header}"
            )
        label_idx = header.index(label_column)
        if len(header) < 2:
            raise ValueError(f"{path}: need at least one feature column")
        rows = []
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: row {row_number} has {len(row)} cells, "
                    f"expected {len(header)}"
                )
            parsed = []
            for name, cell in zip(header, row):
                try:
                    value = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: row {row_number}, column {name!r}: "
                        f"non-numeric cell {cell!r}"
                    ) from None
                if not np.isfinite(value):
                    raise ValueError(
                        f"{path}: row {row_number}, column {name!r}: "
                        f"non-finite value {cell!r}"
                    )
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    table = np.asarray(rows, dtype=float)
    labels = table[:, label_idx]
    features = np.delete(table, label_idx, axis=1)
    dataset = Dataset(features, labels)
    if standardize:
        dataset = standardize_dataset(dataset)
    return dataset


def save_csv_dataset(dataset, path, label_name="label", feature_names=None):
    """Write a dataset as CSV with full float precision (round-trip exact)."""
    if feature_names is None:
        feature_names = [f"x_{i + 1}" for i in range(dataset.n_features)]
    if len(feature_names) != dataset.n_features:
        raise ValueError("feature_names length must match feature columns")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(feature_names) + [label_name])
        for x, y in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])
