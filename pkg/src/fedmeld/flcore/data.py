"""Datasets: a value type plus loaders and generators.

Features are a dense (n, d) float64 array and labels an (n,) int64 array.
The quadratic family reuses the same container with rows (a, c_1..c_d)
encoding one term 0.5*a*||w - c||^2 each; its labels are all zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError, InvalidConfigError
from ..rng import substream


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    num_labels: int

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labs = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)
        if feats.ndim != 2 or feats.shape[0] == 0:
            raise InvalidConfigError("features must be a non-empty (n, d) array")
        if labs.shape != (feats.shape[0],):
            raise InvalidConfigError("labels must be (n,) aligned with features")
        if not np.all(np.isfinite(feats)):
            raise InvalidConfigError("features must be finite")
        if self.num_labels < 1:
            raise InvalidConfigError("num_labels must be >= 1")
        if labs.size and (labs.min() < 0 or labs.max() >= self.num_labels):
            raise InvalidConfigError("labels must lie in [0, num_labels)")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size == 0:
            raise InvalidArgumentError("subset must be non-empty")
        return Dataset(self.features[idx], self.labels[idx], self.num_labels)


def synthetic_gaussian(
    num_samples: int,
    num_labels: int = 3,
    dim: int = 2,
    *,
    separation: float = 4.0,
    spread: float = 1.0,
    seed: int = 0,
    test_fraction: float = 0.0,
) -> tuple[Dataset, Dataset | None]:
    """Gaussian-cluster classification data: one blob per label.

    Cluster centres sit on a circle (first two coordinates) with radius
    ``separation``; the remaining coordinates are zero-centred.  Returns
    (train, test); test is None when ``test_fraction`` is zero.
    """
    if num_samples < num_labels:
        raise InvalidConfigError("need at least one sample per label")
    if not 0.0 <= test_fraction < 1.0:
        raise InvalidConfigError("test_fraction must be in [0, 1)")
    rng = substream(seed, "synthetic-data")
    labels = np.arange(num_samples, dtype=np.int64) % num_labels
    rng.shuffle(labels)
    angles = 2.0 * np.pi * np.arange(num_labels) / num_labels
    centres = np.zeros((num_labels, dim))
    centres[:, 0] = separation * np.cos(angles)
    if dim > 1:
        centres[:, 1] = separation * np.sin(angles)
    feats = centres[labels] + spread * rng.standard_normal((num_samples, dim))
    n_test = int(round(num_samples * test_fraction))
    if n_test == 0:
        return Dataset(feats, labels, num_labels), None
    if n_test >= num_samples:
        raise InvalidConfigError("test_fraction leaves no training samples")
    train = Dataset(feats[n_test:], labels[n_test:], num_labels)
    test = Dataset(feats[:n_test], labels[:n_test], num_labels)
    return train, test


def make_quadratic_clients(
    num_areas: int,
    clients_per_area: int,
    dim: int = 1,
    *,
    seed: int = 0,
    curvature_range: tuple[float, float] = (0.5, 1.5),
    centre_range: tuple[float, float] = (-1.0, 1.0),
) -> list[list[Dataset]]:
    """Per-client single-term quadratic objectives, area-major.

    Each client j holds one row (a_j, c_j): objective 0.5*a_j*||w - c_j||^2.
    Draws are uniform, so the construction avoids libm and is bit-stable
    across platforms.
    """
    if num_areas < 1 or clients_per_area < 1 or dim < 1:
        raise InvalidConfigError("num_areas, clients_per_area and dim must be >= 1")
    a_lo, a_hi = curvature_range
    c_lo, c_hi = centre_range
    if not 0 < a_lo <= a_hi:
        raise InvalidConfigError("curvature_range must be positive and ordered")
    if c_lo > c_hi:
        raise InvalidConfigError("centre_range must be ordered")
    rng = substream(seed, "quadratic-data")
    out: list[list[Dataset]] = []
    for _ in range(num_areas):
        area = []
        for _ in range(clients_per_area):
            a = rng.uniform(a_lo, a_hi)
            c = rng.uniform(c_lo, c_hi, size=dim)
            row = np.concatenate(([a], c))[None, :]
            area.append(Dataset(row, np.zeros(1, dtype=np.int64), 1))
        out.append(area)
    return out


def load_csv(path: str | Path, num_labels: int | None = None) -> Dataset:
    """Load features/labels from CSV: feature columns then one label column."""
    path = Path(path)
    if not path.exists():
        raise InvalidConfigError(f"dataset file not found: {path}")
    rows = []
    with path.open(newline="") as fh:
        for line in csv.reader(fh):
            if not line:
                continue
            rows.append([float(v) for v in line])
    if not rows:
        raise InvalidConfigError(f"dataset file is empty: {path}")
    arr = np.asarray(rows, dtype=np.float64)
    if arr.shape[1] < 2:
        raise InvalidConfigError("need at least one feature column plus a label column")
    labels = arr[:, -1]
    if not np.allclose(labels, np.round(labels)):
        raise InvalidConfigError("label column must hold integers")
    labels = labels.astype(np.int64)
    inferred = int(labels.max()) + 1 if num_labels is None else num_labels
    return Dataset(arr[:, :-1], labels, inferred)
