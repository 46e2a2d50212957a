"""Model families: parameter layout, loss, gradient, prediction.

A family is stateless; parameters travel as flat float64 vectors so the
aggregation and dispersal code never needs to know the architecture.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from ..errors import InvalidArgumentError
from . import _backend
from .data import Dataset


@runtime_checkable
class ModelFamily(Protocol):
    """Interface every trainable family implements."""

    @property
    def dim(self) -> int: ...

    def init(self, rng: np.random.Generator) -> np.ndarray: ...

    def loss(self, w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> float: ...

    def grad(self, w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> np.ndarray: ...

    def predict(self, w: np.ndarray, features: np.ndarray) -> np.ndarray | None: ...


def _check_vector(w: np.ndarray, dim: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (dim,):
        raise InvalidArgumentError(f"parameter vector has shape {w.shape}, expected ({dim},)")
    return w


@dataclass(frozen=True)
class QuadraticFamily:
    """Deterministic scalar-field objective used for exactness tests.

    Each sample row is ``[a, c_1, ..., c_d]`` and contributes
    ``0.5 * a * ||w - c||^2``; the dataset loss is the sample mean.  Every
    operation is add/multiply only, so trajectories are bit-reproducible
    across platforms.
    """

    num_features: int = 2  # row width: curvature + d centre coordinates

    def __post_init__(self) -> None:
        if self.num_features < 2:
            raise InvalidArgumentError("quadratic rows need a curvature and one centre coordinate")

    @property
    def dim(self) -> int:
        return self.num_features - 1

    def init(self, rng: np.random.Generator) -> np.ndarray:
        del rng  # deterministic start keeps the family libm-free
        return np.zeros(self.dim, dtype=np.float64)

    def loss(self, w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> float:
        del labels
        w = _check_vector(w, self.dim)
        a = features[:, 0]
        diff = w[None, :] - features[:, 1:]
        return float(np.mean(0.5 * a * np.sum(diff * diff, axis=1)))

    def grad(self, w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
        del labels
        w = _check_vector(w, self.dim)
        a = features[:, 0]
        diff = w[None, :] - features[:, 1:]
        return np.mean(a[:, None] * diff, axis=0)

    def predict(self, w: np.ndarray, features: np.ndarray) -> np.ndarray | None:
        return None


@dataclass(frozen=True)
class LogisticFamily:
    """Multinomial logistic regression with optional l2 penalty.

    Flat layout is row-major ``(num_labels, num_features + 1)`` with the bias
    in the trailing column.
    """

    num_features: int
    num_labels: int
    l2: float = 0.0

    def __post_init__(self) -> None:
        if self.num_features < 1 or self.num_labels < 2:
            raise InvalidArgumentError("logistic model needs >=1 feature and >=2 labels")
        if not 0.0 <= self.l2 < np.inf:
            raise InvalidArgumentError("l2 must be finite and non-negative")

    @property
    def dim(self) -> int:
        return self.num_labels * (self.num_features + 1)

    def init(self, rng: np.random.Generator) -> np.ndarray:
        del rng  # zero start is the convex-problem convention
        return np.zeros(self.dim, dtype=np.float64)

    def _eval(self, w, features, labels):
        w = _check_vector(w, self.dim)
        return _backend.kernels().logistic_loss_grad(
            w, features, labels, self.num_labels, self.l2
        )

    def loss(self, w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> float:
        return self._eval(w, features, labels)[0]

    def grad(self, w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
        return self._eval(w, features, labels)[1]

    def predict(self, w: np.ndarray, features: np.ndarray) -> np.ndarray | None:
        w = _check_vector(w, self.dim)
        mat = w.reshape(self.num_labels, self.num_features + 1)
        logits = features @ mat[:, : self.num_features].T + mat[:, self.num_features]
        return np.argmax(logits, axis=1).astype(np.int64)


@dataclass(frozen=True)
class MlpFamily:
    """One-hidden-layer tanh network with softmax cross-entropy.

    Layout: ``W1 (hidden, d) | b1 (hidden) | W2 (labels, hidden) | b2 (labels)``.
    """

    num_features: int
    hidden: int
    num_labels: int
    l2: float = 0.0

    def __post_init__(self) -> None:
        if self.num_features < 1 or self.hidden < 1 or self.num_labels < 2:
            raise InvalidArgumentError("mlp needs >=1 feature, >=1 hidden unit, >=2 labels")
        if not 0.0 <= self.l2 < np.inf:
            raise InvalidArgumentError("l2 must be finite and non-negative")

    @property
    def dim(self) -> int:
        d, h, L = self.num_features, self.hidden, self.num_labels
        return h * d + h + L * h + L

    def init(self, rng: np.random.Generator) -> np.ndarray:
        # small symmetric-breaking start; scale keeps tanh out of saturation
        return 0.1 * rng.standard_normal(self.dim)

    def _eval(self, w, features, labels):
        w = _check_vector(w, self.dim)
        return _backend.kernels().mlp_loss_grad(
            w, features, labels, self.hidden, self.num_labels, self.l2
        )

    def loss(self, w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> float:
        return self._eval(w, features, labels)[0]

    def grad(self, w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
        return self._eval(w, features, labels)[1]

    def predict(self, w: np.ndarray, features: np.ndarray) -> np.ndarray | None:
        w = _check_vector(w, self.dim)
        d, h, L = self.num_features, self.hidden, self.num_labels
        w1 = w[: h * d].reshape(h, d)
        b1 = w[h * d : h * d + h]
        w2 = w[h * d + h : h * d + h + L * h].reshape(L, h)
        b2 = w[h * d + h + L * h :]
        hidden = np.tanh(features @ w1.T + b1)
        logits = hidden @ w2.T + b2
        return np.argmax(logits, axis=1).astype(np.int64)


def accuracy(family: ModelFamily, w: np.ndarray, dataset: Dataset) -> float:
    """Test accuracy, or NaN when the family does not classify."""
    pred = family.predict(w, dataset.features)
    if pred is None:
        return float("nan")
    return float(np.mean(pred == dataset.labels))
