"""Local training loop, aggregation, sampling, and global objectives."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import InvalidArgumentError, NumericError
from .data import Dataset
from .models import ModelFamily


@dataclass(frozen=True)
class LrSchedule:
    """Decaying step size eta_t = beta / (gamma + t).

    beta and gamma are pinned to the strongly-convex analysis: beta = 5/mu and
    gamma = max(8*L/mu, E) - 1 guarantee eta_t <= 2*eta_{t+E} for every t >= 1.
    The companion claim eta_1 <= 1/(4L) additionally needs E >= 20*L/mu; the
    schedule is still well defined below that, it just starts hotter.
    """

    mu: float
    l_smooth: float
    E: int
    beta: float = field(init=False)
    gamma: float = field(init=False)

    def __post_init__(self) -> None:
        if not (0.0 < self.mu <= self.l_smooth):
            raise InvalidArgumentError("need 0 < mu <= L")
        if self.E < 1:
            raise InvalidArgumentError("E must be >= 1")
        object.__setattr__(self, "beta", 5.0 / self.mu)
        object.__setattr__(self, "gamma", max(8.0 * self.l_smooth / self.mu, float(self.E)) - 1.0)

    def eta(self, t: int) -> float:
        if t < 1:
            raise InvalidArgumentError("schedule is defined for t >= 1")
        return self.beta / (self.gamma + t)


@dataclass(frozen=True)
class Batch:
    family: ModelFamily
    features: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass
class ClientRuntime:
    """A client's dataset plus its private, seeded batch stream.

    Batches walk a shuffled permutation in consecutive slices and reshuffle at
    each epoch boundary.  When ``batch_size`` covers the whole dataset the
    stream degenerates to the full dataset in stored order and never touches
    the generator, so full-batch runs are reproducible regardless of how many
    batches other code has drawn elsewhere.
    """

    family: ModelFamily
    dataset: Dataset
    batch_size: int
    rng: np.random.Generator
    _order: np.ndarray = field(init=False, repr=False)
    _cursor: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise InvalidArgumentError("batch_size must be >= 1")
        self._order = np.arange(self.dataset.n)
        self._cursor = self.dataset.n  # force a shuffle on first stochastic draw

    @property
    def full_batch(self) -> bool:
        return self.batch_size >= self.dataset.n

    def next_batch(self) -> Batch:
        data = self.dataset
        if self.full_batch:
            return Batch(self.family, data.features, data.labels)
        if self._cursor >= data.n:
            self._order = self.rng.permutation(data.n)
            self._cursor = 0
        take = self._order[self._cursor : self._cursor + self.batch_size]
        self._cursor += self.batch_size
        return Batch(self.family, data.features[take], data.labels[take])

    def loss(self, w: np.ndarray) -> float:
        return self.family.loss(w, self.dataset.features, self.dataset.labels)


def sgd_step(model: np.ndarray, batch: Batch, eta: float) -> np.ndarray:
    """One gradient step on the batch mean: w - eta * grad."""
    if eta <= 0.0:
        raise InvalidArgumentError("eta must be positive")
    if len(batch) == 0:
        raise InvalidArgumentError("batch is empty")
    g = batch.family.grad(model, batch.features, batch.labels)
    if not np.all(np.isfinite(g)):
        raise NumericError("non-finite gradient")
    return model - eta * g


def local_train(
    model: np.ndarray,
    client: ClientRuntime,
    E: int,
    schedule: LrSchedule,
    t0: int,
) -> np.ndarray:
    """E sequential sgd steps with rates eta_{t0}, ..., eta_{t0+E-1}."""
    if E < 1:
        raise InvalidArgumentError("E must be >= 1")
    w = np.asarray(model, dtype=np.float64)
    for e in range(E):
        w = sgd_step(w, client.next_batch(), schedule.eta(t0 + e))
    return w


def fedavg(models: Sequence[np.ndarray], weights: Sequence[float] | None = None) -> np.ndarray:
    """Convex combination of model vectors; uniform when weights is None."""
    if len(models) == 0:
        raise InvalidArgumentError("no models to aggregate")
    stack = np.stack([np.asarray(m, dtype=np.float64) for m in models])
    if stack.ndim != 2:
        raise InvalidArgumentError("models must share one flat dimension")
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (stack.shape[0],):
            raise InvalidArgumentError("one weight per model required")
        if abs(float(np.sum(w)) - 1.0) > 1e-9:
            raise InvalidArgumentError("weights must sum to 1")
    first = stack[0]
    if all(np.array_equal(first, row) for row in stack[1:]):
        return first.copy()  # bitwise identity for identical inputs
    if weights is None:
        return np.mean(stack, axis=0)
    return w @ stack


def select_clients(
    area_clients: Sequence[ClientRuntime], u: int, rng: np.random.Generator
) -> list[ClientRuntime]:
    """Uniform sample of u clients without replacement, in stable index order."""
    n = len(area_clients)
    if not 1 <= u <= n:
        raise InvalidArgumentError(f"need 1 <= u <= {n}, got {u}")
    if u == n:
        return list(area_clients)
    picked = rng.choice(n, size=u, replace=False)
    return [area_clients[i] for i in sorted(int(i) for i in picked)]


def global_loss(
    models: np.ndarray | Sequence[np.ndarray],
    area_clients: Sequence[Sequence[ClientRuntime]],
) -> float:
    """Double average (1/M) sum_i (1/N_i) sum_j F_j.

    ``models`` is either one shared vector or a per-area sequence, so the same
    function scores both a consensus model and mid-dispersal area models.
    """
    M = len(area_clients)
    if M == 0:
        raise InvalidArgumentError("no areas")
    shared = isinstance(models, np.ndarray) and models.ndim == 1
    if not shared and len(models) != M:
        raise InvalidArgumentError("one model per area required")
    total = 0.0
    for i, clients in enumerate(area_clients):
        w = models if shared else np.asarray(models[i], dtype=np.float64)
        area = sum(c.loss(w) for c in clients) / len(clients)
        total += area
    return total / M
