"""Desk-scale federated-learning primitives.

Datasets and non-IID partitioning, three small trainable model families,
SGD under a diminishing learning-rate schedule, uniform averaging, client
sampling, the global loss/accuracy metrics, and the non-IID-degree
estimator.  Everything is deterministic given a master seed.
"""

from ._backend import active_backend, set_backend
from .data import Dataset, load_csv, make_quadratic_clients, synthetic_gaussian
from .gamma import estimate_gamma_noniid
from .models import LogisticFamily, MlpFamily, ModelFamily, QuadraticFamily, accuracy
from .partition import PartitionSpec, partition
from .training import (
    Batch,
    ClientRuntime,
    LrSchedule,
    fedavg,
    global_loss,
    local_train,
    select_clients,
    sgd_step,
)

__all__ = [
    "Batch",
    "ClientRuntime",
    "Dataset",
    "LogisticFamily",
    "LrSchedule",
    "MlpFamily",
    "ModelFamily",
    "PartitionSpec",
    "QuadraticFamily",
    "accuracy",
    "active_backend",
    "estimate_gamma_noniid",
    "fedavg",
    "global_loss",
    "load_csv",
    "local_train",
    "make_quadratic_clients",
    "partition",
    "select_clients",
    "set_backend",
    "sgd_step",
    "synthetic_gaussian",
]
