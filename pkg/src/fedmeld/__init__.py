"""Federated learning over space-ground integrated networks.

A deterministic simulator for the model-dispersal protocol (satellites
store, carry, and forward area models around one orbital ring), the
latency and link-budget models behind its schedule, a convergence-bound
calculator, the joint staleness-control and mixing-ratio solver, and three
infrastructure-based baselines for comparison.
"""

from . import baselines, dispersal, flcore, geometry, harness, linkmodel, scmr
from .errors import (
    EstimationError,
    FedmeldError,
    InfeasibleScheduleError,
    InvalidArgumentError,
    InvalidConfigError,
    NumericError,
    ValidityError,
)

__version__ = "0.1.0"

__all__ = [
    "baselines",
    "dispersal",
    "flcore",
    "geometry",
    "harness",
    "linkmodel",
    "scmr",
    "EstimationError",
    "FedmeldError",
    "InfeasibleScheduleError",
    "InvalidArgumentError",
    "InvalidConfigError",
    "NumericError",
    "ValidityError",
    "__version__",
]
