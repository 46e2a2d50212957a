"""Shared fixtures: small, fast run configurations.

Every helper returns a validated config for the scalar quadratic family so
protocol tests stay analytic: per-client objectives 0.5*a*(w - c)^2 have a
known global optimum and loss surface, and full-batch gradients make runs
bit-reproducible.
"""

import numpy as np
import pytest

from fedmeld.engine import SimContext
from fedmeld.geometry import ServePlan
from fedmeld.harness import from_dict


def policy_context(M=4, E=5, K=3, delta=2, rounds=10, t_round=2.0, fly=None,
                   alpha=0.3, q_bits=64, isl_rate=1e6, hfl_stall=0.0, chunks=None):
    """Minimal context for driving a policy's on_round hook by hand."""
    if fly is None:
        fly = tuple(100.0 for _ in range(M))
    plan = ServePlan(serve_duration_s=K * t_round, fly_time_s=tuple(fly), K=K)
    return SimContext(
        scheme="test", master_seed=0, E=E, rounds=rounds, family=None,
        area_clients=[[object()] for _ in range(M)], u_per_area=tuple(1 for _ in range(M)),
        schedule=None, test_set=None, init_model=np.zeros(1), K=K, delta=delta,
        alpha=alpha, q_bits=q_bits, t_round_s=t_round, serve_plan=plan,
        period_s=float(sum(fly)), round_traffic_bits=0, isl_rate_bps=isl_rate,
        hfl_stall_s=hfl_stall, ring_chunks=chunks,
    )


def quadratic_config(**overrides):
    base = {
        "scheme": "fedmeld",
        "seeds": [0],
        "R": 50,
        "geometry": {"altitude_m": 550e3, "sats_per_orbit": 66, "num_areas": 4},
        "compute": {"E": 5, "batch_size": 8},
        "data": {"kind": "quadratic", "dim": 1},
        "model": {"kind": "quadratic"},
        "partition": {"clients_per_area": 3},
        "fedmeld": {"K": 3, "scmr_mode": "fixed", "delta": 2, "alpha": 0.3},
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            base[key] = {**base[key], **value}
        else:
            base[key] = value
    return from_dict(base)


@pytest.fixture
def quad_cfg():
    return quadratic_config()
