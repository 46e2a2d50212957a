"""Constellation kinematics for a single-orbit service ring.

Ground areas sit on the ground track of one circular orbit.  Each area is
served by whichever satellite is currently overhead; with uniform satellite
spacing the serving window per satellite is the orbital period divided by
the satellite count.  The angular gap between consecutive areas, divided by
the orbital rate, gives the store-carry-forward flight time from one area
to the next.  Earth rotation is ignored over a mix cycle and serving
windows are treated as instantaneous handovers at synchronization steps.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .errors import InvalidArgumentError, InvalidConfigError

logger = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_000.0
EARTH_MU_M3_S2 = 3.986e14

_TWO_PI = 2.0 * math.pi


def equally_spaced_positions(num_areas: int) -> tuple[float, ...]:
    """Angular positions of ``num_areas`` areas spread uniformly over one orbit."""
    if num_areas < 1:
        raise InvalidConfigError("num_areas must be >= 1")
    return tuple(_TWO_PI * i / num_areas for i in range(num_areas))


@dataclass(frozen=True)
class ConstellationGeometry:
    """Layout of one orbit and the ground areas beneath it.

    ``area_angular_positions`` are radians along the ground track, strictly
    increasing within [0, 2*pi).  ``altitude_m`` may be zero so the period
    formula stays evaluable at its boundary; real run configurations require
    a positive altitude.
    """

    altitude_m: float
    sats_per_orbit: int
    num_areas: int
    area_angular_positions: tuple[float, ...]
    earth_radius_m: float = EARTH_RADIUS_M
    gravitational_parameter: float = EARTH_MU_M3_S2

    def __post_init__(self):
        if self.altitude_m < 0:
            raise InvalidConfigError("altitude_m must be non-negative")
        if self.sats_per_orbit < 1:
            raise InvalidConfigError("sats_per_orbit must be >= 1")
        if self.num_areas < 1:
            raise InvalidConfigError("num_areas must be >= 1")
        if self.num_areas > self.sats_per_orbit:
            raise InvalidConfigError(
                f"num_areas ({self.num_areas}) may not exceed "
                f"sats_per_orbit ({self.sats_per_orbit})"
            )
        pos = tuple(float(p) for p in self.area_angular_positions)
        object.__setattr__(self, "area_angular_positions", pos)
        if len(pos) != self.num_areas:
            raise InvalidConfigError(
                f"expected {self.num_areas} area positions, got {len(pos)}"
            )
        if pos[0] < 0.0 or pos[-1] >= _TWO_PI:
            raise InvalidConfigError("area positions must lie in [0, 2*pi)")
        for a, b in zip(pos, pos[1:]):
            if b <= a:
                raise InvalidConfigError("area positions must be strictly increasing")
        if self.earth_radius_m <= 0 or self.gravitational_parameter <= 0:
            raise InvalidConfigError("earth radius and mu must be positive")


@dataclass(frozen=True)
class ServePlan:
    """Derived timing: per-area serving window, per-hop flight times, and K.

    ``fly_time_s[i]`` is the flight from area i+1 to area i+2 in 1-based
    ring terms; the last entry wraps back to the first area.
    """

    serve_duration_s: float
    fly_time_s: tuple[float, ...]
    K: int

    def __post_init__(self):
        if self.serve_duration_s <= 0:
            raise InvalidConfigError("serve_duration_s must be positive")
        if any(f <= 0 for f in self.fly_time_s):
            raise InvalidConfigError("fly times must be positive")
        if self.K < 1:
            raise InvalidConfigError("K must be >= 1")


def orbital_period(geometry: ConstellationGeometry) -> float:
    """Orbital period in seconds from Kepler's third law (circular orbit)."""
    if geometry.altitude_m < 0:
        raise InvalidConfigError("altitude_m must be non-negative")
    a = geometry.earth_radius_m + geometry.altitude_m
    return _TWO_PI * math.sqrt(a**3 / geometry.gravitational_parameter)


def serve_duration(geometry: ConstellationGeometry) -> float:
    """Serving window per satellite: period / sats_per_orbit."""
    return orbital_period(geometry) / geometry.sats_per_orbit


def fly_time(geometry: ConstellationGeometry, i: int) -> float:
    """Flight time from area ``i`` to area ``i+1`` (1-based, wraps at M)."""
    m = geometry.num_areas
    if not 1 <= i <= m:
        raise InvalidArgumentError(f"area index {i} out of range 1..{m}")
    pos = geometry.area_angular_positions
    if i < m:
        gap = pos[i] - pos[i - 1]
    else:
        gap = _TWO_PI - pos[m - 1] + pos[0]
    omega = _TWO_PI / orbital_period(geometry)
    return gap / omega


def fly_times(geometry: ConstellationGeometry) -> tuple[float, ...]:
    """All M flight times in ring order."""
    return tuple(fly_time(geometry, i) for i in range(1, geometry.num_areas + 1))


def rounds_per_serve(serve_duration_s: float, round_latency_s: float) -> int:
    """Global rounds a satellite completes per area visit.

    Floor of window / latency, clamped to at least one round: a visit that
    cannot fit a whole round still performs its single aggregation.
    """
    if round_latency_s <= 0:
        raise InvalidConfigError("round latency must be positive")
    if serve_duration_s <= 0:
        raise InvalidConfigError("serve duration must be positive")
    k = int(math.floor(serve_duration_s / round_latency_s))
    if k < 1:
        logger.warning(
            "serving window %.3f s is shorter than one round (%.3f s); clamping K to 1",
            serve_duration_s,
            round_latency_s,
        )
        return 1
    return k


def make_serve_plan(
    geometry: ConstellationGeometry, round_latency_s: float
) -> ServePlan:
    """Bundle serve window, flight times and K for one geometry."""
    window = serve_duration(geometry)
    return ServePlan(
        serve_duration_s=window,
        fly_time_s=fly_times(geometry),
        K=rounds_per_serve(window, round_latency_s),
    )
