"""Constellation kinematics against hand-evaluated Kepler arithmetic."""

import logging
import math

import pytest

from fedmeld.errors import InvalidArgumentError, InvalidConfigError
from fedmeld.geometry import (
    ConstellationGeometry,
    ServePlan,
    equally_spaced_positions,
    fly_time,
    fly_times,
    make_serve_plan,
    orbital_period,
    rounds_per_serve,
    serve_duration,
)

# 2*pi*sqrt(a^3/mu) evaluated at 30 decimal digits with a = 6 371 000 + h,
# mu = 3.986e14
PERIOD_550KM_S = 5730.1302649109322
PERIOD_GEO_S = 86142.162072487023  # h = 35 786 km
PERIOD_SURFACE_S = 5060.8402520035219  # h = 0 boundary
SERVE_66_SATS_S = 86.820155528953519


def geom(num_areas=4, altitude_m=550e3, sats=66, positions=None):
    return ConstellationGeometry(
        altitude_m=altitude_m,
        sats_per_orbit=sats,
        num_areas=num_areas,
        area_angular_positions=positions or equally_spaced_positions(num_areas),
    )


class TestOrbitalPeriod:
    def test_550km(self):
        assert orbital_period(geom()) == pytest.approx(PERIOD_550KM_S, rel=1e-12)

    def test_geostationary_altitude(self):
        g = geom(altitude_m=35786e3)
        assert orbital_period(g) == pytest.approx(PERIOD_GEO_S, rel=1e-12)
        # the classical sidereal day, reachable only approximately with the
        # rounded constants above
        assert abs(orbital_period(g) - 86164.1) < 30.0

    def test_surface_boundary(self):
        p = orbital_period(geom(altitude_m=0.0))
        assert p == pytest.approx(PERIOD_SURFACE_S, rel=1e-12)
        assert p > 0

    def test_negative_altitude_rejected(self):
        with pytest.raises(InvalidConfigError):
            geom(altitude_m=-1.0)

    def test_strictly_increasing_in_altitude(self):
        grid = [300e3 + i * 100e3 for i in range(18)]  # 300..2000 km
        periods = [orbital_period(geom(altitude_m=h)) for h in grid]
        assert all(b > a for a, b in zip(periods, periods[1:]))


class TestServeDuration:
    def test_66_sats(self):
        assert serve_duration(geom()) == pytest.approx(SERVE_66_SATS_S, rel=1e-12)

    def test_single_sat_full_period(self):
        g = geom(num_areas=1, sats=1)
        assert serve_duration(g) == orbital_period(g)

    def test_two_sats_half_period(self):
        g = geom(num_areas=2, sats=2)
        assert serve_duration(g) == pytest.approx(orbital_period(g) / 2.0, rel=1e-15)


class TestFlyTime:
    def test_diametric_pair_half_period(self):
        g = geom(num_areas=2, positions=(0.0, math.pi))
        p = orbital_period(g)
        assert fly_time(g, 1) == pytest.approx(p / 2.0, rel=1e-12)
        assert fly_time(g, 2) == pytest.approx(p / 2.0, rel=1e-12)
        assert abs(p / 2.0 - 2865.1) < 0.1

    def test_eight_equal_areas(self):
        g = geom(num_areas=8)
        p = orbital_period(g)
        for i in range(1, 9):
            assert fly_time(g, i) == pytest.approx(p / 8.0, rel=1e-12)
        # hand value computed from the nominal 5730 s period
        assert abs(p / 8.0 - 716.25) < 0.05

    def test_ring_closure_sums_to_period(self):
        for m in (2, 3, 4, 8):
            g = geom(num_areas=m)
            total = sum(fly_times(g))
            assert total == pytest.approx(orbital_period(g), rel=1e-9)

    def test_uneven_spacing_wraps(self):
        g = geom(num_areas=3, positions=(0.0, 0.5, 2.0))
        p = orbital_period(g)
        assert fly_time(g, 1) == pytest.approx(0.5 / (2 * math.pi) * p, rel=1e-12)
        assert fly_time(g, 2) == pytest.approx(1.5 / (2 * math.pi) * p, rel=1e-12)
        # last hop wraps past 2*pi back to the first area
        assert fly_time(g, 3) == pytest.approx((2 * math.pi - 2.0) / (2 * math.pi) * p, rel=1e-12)
        assert sum(fly_times(g)) == pytest.approx(p, rel=1e-9)

    def test_index_range(self):
        g = geom()
        with pytest.raises(InvalidArgumentError):
            fly_time(g, 0)
        with pytest.raises(InvalidArgumentError):
            fly_time(g, 5)


class TestRoundsPerServe:
    def test_floor(self):
        assert rounds_per_serve(86.8, 10.0) == 8

    def test_exact_window_is_one(self):
        assert rounds_per_serve(10.0, 10.0) == 1

    def test_clamp_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="fedmeld.geometry"):
            assert rounds_per_serve(5.0, 10.0) == 1
        assert any("clamping K to 1" in r.message for r in caplog.records)

    def test_nonpositive_latency_rejected(self):
        with pytest.raises(InvalidConfigError):
            rounds_per_serve(86.8, 0.0)
        with pytest.raises(InvalidConfigError):
            rounds_per_serve(86.8, -1.0)


class TestGeometryValidation:
    def test_more_areas_than_sats_rejected(self):
        with pytest.raises(InvalidConfigError):
            geom(num_areas=4, sats=3)

    def test_positions_must_increase(self):
        with pytest.raises(InvalidConfigError):
            geom(num_areas=2, positions=(1.0, 1.0))

    def test_positions_within_circle(self):
        with pytest.raises(InvalidConfigError):
            geom(num_areas=2, positions=(0.0, 2 * math.pi))

    def test_serve_plan_rejects_bad_fields(self):
        with pytest.raises(InvalidConfigError):
            ServePlan(serve_duration_s=0.0, fly_time_s=(1.0,), K=1)
        with pytest.raises(InvalidConfigError):
            ServePlan(serve_duration_s=1.0, fly_time_s=(0.0,), K=1)
        with pytest.raises(InvalidConfigError):
            ServePlan(serve_duration_s=1.0, fly_time_s=(1.0,), K=0)


def test_make_serve_plan_composition():
    g = geom()
    plan = make_serve_plan(g, round_latency_s=10.0)
    assert plan.serve_duration_s == serve_duration(g)
    assert plan.fly_time_s == fly_times(g)
    assert plan.K == 8  # floor(86.82 / 10)
