"""Reference schemes: cost accounting, ring collective, policy behavior."""

import numpy as np
import pytest

from fedmeld.baselines import (
    HflPolicy,
    PflPolicy,
    RingPolicy,
    comm_cost,
    ring_allreduce_exchange,
    run_hfl,
    run_pfl,
    run_ring,
)
from fedmeld.dispersal import run_fedmeld
from fedmeld.errors import InvalidArgumentError

from conftest import policy_context, quadratic_config


class TestCommCost:
    def test_reference_values_are_exact_integers(self):
        assert comm_cost("ours", U=32, M=8, q=1_000_000).traffic_bits == 64_000_000
        assert comm_cost("hfl", U=32, M=8, q=1_000_000).traffic_bits == 80_000_000
        assert comm_cost("pfl", U=32, M=8, q=1_000_000).traffic_bits == 96_000_000
        assert comm_cost("ring", U=32, M=8, q=1_000_000).traffic_bits == 78_000_000

    def test_formulas_on_a_grid(self):
        for U in (1, 7, 32, 100):
            for M in (1, 2, 8, 13):
                for q in (1, 64, 10**6):
                    assert comm_cost("fedmeld", U, M, q).traffic_bits == 2 * U * q
                    assert comm_cost("hfl", U, M, q).traffic_bits == 2 * (U + M) * q
                    assert comm_cost("pfl", U, M, q).traffic_bits == 2 * (U + 2 * M) * q
                    assert comm_cost("ring", U, M, q).traffic_bits == 2 * (U + M - 1) * q

    def test_ordering_without_infrastructure(self):
        for U in (4, 32, 200):
            for M in (2, 4, 16):
                ours = comm_cost("ours", U, M, 10**6).traffic_bits
                ring = comm_cost("ring", U, M, 10**6).traffic_bits
                hfl = comm_cost("hfl", U, M, 10**6).traffic_bits
                pfl = comm_cost("pfl", U, M, 10**6).traffic_bits
                assert ours < ring < hfl < pfl

    def test_link_counts(self):
        r = comm_cost("hfl", U=3, M=2, q=1, l_u2s=1.0, l_s2g=10.0)
        assert r.link_count_min == r.link_count_max == 2 * (3 + 2 * 10.0)
        r = comm_cost("ours", U=3, M=2, q=1, l_u2s=2.0)
        assert r.link_count_min == r.link_count_max == 2 * 3 * 2.0
        r = comm_cost("pfl", U=3, M=2, q=1, l_isl=1.0, l_s2g=10.0)
        assert r.link_count_min == 2 * (3 + 2 * 2 * 1.0)
        assert r.link_count_max == 2 * (3 + 4 * 2 * 10.0)
        r = comm_cost("ring", U=3, M=4, q=1)
        assert r.link_count_min == 2 * (3 + 4 * 3)
        assert r.link_count_max == 2 * (3 + 2 * 4 * 3)

    def test_rounds_multiplier(self):
        r = comm_cost("ours", U=12, M=4, q=64, rounds=10)
        assert r.cumulative_traffic_bits == 15_360
        assert r.to_dict()["cumulative_traffic_bits"] == 15_360

    def test_validation(self):
        with pytest.raises(InvalidArgumentError):
            comm_cost("carrier_pigeon", U=1, M=1, q=1)
        with pytest.raises(InvalidArgumentError):
            comm_cost("hfl", U=0, M=1, q=1)


class TestRingAllreduce:
    def test_two_satellites_by_hand(self):
        a = np.array([1.0, 3.0])
        b = np.array([5.0, -1.0])
        out = ring_allreduce_exchange([a, b])
        np.testing.assert_allclose(out[0], [3.0, 1.0], rtol=0, atol=1e-15)
        np.testing.assert_allclose(out[1], [3.0, 1.0], rtol=0, atol=1e-15)

    def test_three_satellites_by_hand(self):
        models = [np.array([3.0]), np.array([6.0]), np.array([0.0])]
        for row in ring_allreduce_exchange(models):
            assert row == pytest.approx(3.0, abs=1e-15)

    def test_matches_global_mean_randomized(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            m = int(rng.integers(2, 17))
            d = int(rng.integers(1, 41))
            models = [rng.standard_normal(d) for _ in range(m)]
            want = np.mean(np.stack(models), axis=0)
            for row in ring_allreduce_exchange(models):
                np.testing.assert_allclose(row, want, rtol=1e-12, atol=1e-12)

    def test_padding_path(self):
        rng = np.random.default_rng(29)
        models = [rng.standard_normal(5) for _ in range(4)]  # 5 % 3 != 0
        want = np.mean(np.stack(models), axis=0)
        for row in ring_allreduce_exchange(models, chunks=3):
            assert row.shape == (5,)
            np.testing.assert_allclose(row, want, rtol=1e-12)

    def test_chunk_extremes(self):
        rng = np.random.default_rng(31)
        models = [rng.standard_normal(6) for _ in range(3)]
        want = np.mean(np.stack(models), axis=0)
        for chunks in (1, 2, 6, 11):
            for row in ring_allreduce_exchange(models, chunks=chunks):
                np.testing.assert_allclose(row, want, rtol=1e-12)

    def test_identical_inputs_pass_through_bitwise(self):
        w = np.array([0.3, -1.7, 2.2])
        out = ring_allreduce_exchange([w.copy(), w.copy(), w.copy()])
        for row in out:
            np.testing.assert_array_equal(row, w)
        out[0][0] = 9.0
        assert w[0] == 0.3

    def test_needs_two(self):
        with pytest.raises(InvalidArgumentError):
            ring_allreduce_exchange([np.zeros(3)])


class TestPolicies:
    def test_hfl_exchanges_on_period(self):
        ctx = policy_context(M=3, K=3, delta=2, t_round=1.0, hfl_stall=7.0)
        pol = HflPolicy()
        pol.start(ctx)
        models = [np.array([0.0]), np.array([3.0]), np.array([6.0])]
        out, clock, event = pol.on_round(ctx, 4, models, 10.0)
        assert event == "local" and clock == 11.0
        assert out is models
        out, clock, event = pol.on_round(ctx, 5, models, 10.0)
        assert event == "global"
        assert clock == 10.0 + 1.0 + 7.0
        for m in out:
            assert m == np.array([3.0])

    def test_pfl_mixes_ring_neighbors(self):
        ctx = policy_context(M=4, K=3, delta=2, t_round=1.0, q_bits=100, isl_rate=50.0)
        pol = PflPolicy()
        pol.start(ctx)
        models = [np.array([float(8 * i)]) for i in range(4)]  # 0, 8, 16, 24
        out, clock, event = pol.on_round(ctx, 5, models, 0.0)
        assert event == "exchange"
        assert clock == pytest.approx(1.0 + 100 / 50.0)
        # wrap-around neighborhoods: mean of {i-1, i, i+1}
        want = [(24 + 0 + 8) / 3, (0 + 8 + 16) / 3, (8 + 16 + 24) / 3, (16 + 24 + 0) / 3]
        for m, v in zip(out, want):
            assert m == pytest.approx(v, abs=1e-12)

    def test_ring_policy_reaches_consensus(self):
        ctx = policy_context(M=4, K=1, delta=1, t_round=1.0, q_bits=80, isl_rate=10.0)
        pol = RingPolicy()
        pol.start(ctx)
        models = [np.array([float(i)]) for i in range(4)]
        out, clock, event = pol.on_round(ctx, 2, models, 0.0)
        assert event == "ring"
        # 2*(M-1) phases, each moving q/chunks bits over the isl
        assert clock == pytest.approx(1.0 + 2 * 3 * (80 / 4) / 10.0)
        for m in out:
            assert m == pytest.approx(1.5, abs=1e-15)

    def test_single_area_never_exchanges(self):
        for pol in (PflPolicy(), RingPolicy()):
            ctx = policy_context(M=1, K=2, delta=1, t_round=1.0)
            pol.start(ctx)
            models = [np.array([4.0])]
            out, clock, event = pol.on_round(ctx, 3, models, 0.0)
            assert event == "local"
            assert out[0] == np.array([4.0])

    def test_ring_chunk_override(self):
        ctx = policy_context(M=3, K=1, delta=1, t_round=0.5, q_bits=90,
                             isl_rate=1.0, chunks=9)
        pol = RingPolicy()
        pol.start(ctx)
        _, clock, _ = pol.on_round(ctx, 2, [np.zeros(2), np.ones(2), np.ones(2)], 0.0)
        assert clock == pytest.approx(0.5 + 2 * 2 * (90 / 9) / 1.0)


class TestBaselineRuns:
    def test_events_and_traffic(self):
        cfg = quadratic_config()
        hfl = run_hfl(cfg, seed=0)
        pfl = run_pfl(cfg, seed=0)
        ring = run_ring(cfg, seed=0)
        assert {r.event for r in hfl.records} == {"local", "global"}
        assert {r.event for r in pfl.records} == {"local", "exchange"}
        assert {r.event for r in ring.records} == {"local", "ring"}
        # 12 participating clients, M=4, q=64 bits, 10 rounds
        assert hfl.total_traffic_bits == 2 * (12 + 4) * 64 * 10
        assert pfl.total_traffic_bits == 2 * (12 + 2 * 4) * 64 * 10
        assert ring.total_traffic_bits == 2 * (12 + 3) * 64 * 10

    def test_exchange_cadence_matches_dispersal(self):
        cfg = quadratic_config()
        hfl = run_hfl(cfg, seed=0)
        assert [r.k for r in hfl.records if r.event == "global"] == [5, 10]

    def test_hfl_reaches_consensus_after_global(self):
        res = run_hfl(quadratic_config(), seed=0, record_trace=True)
        for rec, models in zip(res.records, res.model_trace):
            if rec.event == "global":
                for m in models[1:]:
                    np.testing.assert_array_equal(m, models[0])

    def test_single_area_trajectories_coincide_bitwise(self):
        # with one area there is nothing to disperse or exchange: all four
        # schemes collapse to the same per-area FedAvg trajectory
        cfg = quadratic_config(
            geometry={"num_areas": 1},
            fedmeld={"K": 3, "scmr_mode": "fixed", "delta": 2, "alpha": 0.0},
        )
        runs = [run_fedmeld(cfg, seed=2), run_hfl(cfg, seed=2),
                run_pfl(cfg, seed=2), run_ring(cfg, seed=2)]
        base = runs[0]
        for other in runs[1:]:
            np.testing.assert_array_equal(other.final_global, base.final_global)
            assert [r.loss_global for r in other.records] == [
                r.loss_global for r in base.records
            ]

    def test_deterministic_per_seed(self):
        cfg = quadratic_config()
        a = run_ring(cfg, seed=9)
        b = run_ring(cfg, seed=9)
        np.testing.assert_array_equal(a.final_global, b.final_global)
