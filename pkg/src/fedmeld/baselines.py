"""Reference schemes: HFL, PFL and Ring Allreduce, plus cost accounting.

All three reuse the shared engine, so they differ from the dispersal
protocol only in the cross-area step: HFL averages everything through a
ground station, PFL averages each area with its two ring neighbors, Ring
runs an exact allreduce collective.  Exchange cadence is one event per
K + delta global rounds for every scheme, which keeps comparisons aligned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import SimContext, build_context, simulate
from .errors import InvalidArgumentError
from .flcore import fedavg
from .records import RunResult


@dataclass(frozen=True)
class CostReport:
    """Per-round traffic and link tallies for one scheme."""

    scheme: str
    traffic_bits: int
    link_count_min: float
    link_count_max: float
    rounds: int = 1

    @property
    def cumulative_traffic_bits(self) -> int:
        return self.traffic_bits * self.rounds

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "traffic_bits_per_round": self.traffic_bits,
            "link_count_min": self.link_count_min,
            "link_count_max": self.link_count_max,
            "rounds": self.rounds,
            "cumulative_traffic_bits": self.cumulative_traffic_bits,
        }


def comm_cost(
    scheme: str,
    U: int,
    M: int,
    q: int,
    *,
    l_u2s: float = 1.0,
    l_s2g: float = 1.0,
    l_isl: float = 1.0,
    rounds: int = 1,
) -> CostReport:
    """Traffic and link counts of one global round for U clients, M areas.

    The link weights let callers price link types differently; with the
    default weight 1 the values are plain link counts.  min/max bracket the
    cases where serving satellites can or cannot reach their neighbors
    directly.
    """
    if U < 1 or M < 1 or q < 0 or rounds < 1:
        raise InvalidArgumentError("need U >= 1, M >= 1, q >= 0, rounds >= 1")
    name = scheme.lower()
    if name in ("fedmeld", "ours"):
        traffic = 2 * U * q
        lo = hi = 2 * U * l_u2s
        name = "fedmeld"
    elif name == "hfl":
        traffic = 2 * (U + M) * q
        lo = hi = 2 * (U * l_u2s + M * l_s2g)
    elif name == "pfl":
        traffic = 2 * (U + 2 * M) * q
        lo = 2 * (U * l_u2s + 2 * M * l_isl)
        hi = 2 * (U * l_u2s + 4 * M * l_s2g)
    elif name == "ring":
        traffic = 2 * (U + (M - 1)) * q
        lo = 2 * (U * l_u2s + M * (M - 1) * l_isl)
        hi = 2 * (U * l_u2s + 2 * M * (M - 1) * l_s2g)
    else:
        raise InvalidArgumentError(f"unknown scheme {scheme!r}")
    return CostReport(
        scheme=name, traffic_bits=traffic, link_count_min=lo, link_count_max=hi, rounds=rounds
    )


def ring_allreduce_exchange(
    models: list[np.ndarray], chunks: int | None = None
) -> list[np.ndarray]:
    """Exact ring collective: every output is the mean of all inputs.

    The flat vectors are split into ``chunks`` chunks (default one per
    satellite; zero-padded when the dimension does not divide) and reduced in
    M - 1 accumulation phases followed by M - 1 broadcast phases, each phase
    moving one chunk group to the next satellite on the ring.  Identical
    inputs pass through unchanged.
    """
    m = len(models)
    if m < 2:
        raise InvalidArgumentError("ring allreduce needs at least two satellites")
    stack = np.stack([np.asarray(v, dtype=np.float64) for v in models])
    if stack.ndim != 2:
        raise InvalidArgumentError("models must be flat vectors of equal length")
    first = stack[0]
    if all(np.array_equal(first, row) for row in stack[1:]):
        return [row.copy() for row in stack]
    c = m if chunks is None else int(chunks)
    if c < 1:
        raise InvalidArgumentError("chunks must be >= 1")
    d = stack.shape[1]
    pad = (-d) % c
    buf = np.pad(stack, ((0, 0), (0, pad))).reshape(m, c, -1)

    def group(g: int) -> slice | list[int]:
        return list(range(g % m, c, m))

    for p in range(m - 1):  # reduce-scatter: accumulate sums around the ring
        prev = buf.copy()
        for i in range(m):
            dst = (i + 1) % m
            sel = group(i - p)
            buf[dst, sel] = prev[dst, sel] + prev[i, sel]
    for p in range(m - 1):  # allgather: circulate the finished sums
        prev = buf.copy()
        for i in range(m):
            dst = (i + 1) % m
            sel = group(i + 1 - p)
            buf[dst, sel] = prev[i, sel]
    out = (buf / m).reshape(m, -1)[:, :d]
    return [row.copy() for row in out]


class HflPolicy:
    """Ground-station scheme: full average every K + delta rounds."""

    name = "hfl"

    def start(self, ctx: SimContext) -> None:
        self._period = ctx.K + ctx.delta

    def on_round(self, ctx, k, models, clock):
        if k % self._period == 0:
            g = fedavg(models)
            # deliver + receive at the next ground-station pass
            return [g.copy() for _ in range(ctx.M)], clock + ctx.t_round_s + ctx.hfl_stall_s, "global"
        return models, clock + ctx.t_round_s, "local"


class PflPolicy:
    """Neighbor scheme: each area averages with its two ring neighbors."""

    name = "pfl"

    def start(self, ctx: SimContext) -> None:
        self._period = ctx.K + ctx.delta

    def on_round(self, ctx, k, models, clock):
        if k % self._period == 0 and ctx.M > 1:
            mixed = []
            for i in range(ctx.M):
                neigh = sorted({(i - 1) % ctx.M, i, (i + 1) % ctx.M})
                mixed.append(fedavg([models[j] for j in neigh]))
            hop = ctx.q_bits / ctx.isl_rate_bps
            return mixed, clock + ctx.t_round_s + hop, "exchange"
        return models, clock + ctx.t_round_s, "local"


class RingPolicy:
    """Collective scheme: allreduce over serving satellites."""

    name = "ring"

    def start(self, ctx: SimContext) -> None:
        self._period = ctx.K + ctx.delta
        self._chunks = ctx.ring_chunks if ctx.ring_chunks is not None else ctx.M

    def on_round(self, ctx, k, models, clock):
        if k % self._period == 0 and ctx.M > 1:
            out = ring_allreduce_exchange(models, self._chunks)
            hops = 2 * (ctx.M - 1) * (ctx.q_bits / self._chunks) / ctx.isl_rate_bps
            return out, clock + ctx.t_round_s + hops, "ring"
        return models, clock + ctx.t_round_s, "local"


def run_hfl(config, seed: int | None = None, *, record_trace: bool = False) -> RunResult:
    ctx = build_context(config, seed=seed, scheme="hfl")
    return simulate(ctx, HflPolicy(), record_trace=record_trace)


def run_pfl(config, seed: int | None = None, *, record_trace: bool = False) -> RunResult:
    ctx = build_context(config, seed=seed, scheme="pfl")
    return simulate(ctx, PflPolicy(), record_trace=record_trace)


def run_ring(config, seed: int | None = None, *, record_trace: bool = False) -> RunResult:
    ctx = build_context(config, seed=seed, scheme="ring")
    return simulate(ctx, RingPolicy(), record_trace=record_trace)
