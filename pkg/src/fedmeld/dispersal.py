"""Model-dispersal protocol: mix schedule, mixing rule, and the run loop.

Satellites store each area's aggregate while serving it, carry the model to
the next area on the ring, and forward it into that area's aggregate at the
next mixing round.  A cycle per area is K served rounds, delta - 1 rounds
under non-carrying satellites, and one mixing round; the merge weight is
alpha and the carried operand is always exactly delta*E steps old.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .engine import SimContext, build_context, simulate
from .errors import InfeasibleScheduleError, InvalidArgumentError, InvalidConfigError
from .records import MixEvent, RunResult

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MixSchedule:
    """Synchronization calendar for one run.

    ``sync_steps`` are the local-iteration counts at which areas aggregate
    (multiples of E); the mix flag is raised on the last sync step of every
    cycle of K + delta global rounds.  ``scf_assignments`` lists, per area,
    the sync steps at which a carrying satellite merges into that area.
    """

    E: int
    K: int
    delta: int
    R: int
    M: int
    sync_steps: tuple[int, ...]
    mix_steps: frozenset[int]
    cycle_len_steps: int
    scf_assignments: tuple[tuple[int, ...], ...]

    def is_sync(self, t: int) -> bool:
        return t >= self.E and t % self.E == 0 and t <= self.R

    def a_t(self, t: int) -> bool:
        """Mix flag A_t: true only at mixing rounds' sync steps."""
        return t in self.mix_steps

    def next_mix_after(self, t: int) -> int | None:
        later = [s for s in sorted(self.mix_steps) if s > t]
        return later[0] if later else None


def build_schedule(E: int, K: int, delta: int, R: int, M: int) -> MixSchedule:
    """Lay out sync steps and mix flags for R local steps over M areas."""
    if E < 1 or K < 1 or delta < 1 or M < 1:
        raise InvalidConfigError("need E >= 1, K >= 1, delta >= 1, M >= 1")
    cycle = (K + delta) * E
    if R < cycle:
        raise InvalidConfigError(
            f"R={R} does not cover one full mix cycle of {cycle} steps"
        )
    sync = tuple(k * E for k in range(1, R // E + 1))
    mixes = tuple(t for t in sync if (t // E) % (K + delta) == 0)
    return MixSchedule(
        E=E,
        K=K,
        delta=delta,
        R=R,
        M=M,
        sync_steps=sync,
        mix_steps=frozenset(mixes),
        cycle_len_steps=cycle,
        scf_assignments=tuple(mixes for _ in range(M)),
    )


def mix_models(
    v_bar_i: np.ndarray, w_hist_prev: np.ndarray, alpha: float, a_t: int
) -> np.ndarray:
    """Merge the fresh aggregate with the carried neighbor model.

    Returns (1 - alpha*a_t) * v_bar_i + alpha*a_t * w_hist_prev.  Degenerate
    calls (a_t = 0, alpha = 0, or identical operands) return the fresh
    aggregate unchanged so no-op rounds stay bit-exact.
    """
    if a_t not in (0, 1):
        raise InvalidArgumentError("a_t must be 0 or 1")
    if not 0.0 <= alpha < 1.0:
        raise InvalidArgumentError(f"alpha={alpha} outside [0, 1)")
    v = np.asarray(v_bar_i, dtype=np.float64)
    w = np.asarray(w_hist_prev, dtype=np.float64)
    if v.shape != w.shape:
        raise InvalidArgumentError(f"shape mismatch {v.shape} vs {w.shape}")
    if a_t == 0 or alpha == 0.0 or np.array_equal(v, w):
        return v.copy()
    return (1.0 - alpha) * v + alpha * w


@dataclass
class AreaState:
    """One area's aggregate plus the history the mixing rule needs."""

    area: int
    model: np.ndarray
    history: dict[int, np.ndarray]

    def remember(self, step: int) -> None:
        self.history[step] = self.model.copy()

    def prune(self, oldest_needed: int) -> None:
        for s in [s for s in self.history if s < oldest_needed]:
            del self.history[s]


class FedmeldPolicy:
    """Cross-area behavior of the dispersal protocol for the shared engine."""

    name = "fedmeld"

    def __init__(self, schedule: MixSchedule | None = None):
        self._override = schedule
        self.schedule: MixSchedule | None = None
        self.mix_events: list[MixEvent] = []
        self.idle_ledger: dict[tuple[int, int], float] = {}
        self._history: dict[int, list[np.ndarray]] = {}
        self._cycle_start = 0.0

    def start(self, ctx: SimContext) -> None:
        self.schedule = self._override or build_schedule(
            ctx.E, ctx.K, ctx.delta, ctx.R_steps, ctx.M
        )
        fly = ctx.serve_plan.fly_time_s
        if len(fly) != ctx.M:
            raise InvalidConfigError("one flight time per area pair required")
        for i in range(ctx.M):
            idle = fly[i] - self.schedule.delta * ctx.t_round_s
            if idle < -1e-9:
                raise InfeasibleScheduleError(
                    f"flight {i}->{(i + 1) % ctx.M} lasts {fly[i]:.3f} s but "
                    f"delta={self.schedule.delta} rounds need "
                    f"{self.schedule.delta * ctx.t_round_s:.3f} s; "
                    "lower delta or the round latency"
                )
            self.idle_ledger[(i, (i + 1) % ctx.M)] = idle
        self._cycle_start = 0.0
        self._max_fly = max(fly)

    def on_round(
        self, ctx: SimContext, k: int, models: list[np.ndarray], clock: float
    ) -> tuple[list[np.ndarray], float, str]:
        sched = self.schedule
        assert sched is not None
        t = k * ctx.E
        pos = (k - 1) % (sched.K + sched.delta) + 1  # 1..K+delta within the cycle
        if sched.a_t(t):
            aged_step = t - sched.delta * sched.E
            operands = self._history[aged_step]
            mixed = []
            for i in range(ctx.M):
                prev = (i - 1) % ctx.M
                mixed.append(mix_models(models[i], operands[prev], ctx.alpha, 1))
                self.mix_events.append(
                    MixEvent(step=t, area=i, operand_step=aged_step, producer_area=prev)
                )
            models = mixed
            new_clock = self._cycle_start + sched.K * ctx.t_round_s + self._max_fly
            self._cycle_start = new_clock
            event = "mix"
        else:
            new_clock = self._cycle_start + pos * ctx.t_round_s
            event = "local"
        self._history[t] = [m.copy() for m in models]
        nxt = sched.next_mix_after(t)
        if nxt is None:
            self._history.clear()
        else:
            oldest = nxt - sched.delta * sched.E
            for s in [s for s in self._history if s < oldest]:
                del self._history[s]
        return models, new_clock, event


def run_fedmeld(
    config,
    seed: int | None = None,
    *,
    record_trace: bool = False,
    schedule: MixSchedule | None = None,
) -> RunResult:
    """Simulate the dispersal protocol for one seed of a validated config."""
    ctx = build_context(config, seed=seed, scheme="fedmeld")
    return simulate(ctx, FedmeldPolicy(schedule), record_trace=record_trace)


def influence_matrix(schedule: MixSchedule, alpha: float, steps: int) -> np.ndarray:
    """Weight of each area's initial aggregate in every current aggregate.

    Walks the mixing rule with gradient-free dynamics: between mixes the
    aggregates are fixed points of intra-area averaging, and each mix blends
    row i with the delta*E-old row i-1.  Row-stochastic at every step.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha={alpha} outside (0, 1)")
    m = schedule.M
    current = np.eye(m)
    history: dict[int, np.ndarray] = {}
    for t in schedule.sync_steps:
        if t > steps:
            break
        if schedule.a_t(t):
            aged = history[t - schedule.delta * schedule.E]
            rolled = np.roll(aged, 1, axis=0)  # row i receives old row i-1
            current = (1.0 - alpha) * current + alpha * rolled
        history[t] = current.copy()
        nxt = schedule.next_mix_after(t)
        if nxt is not None:
            history = {s: w for s, w in history.items() if s >= nxt - schedule.delta * schedule.E}
    return current
