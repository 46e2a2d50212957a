"""Scheme-agnostic simulation loop.

One engine runs every scheme.  A policy object supplies the cross-area
behavior: when area models merge, how the simulated clock advances, and
which event label a round carries.  Client selection, local training and
intra-area aggregation are shared, so degenerate configurations (one area,
zero mixing) collapse to the same trajectory bit for bit across schemes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Protocol

import numpy as np

from .errors import EstimationError, InvalidConfigError
from .flcore import (
    ClientRuntime,
    Dataset,
    LrSchedule,
    ModelFamily,
    accuracy,
    estimate_gamma_noniid,
    fedavg,
    global_loss,
    local_train,
    select_clients,
)
from .geometry import (
    ServePlan,
    fly_times,
    orbital_period,
    rounds_per_serve,
    serve_duration,
)
from .linkmodel import round_latency
from .records import MetricsRecord, RunResult
from .rng import substream
from .scmr import BoundParams, LatencyEnvelope, optimal_delta, solve_scmr

if TYPE_CHECKING:  # pragma: no cover - typing only, avoids a runtime cycle
    from .harness.config import RunConfig


@dataclass
class SimContext:
    """Everything one run needs; policies read it, nobody mutates it."""

    scheme: str
    master_seed: int
    E: int
    rounds: int
    family: ModelFamily
    area_clients: list[list[ClientRuntime]]
    u_per_area: tuple[int, ...]
    schedule: LrSchedule
    test_set: Dataset | None
    init_model: np.ndarray
    K: int
    delta: int
    alpha: float
    q_bits: int
    t_round_s: float
    serve_plan: ServePlan
    period_s: float
    round_traffic_bits: int
    isl_rate_bps: float
    hfl_stall_s: float
    ring_chunks: int | None = None
    max_sim_s: float | None = None
    solver_report: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return len(self.area_clients)

    @property
    def R_steps(self) -> int:
        return self.rounds * self.E


class Policy(Protocol):
    """Cross-area step hook; implementations may expose mix_events/idle_ledger."""

    name: str

    def start(self, ctx: SimContext) -> None: ...

    def on_round(
        self, ctx: SimContext, k: int, models: list[np.ndarray], clock: float
    ) -> tuple[list[np.ndarray], float, str]: ...


def simulate(ctx: SimContext, policy: Policy, *, record_trace: bool = False) -> RunResult:
    """Run the shared loop: select, train locally, aggregate, apply the policy."""
    models = [ctx.init_model.copy() for _ in range(ctx.M)]
    clock = 0.0
    records: list[MetricsRecord] = []
    trace: list[list[np.ndarray]] | None = [] if record_trace else None
    policy.start(ctx)
    for k in range(1, ctx.rounds + 1):
        t0 = (k - 1) * ctx.E + 1
        v_bar: list[np.ndarray] = []
        for i, area in enumerate(ctx.area_clients):
            rng = substream(ctx.master_seed, "selection", str(i), str(k))
            picked = select_clients(area, ctx.u_per_area[i], rng)
            local = [local_train(models[i], c, ctx.E, ctx.schedule, t0) for c in picked]
            v_bar.append(fedavg(local))
        models, clock, event = policy.on_round(ctx, k, v_bar, clock)
        if ctx.max_sim_s is not None and clock > ctx.max_sim_s:
            break  # the over-budget round is not emitted
        consensus = fedavg(models)
        per_area = tuple(
            sum(c.loss(models[i]) for c in area) / len(area)
            for i, area in enumerate(ctx.area_clients)
        )
        acc = accuracy(ctx.family, consensus, ctx.test_set) if ctx.test_set is not None else math.nan
        records.append(
            MetricsRecord(
                k=k,
                t_sim_s=clock,
                loss_global=global_loss(consensus, ctx.area_clients),
                acc_test=acc,
                traffic_bits=ctx.round_traffic_bits,
                event=event,
                per_area_loss=per_area,
            )
        )
        if trace is not None:
            trace.append([m.copy() for m in models])
    report = {
        "scheme": ctx.scheme,
        "seed": ctx.master_seed,
        "M": ctx.M,
        "E": ctx.E,
        "rounds_planned": ctx.rounds,
        "rounds_run": len(records),
        "K": ctx.K,
        "delta": ctx.delta,
        "alpha": ctx.alpha,
        "q_bits": ctx.q_bits,
        "U_total": int(sum(ctx.u_per_area)),
        "t_round_s": ctx.t_round_s,
        "serve_duration_s": ctx.serve_plan.serve_duration_s,
        "period_s": ctx.period_s,
        "max_fly_s": max(ctx.serve_plan.fly_time_s),
        "traffic_per_round_bits": ctx.round_traffic_bits,
        "solver": dict(ctx.solver_report),
    }
    return RunResult(
        scheme=ctx.scheme,
        records=records,
        final_models=models,
        final_global=fedavg(models),
        mix_events=list(getattr(policy, "mix_events", [])),
        idle_ledger=dict(getattr(policy, "idle_ledger", {})),
        report=report,
        model_trace=trace,
    )


def bound_params_from_config(config: "RunConfig", *, K: int, gamma_hint: float | None = None) -> BoundParams:
    """Assemble the bound constants from the config's fedmeld block.

    The non-IID degree comes from the config when given, otherwise from the
    convex-family estimator (``gamma_hint`` carries a precomputed value so the
    data is not re-partitioned).
    """
    fm = config.fedmeld
    missing = [k for k in ("L", "mu", "G", "sigma", "init_gap") if fm.get(k) is None]
    if missing:
        raise InvalidConfigError(
            "scmr solve needs bound constants; missing fedmeld keys: " + ", ".join(missing)
        )
    gamma_val = fm.get("gamma")
    if gamma_val is None:
        if gamma_hint is None:
            raise InvalidConfigError(
                "fedmeld.gamma not set and no estimate available for this model family"
            )
        gamma_val = gamma_hint
    n_i = config.clients_per_area
    u_i = config.participation_u(n_i)
    return BoundParams(
        L=float(fm["L"]),
        mu=float(fm["mu"]),
        G=float(fm["G"]),
        sigma_j=tuple((float(fm["sigma"]),) * n for n in n_i),
        Gamma=float(gamma_val),
        E=config.E,
        K=K,
        R=config.R,
        N_i=tuple(n_i),
        U_i=tuple(u_i),
        init_gap=float(fm["init_gap"]),
        rho=float(fm.get("rho", 1.5)),
    )


def _resolve_knobs(
    config: "RunConfig",
    *,
    K: int,
    max_fly_s: float,
    family: ModelFamily,
    area_data: list[list[Dataset]],
) -> tuple[int, float, dict]:
    """Pick (delta, alpha) either from the config or from the SC-MR solver."""
    fm = config.fedmeld
    mode = fm.get("scmr_mode", "auto")
    if mode == "fixed":
        delta = fm.get("delta")
        alpha = fm.get("alpha")
        if delta is None or alpha is None:
            raise InvalidConfigError("scmr_mode=fixed requires fedmeld.delta and fedmeld.alpha")
        return int(delta), float(alpha), {"mode": "fixed", "delta": int(delta), "alpha": float(alpha)}
    gamma_hint = None
    if fm.get("gamma") is None:
        try:
            gamma_hint = estimate_gamma_noniid(area_data, family)
        except EstimationError:
            gamma_hint = None  # non-convex family; the config must supply gamma
    params = bound_params_from_config(config, K=K, gamma_hint=gamma_hint)
    envelope = LatencyEnvelope(
        T_max_s=config.T_max_s, max_fly_s=max_fly_s, E=config.E, R=config.R, K=K
    )
    report = solve_scmr(envelope, params)
    out = report.to_dict()
    out["mode"] = "auto"
    if gamma_hint is not None:
        out["gamma_estimate"] = gamma_hint
    return report.delta_star, report.alpha_star, out


def solve_from_config(config: "RunConfig", seed: int | None = None) -> dict:
    """Run only the staleness/mixing solver for a config, no simulation.

    Ignores scmr_mode so a fixed-knob config can still be interrogated, but
    the bound constants must be present either way.
    """
    seed = config.seeds[0] if seed is None else int(seed)
    geom = config.geometry()
    budget = config.link_budget()
    profile = config.compute_profile()
    family, area_data, _ = config.build_family_and_data(seed)
    total = sum(len(a) for a in area_data)
    q = config.model_bits if config.model_bits is not None else 64 * family.dim
    t_round = round_latency(profile, budget, [profile.client_flops] * total, config.slant_range_m, q)
    window = serve_duration(geom)
    fly = fly_times(geom)
    k_cfg = config.fedmeld.get("K", "auto")
    K = rounds_per_serve(window, t_round) if k_cfg == "auto" else int(k_cfg)
    gamma_hint = None
    if config.fedmeld.get("gamma") is None:
        gamma_hint = estimate_gamma_noniid(area_data, family)
    params = bound_params_from_config(config, K=K, gamma_hint=gamma_hint)
    envelope = LatencyEnvelope(
        T_max_s=config.T_max_s, max_fly_s=max(fly), E=config.E, R=config.R, K=K
    )
    report = solve_scmr(envelope, params)
    out = report.to_dict()
    out.update(
        {
            "K": K,
            "t_round_s": t_round,
            "serve_duration_s": window,
            "max_fly_s": max(fly),
            "T_max_s": config.T_max_s,
        }
    )
    if gamma_hint is not None:
        out["gamma_estimate"] = gamma_hint
    return out


def build_context(config: "RunConfig", seed: int | None = None, scheme: str | None = None) -> SimContext:
    """Construct the full simulation state for one seed of one scheme."""
    from .baselines import comm_cost  # runtime import; baselines imports this module

    scheme = scheme or config.scheme
    master_seed = config.seeds[0] if seed is None else int(seed)
    geom = config.geometry()
    budget = config.link_budget()
    profile = config.compute_profile()
    family, area_data, test_set = config.build_family_and_data(master_seed)
    if len(area_data) != geom.num_areas:
        raise InvalidConfigError(
            f"partition produced {len(area_data)} areas but geometry has {geom.num_areas}"
        )
    area_clients: list[list[ClientRuntime]] = []
    for i, area in enumerate(area_data):
        area_clients.append(
            [
                ClientRuntime(family, ds, profile.batch_size, substream(master_seed, "batching", str(i), str(j)))
                for j, ds in enumerate(area)
            ]
        )
    n_i = [len(a) for a in area_clients]
    u_i = config.participation_u(n_i)
    q = config.model_bits if config.model_bits is not None else 64 * family.dim
    t_round = round_latency(profile, budget, [profile.client_flops] * sum(n_i), config.slant_range_m, q)
    window = serve_duration(geom)
    fly = fly_times(geom)
    k_cfg = config.fedmeld.get("K", "auto")
    K = rounds_per_serve(window, t_round) if k_cfg == "auto" else int(k_cfg)
    plan = ServePlan(serve_duration_s=window, fly_time_s=fly, K=K)

    if scheme == "fedmeld":
        delta, alpha, solver_report = _resolve_knobs(
            config, K=K, max_fly_s=max(fly), family=family, area_data=area_data
        )
    else:
        # baselines share the exchange period K+delta; alpha never applies
        fm = config.fedmeld
        if fm.get("scmr_mode", "auto") == "fixed" and fm.get("delta") is not None:
            delta = int(fm["delta"])
        else:
            delta = optimal_delta(config.R, config.E, config.T_max_s, max(fly), K)
        alpha = 0.0
        solver_report = {"mode": "period_only", "delta": delta}

    if config.R < config.E:
        raise InvalidConfigError("R must cover at least one global round (R >= E)")
    rounds = config.R // config.E
    schedule = LrSchedule(
        mu=float(config.fedmeld.get("mu") or 1.0),
        l_smooth=float(config.fedmeld.get("L") or 1.0),
        E=config.E,
    )
    init_rng = substream(master_seed, "init")
    init_model = family.init(init_rng)
    cost = comm_cost(scheme, U=sum(u_i), M=geom.num_areas, q=q)
    return SimContext(
        scheme=scheme,
        master_seed=master_seed,
        E=config.E,
        rounds=rounds,
        family=family,
        area_clients=area_clients,
        u_per_area=tuple(u_i),
        schedule=schedule,
        test_set=test_set,
        init_model=init_model,
        K=K,
        delta=delta,
        alpha=alpha,
        q_bits=q,
        t_round_s=t_round,
        serve_plan=plan,
        period_s=orbital_period(geom),
        round_traffic_bits=cost.traffic_bits,
        isl_rate_bps=config.isl_rate_bps,
        hfl_stall_s=config.hfl_stall_s(orbital_period(geom)),
        ring_chunks=config.ring_chunks,
        max_sim_s=config.max_sim_s,
        solver_report=solver_report,
    )
