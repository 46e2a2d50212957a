"""Convergence-bound calculator and the staleness/mixing-ratio solver.

The protocol exposes two knobs: the staleness interval delta (global rounds
between a carrier satellite's departure from an area and its mixing at the
next one) and the mixing ratio alpha (the convex weight on the carried,
delta*E-iterations-stale model).  Everything else enters the loss bound
through constants: smoothness L, strong convexity mu, the gradient bound G,
per-client noise, the non-IID degree Gamma, the sampling sizes, and the
diminishing learning-rate schedule.

Minimizing the bound under a wall-clock limit splits into two stages: the
latency constraint alone fixes the smallest workable delta (the bound grows
with delta, so smallest is best), and alpha is then a scalar root-finding
problem on the bound's derivative over the interval where the divergence
recursion contracts (kappa_1 < 1).

A note on that interval: kappa_1(alpha) = A*(1-alpha)^2 + rho*alpha^2 with
A = rho^{(K+delta)/(K+1)} > 1 satisfies kappa_1(0) = A > 1, so contraction
never holds in a neighbourhood of alpha = 0.  The usable alphas form an
open band strictly inside (0, 1) whenever A < rho/(rho-1); the bound
diverges to +inf at the band's edges.  Helpers below expose the band so
callers can grid or bracket safely.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, InvalidConfigError, ValidityError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundParams:
    """Constants of the convergence bound.

    ``sigma_j`` is area-major: one tuple of per-client gradient-noise
    deviations per area.  ``R`` counts local iteration steps (sync steps
    are multiples of E).  ``rho`` is the auxiliary contraction base; its
    admissibility depends on alpha and is checked where alpha is known,
    not at construction.
    """

    L: float
    mu: float
    G: float
    sigma_j: tuple[tuple[float, ...], ...]
    Gamma: float
    E: int
    K: int
    R: int
    N_i: tuple[int, ...]
    U_i: tuple[int, ...]
    init_gap: float
    rho: float = 1.5

    def __post_init__(self):
        if self.mu <= 0 or self.L < self.mu:
            raise InvalidConfigError("need L >= mu > 0")
        if self.G < 0 or self.Gamma < 0 or self.init_gap < 0:
            raise InvalidConfigError("G, Gamma and init_gap must be non-negative")
        if self.E < 1 or self.K < 1 or self.R < 1:
            raise InvalidConfigError("E, K and R must be >= 1")
        if self.rho <= 1.0:
            raise InvalidConfigError("rho must exceed 1")
        n_i = tuple(int(n) for n in self.N_i)
        u_i = tuple(int(u) for u in self.U_i)
        sig = tuple(tuple(float(s) for s in row) for row in self.sigma_j)
        object.__setattr__(self, "N_i", n_i)
        object.__setattr__(self, "U_i", u_i)
        object.__setattr__(self, "sigma_j", sig)
        if len(n_i) == 0 or len(n_i) != len(u_i) or len(sig) != len(n_i):
            raise InvalidConfigError("N_i, U_i and sigma_j must have one entry per area")
        for n, u, row in zip(n_i, u_i, sig):
            if not 1 <= u <= n:
                raise InvalidConfigError(f"need 1 <= U_i <= N_i, got U={u}, N={n}")
            if len(row) != n:
                raise InvalidConfigError("sigma_j rows must have N_i entries")
            if any(s < 0 for s in row):
                raise InvalidConfigError("sigma values must be non-negative")

    @classmethod
    def uniform(
        cls,
        *,
        L: float,
        mu: float,
        G: float,
        sigma: float,
        Gamma: float,
        E: int,
        K: int,
        R: int,
        M: int,
        N: int,
        U: int,
        init_gap: float,
        rho: float = 1.5,
    ) -> "BoundParams":
        """Convenience constructor for M identical areas."""
        return cls(
            L=L,
            mu=mu,
            G=G,
            sigma_j=tuple((float(sigma),) * N for _ in range(M)),
            Gamma=Gamma,
            E=E,
            K=K,
            R=R,
            N_i=(N,) * M,
            U_i=(U,) * M,
            init_gap=init_gap,
            rho=rho,
        )

    @property
    def M(self) -> int:
        return len(self.N_i)

    @property
    def gamma(self) -> float:
        return max(8.0 * self.L / self.mu, float(self.E)) - 1.0

    @property
    def b(self) -> float:
        return self.rho ** (1.0 / (self.K + 1)) - 1.0

    @property
    def B(self) -> float:
        m = self.M
        total = 0.0
        for n, row in zip(self.N_i, self.sigma_j):
            total += sum(s * s for s in row) / (m * n) ** 2
        return total + 6.0 * self.L * self.Gamma


@dataclass(frozen=True)
class LatencyEnvelope:
    """Wall-clock side of the problem: deadline and worst flight time."""

    T_max_s: float
    max_fly_s: float
    E: int
    R: int
    K: int

    def __post_init__(self):
        if self.T_max_s <= 0 or self.max_fly_s <= 0:
            raise InvalidConfigError("T_max_s and max_fly_s must be positive")
        if self.E < 1 or self.R < 1 or self.K < 1:
            raise InvalidConfigError("E, R and K must be >= 1")


def _eta(mu: float, gamma: float, t: float) -> float:
    return 5.0 / (mu * (gamma + t))


def m_alpha(alpha: float) -> float:
    """Staleness-tolerance function; strictly decreasing on (0, 1).

    Returns +inf at alpha = 0 (no mixing means no staleness constraint).
    """
    if alpha < 0.0 or alpha > 1.0:
        raise InvalidArgumentError(f"alpha={alpha} outside [0, 1]")
    if alpha == 0.0:
        return math.inf
    num = 4.0 * (1.0 - alpha) * (2.0 * alpha * alpha - alpha + 1.0)
    den = alpha * (2.0 * alpha * alpha - 3.0 * alpha + 3.0)
    return num / den


def kappas(
    alpha: float, delta: int, K: int, E: int, G: float, rho: float = 1.5
) -> tuple[float, float]:
    """Divergence-recursion constants (kappa_1, kappa_2).

    Valid for delta < K + 2 with b = rho^{1/(K+1)} - 1.  kappa_1 < 1 is not
    guaranteed for every alpha; see kappa1_valid_interval.
    """
    if delta < 1:
        raise InvalidArgumentError("delta must be >= 1")
    if delta >= K + 2:
        raise ValidityError(f"delta={delta} outside validity range delta < K+2 = {K + 2}")
    if not 0.0 <= alpha < 1.0:
        raise InvalidArgumentError(f"alpha={alpha} outside [0, 1)")
    if rho <= 1.0:
        raise InvalidArgumentError("rho must exceed 1")
    p = rho ** (1.0 / (K + 1))
    big_a = rho ** ((K + delta) / (K + 1))
    k1 = big_a * (1.0 - alpha) ** 2 + rho * alpha * alpha
    k2 = 4.0 * (E - 1) ** 2 * G * G * p / (p - 1.0) * (k1 / (p - 1.0) + (1.0 - alpha) ** 2)
    return k1, k2


def kappa1_valid_interval(delta: int, K: int, rho: float = 1.5) -> tuple[float, float] | None:
    """Open interval of alphas where kappa_1 < 1, or None when empty.

    The edges are the roots of (A+rho)a^2 - 2Aa + A - 1 with
    A = rho^{(K+delta)/(K+1)}; both lie strictly inside (0, 1).
    """
    if delta < 1 or K < 1 or rho <= 1.0:
        raise InvalidArgumentError("need delta >= 1, K >= 1, rho > 1")
    big_a = rho ** ((K + delta) / (K + 1))
    disc = big_a + rho - big_a * rho
    if disc <= 0.0:
        return None
    root = math.sqrt(disc)
    return (big_a - root) / (big_a + rho), (big_a + root) / (big_a + rho)


def _sampling_term(params: BoundParams) -> float:
    worst = 0.0
    for n, u in zip(params.N_i, params.U_i):
        if u == n:
            continue
        worst = max(worst, (n - u) / (params.M * u * (n - 1)))
    return worst


def zetas(params: BoundParams, eta_R: float) -> tuple[float, float, float]:
    """The three bound constants for a given final-step learning rate."""
    if eta_R <= 0:
        raise InvalidArgumentError("eta_R must be positive")
    samp = _sampling_term(params)
    b = params.b
    z1 = (
        params.L
        / (params.mu * (params.R + params.gamma))
        * (25.0 * params.B / (8.0 * params.mu) + params.mu * (params.gamma + 1.0) / 2.0 * params.init_gap)
    )
    z2 = params.L * ((1.0 + b) / 2.0 * samp + 1.0)
    z3 = (
        2.0
        * params.L
        * (1.0 + 1.0 / b)
        * (params.E - 1) ** 2
        * params.G**2
        * eta_R**2
        * samp
    )
    return z1, z2, z3


def bound(delta: int, alpha: float, params: BoundParams) -> float:
    """Loss-gap bound at step R as a function of the two design knobs.

    Composes the drift term with eta_E^2 * kappa_2 / (1 - kappa_1); under
    full participation this is exactly the full-participation bound.
    """
    if not 0.0 <= alpha <= 0.5:
        raise InvalidArgumentError(f"alpha={alpha} outside [0, 1/2]")
    k1, k2 = kappas(alpha, delta, params.K, params.E, params.G, params.rho)
    if k1 >= 1.0:
        raise ValidityError(
            f"kappa_1={k1:.6g} >= 1 at alpha={alpha:.6g}, delta={delta}; bound undefined"
        )
    gamma = params.gamma
    eta_e = _eta(params.mu, gamma, params.E)
    eta_r = _eta(params.mu, gamma, params.R)
    z1, z2, z3 = zetas(params, eta_r)
    h = 1.0 / (1.0 - alpha) - alpha + 0.5
    return z1 * h + z2 * eta_e**2 * k2 / (1.0 - k1) + z3


def bound_curve(delta: int, alphas: np.ndarray, params: BoundParams) -> np.ndarray:
    """Vectorized bound over an alpha grid; +inf where kappa_1 >= 1.

    The +inf continuation is the right one for minimization: the bound
    diverges approaching the contraction band's edges from inside.
    """
    a = np.asarray(alphas, dtype=float)
    if a.size and (a.min() < 0.0 or a.max() > 0.5):
        raise InvalidArgumentError("alpha grid must lie in [0, 1/2]")
    if delta < 1:
        raise InvalidArgumentError("delta must be >= 1")
    if delta >= params.K + 2:
        raise ValidityError(f"delta={delta} outside validity range delta < K+2 = {params.K + 2}")
    rho, K, E, G = params.rho, params.K, params.E, params.G
    p = rho ** (1.0 / (K + 1))
    big_a = rho ** ((K + delta) / (K + 1))
    k1 = big_a * (1.0 - a) ** 2 + rho * a * a
    k2 = 4.0 * (E - 1) ** 2 * G * G * p / (p - 1.0) * (k1 / (p - 1.0) + (1.0 - a) ** 2)
    gamma = params.gamma
    eta_e = _eta(params.mu, gamma, E)
    eta_r = _eta(params.mu, gamma, params.R)
    z1, z2, z3 = zetas(params, eta_r)
    h = 1.0 / (1.0 - a) - a + 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = z1 * h + z2 * eta_e**2 * k2 / (1.0 - k1) + z3
    return np.where(k1 < 1.0, vals, np.inf)


def optimal_delta(R: int, E: int, T_max: float, max_fly: float, K: int) -> int:
    """Smallest integer staleness interval meeting the deadline.

    Ceiling of (R-1)*max_fly/(E*T_max) - K, clamped to at least 1.  The
    ceiling errs upward, which keeps the deadline satisfied.
    """
    if R < 1 or E < 1 or K < 1:
        raise InvalidArgumentError("R, E and K must be >= 1")
    if T_max <= 0 or max_fly <= 0:
        raise InvalidArgumentError("T_max and max_fly must be positive")
    raw = (R - 1) * max_fly / (E * T_max) - K
    return max(1, math.ceil(raw))


def alpha_tilde(delta_star: int, E: int, K: int, gamma: float) -> float:
    """Largest mixing ratio the staleness constraint admits.

    Inverts the strictly decreasing m at the constraint's binding step,
    the one just before the first mixing event.
    """
    if delta_star < 1 or E < 1 or K < 1:
        raise InvalidArgumentError("delta_star, E and K must be >= 1")
    if gamma < 0:
        raise InvalidArgumentError("gamma must be non-negative")
    s1 = (K + delta_star) * E + gamma  # t + gamma + 1 at the binding step
    rhs = delta_star * E * (s1 - 1.0) ** 2 / (s1 * (K * E + gamma))
    if rhs <= 0.0:
        raise ValidityError("staleness threshold is non-positive")
    lo, hi = 1e-30, 1.0
    if m_alpha(lo) <= rhs:
        raise ValidityError("staleness threshold exceeds the representable range")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if m_alpha(mid) > rhs:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def f_prime(alpha: float, delta_star: int, params: BoundParams) -> float:
    """Derivative of the bound in alpha at fixed delta.

    Matches central finite differences of ``bound``; in particular it
    carries the factor 2 from differentiating kappa_2/(1-kappa_1) (whose
    quotient rule yields 2*g1/g2^2) and the eta_E^2 factor on that term.
    """
    if not 0.0 < alpha <= 0.5:
        raise InvalidArgumentError(f"alpha={alpha} outside (0, 1/2]")
    K, E, G, rho = params.K, params.E, params.G, params.rho
    if delta_star < 1:
        raise InvalidArgumentError("delta_star must be >= 1")
    if delta_star >= K + 2:
        raise ValidityError(f"delta={delta_star} outside validity range delta < K+2 = {K + 2}")
    p = rho ** (1.0 / (K + 1))
    big_a = rho ** ((K + delta_star) / (K + 1))
    base = 4.0 * (E - 1) ** 2 * G * G * p
    d1 = base / (p - 1.0) ** 2
    d2 = base / (p - 1.0)
    g1 = (
        -rho * d2 * alpha * alpha
        + ((big_a + rho) * d1 + (rho + 1.0) * d2) * alpha
        - (big_a * d1 + d2)
    )
    g2 = (big_a + rho) * alpha * alpha - 2.0 * big_a * alpha + big_a - 1.0
    gamma = params.gamma
    eta_e = _eta(params.mu, gamma, E)
    eta_r = _eta(params.mu, gamma, params.R)
    z1, z2, _ = zetas(params, eta_r)
    return z1 * (1.0 / (1.0 - alpha) ** 2 - 1.0) + 2.0 * z2 * eta_e**2 * g1 / (g2 * g2)


def _alpha_dot(delta_star: int, params: BoundParams, tol: float = 1e-10) -> float | None:
    """Unconstrained-in-(0,1/2] minimizer of the bound, or None if no alpha
    admits a valid bound at all."""
    band = kappa1_valid_interval(delta_star, params.K, params.rho)
    if band is None:
        return None
    a_lo, a_hi = band
    lo = a_lo + max(1e-15, a_lo * 1e-9)
    upper = min(0.5, a_hi - max(1e-15, a_hi * 1e-9))
    if upper <= lo:
        return None
    f_hi = f_prime(upper, delta_star, params)
    if f_hi <= 0.0:
        return upper
    f_lo = f_prime(lo, delta_star, params)
    if f_lo >= 0.0:
        # numerically possible only for a hair-thin band
        return lo
    a, b = lo, upper
    fa, fb = f_lo, f_hi
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = f_prime(mid, delta_star, params)
        if abs(fm) <= tol:
            return mid
        if fm < 0.0:
            a, fa = mid, fm
        else:
            b, fb = mid, fm
        if b - a <= 1e-16:
            break
    return a if abs(fa) <= abs(fb) else b


def optimal_alpha(delta_star: int, params: BoundParams) -> float:
    """Mixing ratio minimizing the bound subject to the staleness cap.

    Returns 0.0 (pure FedAvg, no mixing) with a logged diagnostic when no
    feasible alpha admits a valid bound.
    """
    atil = alpha_tilde(delta_star, params.E, params.K, params.gamma)
    band = kappa1_valid_interval(delta_star, params.K, params.rho)
    if band is None or min(atil, 0.5) <= band[0]:
        logger.warning(
            "no mixing ratio in (0, min(alpha_tilde=%.4g, 1/2)] admits kappa_1 < 1 "
            "(delta=%d, K=%d, rho=%.3g); falling back to alpha*=0",
            atil,
            delta_star,
            params.K,
            params.rho,
        )
        return 0.0
    adot = _alpha_dot(delta_star, params)
    if adot is None:
        logger.warning("contraction band empty for delta=%d; falling back to alpha*=0", delta_star)
        return 0.0
    return min(adot, atil)


def staleness_feasible(
    delta: int, alpha: float, E: int, gamma: float, R: int, *, K: int
) -> bool:
    """Whether the staleness condition holds at every mixing step up to R.

    The condition's right side increases in t for alpha <= 1/2, so the step
    just before the first mixing event binds; later cycles only relax it.
    """
    if delta == 0:
        return True
    if delta < 0 or E < 1 or R < 1 or K < 1:
        raise InvalidArgumentError("need delta >= 0 and E, R, K >= 1")
    if not 0.0 < alpha <= 0.5:
        raise InvalidArgumentError(f"alpha={alpha} outside (0, 1/2]")
    first_mix = (K + delta) * E
    if R < first_mix:
        return True  # horizon ends before any mixing event
    m = m_alpha(alpha)
    t = first_mix - 1
    s = t + gamma
    rhs = m * (s + 1.0) ** 2 / (s * s + m * (s + 1.0))
    return delta * E <= rhs * (1.0 + 1e-12)


@dataclass(frozen=True)
class ScmrReport:
    """Solver output: the chosen knobs plus diagnostics."""

    delta_star: int
    alpha_tilde: float
    alpha_dot: float
    alpha_star: float
    bound_at_star: float | None
    f_prime_at_dot: float | None
    kappa1_at_star: float | None
    bound_valid_at_optimum: bool
    notes: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "delta_star": self.delta_star,
            "alpha_tilde": self.alpha_tilde,
            "alpha_dot": self.alpha_dot,
            "alpha_star": self.alpha_star,
            "bound_at_star": self.bound_at_star,
            "f_prime_at_dot": self.f_prime_at_dot,
            "kappa1_at_star": self.kappa1_at_star,
            "bound_valid_at_optimum": self.bound_valid_at_optimum,
            "notes": list(self.notes),
        }


def solve_scmr(envelope: LatencyEnvelope, params: BoundParams) -> ScmrReport:
    """Two-stage solve: delta from the deadline, then alpha from the bound."""
    if (envelope.E, envelope.R, envelope.K) != (params.E, params.R, params.K):
        raise InvalidConfigError("envelope and bound params disagree on E, R or K")
    notes: list[str] = []
    dstar = optimal_delta(envelope.R, envelope.E, envelope.T_max_s, envelope.max_fly_s, envelope.K)
    gamma = params.gamma
    atil = alpha_tilde(dstar, params.E, params.K, gamma)

    if dstar >= params.K + 2:
        notes.append(
            f"delta*={dstar} exceeds the divergence recursion's validity (delta < K+2); "
            "no bound certificate is available, alpha falls back to the staleness cap"
        )
        return ScmrReport(
            delta_star=dstar,
            alpha_tilde=atil,
            alpha_dot=math.nan,
            alpha_star=min(atil, 0.5),
            bound_at_star=None,
            f_prime_at_dot=None,
            kappa1_at_star=None,
            bound_valid_at_optimum=False,
            notes=tuple(notes),
        )

    adot = _alpha_dot(dstar, params)
    astar = optimal_alpha(dstar, params)
    band = kappa1_valid_interval(dstar, params.K, params.rho)
    valid = band is not None and adot is not None and band[0] < astar < band[1] and astar <= 0.5
    bound_val = None
    fprime_val = None
    kappa1_val = None
    if valid:
        bound_val = bound(dstar, astar, params)
        kappa1_val = kappas(astar, dstar, params.K, params.E, params.G, params.rho)[0]
        fprime_val = f_prime(adot, dstar, params)
    else:
        notes.append(
            "alpha*=0 fallback: no alpha under the staleness cap admits kappa_1 < 1, "
            "so the run proceeds without a bound certificate"
        )
    return ScmrReport(
        delta_star=dstar,
        alpha_tilde=atil,
        alpha_dot=math.nan if adot is None else adot,
        alpha_star=astar,
        bound_at_star=bound_val,
        f_prime_at_dot=fprime_val,
        kappa1_at_star=kappa1_val,
        bound_valid_at_optimum=valid,
        notes=tuple(notes),
    )
