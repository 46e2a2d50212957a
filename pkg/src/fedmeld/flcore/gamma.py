"""Non-IID degree estimation.

Gamma = F* - (1/M) sum_i (1/N_i) sum_j F_j*, the gap between the global
optimum and the weighted mean of per-client optima.  It is zero for IID data
and grows with heterogeneity, and it feeds the convergence-bound constants.
Only convex families are supported: the quadratic case is closed-form, the
logistic case is solved numerically, and anything else must supply Gamma as a
config scalar instead.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from ..errors import EstimationError, InvalidArgumentError
from .data import Dataset
from .models import LogisticFamily, ModelFamily, QuadraticFamily

_NEG_TOL = 1e-6


def _client_weights(partition: Sequence[Sequence[Dataset]]) -> list[tuple[Dataset, float]]:
    M = len(partition)
    if M == 0 or any(len(area) == 0 for area in partition):
        raise InvalidArgumentError("partition must be a non-empty area-major nesting")
    out = []
    for area in partition:
        for ds in area:
            out.append((ds, 1.0 / (M * len(area))))
    return out


def _gamma_quadratic(pairs, family: QuadraticFamily) -> float:
    dim = family.dim
    glob_a = 0.0
    glob_b = np.zeros(dim)
    glob_c = 0.0
    mean_opt = 0.0
    for ds, weight in pairs:
        a = ds.features[:, 0]
        c = ds.features[:, 1:]
        m_a = float(np.mean(a))
        m_ac = np.mean(a[:, None] * c, axis=0)
        m_ac2 = float(np.mean(a * np.sum(c * c, axis=1)))
        if m_a <= 0.0:
            raise EstimationError("quadratic client with non-positive mean curvature")
        f_star = 0.5 * m_ac2 - float(m_ac @ m_ac) / (2.0 * m_a)
        mean_opt += weight * f_star
        glob_a += weight * m_a
        glob_b += weight * m_ac
        glob_c += weight * 0.5 * m_ac2
    f_global = glob_c - float(glob_b @ glob_b) / (2.0 * glob_a)
    return f_global - mean_opt


def _minimize(family: ModelFamily, losses, grads, w0: np.ndarray, what: str) -> float:
    def fun(w):
        return sum(f(w) for f in losses)

    def jac(w):
        return sum(g(w) for g in grads)

    res = minimize(fun, w0, jac=jac, method="L-BFGS-B",
                   options={"maxiter": 2000, "ftol": 1e-14, "gtol": 1e-10})
    gnorm = float(np.max(np.abs(jac(res.x))))
    if not res.success and gnorm > 1e-6:
        raise EstimationError(
            f"inner solver failed on {what}: {res.message} (grad inf-norm {gnorm:.3e})"
        )
    return float(res.fun)


def estimate_gamma_noniid(
    partition: Sequence[Sequence[Dataset]], model_family: ModelFamily
) -> float:
    """Estimate Gamma over an area-major client partition.

    Raises EstimationError for non-convex families and on solver failure.
    """
    pairs = _client_weights(partition)
    if isinstance(model_family, QuadraticFamily):
        gamma = _gamma_quadratic(pairs, model_family)
    elif isinstance(model_family, LogisticFamily):
        w0 = model_family.init(np.random.default_rng(0))
        scaled_losses = []
        scaled_grads = []
        mean_opt = 0.0
        for ds, weight in pairs:
            loss = lambda w, d=ds: model_family.loss(w, d.features, d.labels)
            grad = lambda w, d=ds: model_family.grad(w, d.features, d.labels)
            mean_opt += weight * _minimize(model_family, [loss], [grad], w0, "a client objective")
            scaled_losses.append(lambda w, f=loss, s=weight: s * f(w))
            scaled_grads.append(lambda w, g=grad, s=weight: s * g(w))
        f_global = _minimize(model_family, scaled_losses, scaled_grads, w0, "the global objective")
        gamma = f_global - mean_opt
    else:
        raise EstimationError(
            "Gamma estimation needs a convex family (quadratic or logistic); "
            "configure data.gamma explicitly for this model"
        )
    if gamma < -_NEG_TOL:
        raise EstimationError(f"estimated Gamma is negative ({gamma:.3e}); solver diverged")
    return max(gamma, 0.0)
