"""Matrix stochastic gradient baseline on the convex relaxation.

The feasible set is the rank-1 spectral budget: singular values in [0, 1]
summing to at most 1. Each step adds the rank-1 sample term and projects
back with a full SVD; the projection cost is the point of comparison with
the projection-free streaming update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracle
from .core import TwoViewSample

# Bisection width on the shift parameter of the simplex projection.
_THETA_TOL = 1e-12


@dataclass(frozen=True)
class MsgIterate:
    M: np.ndarray
    step_count: int = 0


def capped_simplex_project(sigma, cap: float = 1.0, budget: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {s : 0 <= s_i <= cap, sum s_i <= budget}.

    If clipping to [0, cap] already meets the budget that clip is the
    projection; otherwise the budget binds and the projection is
    clip(sigma - theta, 0, cap) for the unique shift theta >= 0 balancing
    the budget, found by bisection.
    """
    s = np.asarray(sigma, dtype=float)
    if s.ndim != 1:
        raise ValueError("sigma must be a vector")
    if (s < 0).any():
        raise ValueError("sigma must be entrywise nonnegative")
    if cap <= 0 or budget <= 0:
        raise ValueError("cap and budget must be positive")
    clipped = np.clip(s, 0.0, cap)
    if float(clipped.sum()) <= budget:
        return clipped
    lo = 0.0
    hi = float(s.max())
    while hi - lo > _THETA_TOL:
        theta = 0.5 * (lo + hi)
        if float(np.clip(s - theta, 0.0, cap).sum()) > budget:
            lo = theta
        else:
            hi = theta
    return np.clip(s - 0.5 * (lo + hi), 0.0, cap)


def fantope_project(m_mat, cap: float = 1.0, budget: float = 1.0) -> np.ndarray:
    """Project a matrix onto the spectral capped-simplex set by projecting
    its singular values and reconstructing."""
    m_mat = np.asarray(m_mat, dtype=float)
    res = oracle.svd(m_mat)
    k = res.singular.size
    new_sigma = capped_simplex_project(res.singular, cap, budget)
    return (res.o_x[:, :k] * new_sigma) @ res.o_y[:, :k].T


def msg_step(it: MsgIterate, s: TwoViewSample, eta_k: float) -> MsgIterate:
    """One projected stochastic-gradient step M' = proj(M + eta_k x y^T)."""
    if eta_k < 0:
        raise ValueError("eta_k must be nonnegative")
    updated = it.M + eta_k * np.outer(s.x, s.y)
    return MsgIterate(fantope_project(updated), it.step_count + 1)


def msg_objective_gap(it, sigma_xy, lambda1: float) -> float:
    """Suboptimality lambda1 - <M, Sigma> of the convex objective."""
    m_mat = it.M if isinstance(it, MsgIterate) else np.asarray(it, dtype=float)
    sigma = np.asarray(sigma_xy, dtype=float)
    if m_mat.shape != sigma.shape:
        raise ValueError("M and sigma_xy must have the same shape")
    return float(lambda1 - (m_mat * sigma).sum())


def leading_pair(it) -> tuple[np.ndarray, np.ndarray, float]:
    """Top singular triplet of the iterate, the common comparison metric
    with the vector-valued solver."""
    m_mat = it.M if isinstance(it, MsgIterate) else np.asarray(it, dtype=float)
    res = oracle.svd(m_mat)
    return res.o_x[:, 0].copy(), res.o_y[:, 0].copy(), float(res.singular[0])
