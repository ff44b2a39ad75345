"""Stationary-point structure of the constrained cross-covariance problem.

Stationary points of u^T S v on the product of unit spheres are the
singular pairs of S plus null-space pairs when S is rank deficient, each
up to a joint sign flip. Stability is judged through the curvature left
after eliminating one block with the stationarity relation: at a point
with multiplier value c != 0, a tangent perturbation w of v feels
w^T ((1/c) S^T S - c I) w, together with a -c radial mode; at c = 0 the
reduction degenerates and the curvature is the top eigenvalue of the
symmetric coupling block. Any positive eigenvalue marks an escape
direction for the ascent dynamics, and every non-optimal point turns out
to clear the leading spectral gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracle

# A point must satisfy the first-order conditions to this accuracy before
# a curvature query is meaningful.
KKT_TOL = 1e-8

# Leading singular values closer than this leave the optimum unidentifiable.
GAP_TOL = 1e-8

# Stability threshold on the largest curvature eigenvalue.
STABILITY_TOL = 1e-8

KIND_STABLE = "global_optimum_stable"
KIND_SADDLE = "saddle_unstable"
KIND_NULL = "null_space_unstable"


@dataclass(frozen=True)
class StationaryPoint:
    """A stationary pair with its multiplier and curvature summary.

    multiplier is the common constraint multiplier, half the objective
    value at the point.
    """

    u: np.ndarray
    v: np.ndarray
    multiplier: float
    kind: str
    max_hessian_eig: float


def lagrangian_value(u, v, sigma_xy, multiplier: float) -> float:
    """Constrained objective with both multipliers frozen at the given value:
    u^T S v - mu(||u||^2 - 1) - mu(||v||^2 - 1)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    sigma = np.asarray(sigma_xy, dtype=float)
    return (
        float(u @ sigma @ v)
        - multiplier * (float(u @ u) - 1.0)
        - multiplier * (float(v @ v) - 1.0)
    )


def lagrangian_grad(u, v, sigma_xy) -> tuple[np.ndarray, np.ndarray]:
    """Gradient pair with multipliers substituted at their optimal values:
    g_u = S v - (u^T S v) u and g_v = S^T u - (u^T S v) v."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    sigma = np.asarray(sigma_xy, dtype=float)
    if sigma.shape != (u.size, v.size):
        raise ValueError("dimension mismatch between vectors and sigma_xy")
    c = float(u @ sigma @ v)
    return sigma @ v - c * u, sigma.T @ u - c * v


def kkt_residual(u, v, sigma_xy) -> float:
    """Max-norm violation of stationarity and of the unit-norm constraints."""
    g_u, g_v = lagrangian_grad(u, v, sigma_xy)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return max(
        float(np.abs(g_u).max()),
        float(np.abs(g_v).max()),
        abs(float(u @ u) - 1.0),
        abs(float(v @ v) - 1.0),
    )


def _complement_basis(v: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the hyperplane orthogonal to unit vector v."""
    d = v.size
    stacked = np.column_stack([v, np.eye(d)])
    q, _ = np.linalg.qr(stacked)
    return q[:, 1:d]


def lagrangian_hessian_max_eig(u, v, sigma_xy, *, kkt_tol: float = KKT_TOL) -> float:
    """Largest curvature eigenvalue at a stationary pair.

    For multiplier value c != 0 this is max(-c, lambda_max(W^T B W)) with
    B = (1/c) S^T S - c I and W an orthonormal basis of the tangent space
    at v; at the i-th singular pair it evaluates to
    max_{j != i} (s_j^2 - s_i^2)/s_i. At c = 0 it is the top eigenvalue of
    [[0, S], [S^T, 0]], i.e. the top singular value. Rejects inputs whose
    KKT residual exceeds kkt_tol, since classification is undefined off
    the stationary set.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    sigma = np.asarray(sigma_xy, dtype=float)
    resid = kkt_residual(u, v, sigma)
    if resid > kkt_tol:
        raise ValueError(
            f"point is not stationary: KKT residual {resid:.3e} exceeds {kkt_tol:.1e}"
        )
    c = float(u @ sigma @ v)
    scale = float(np.abs(sigma).max()) if sigma.size else 0.0
    if abs(c) <= kkt_tol * max(1.0, scale):
        m, d = sigma.shape
        block = np.zeros((m + d, m + d))
        block[:m, m:] = sigma
        block[m:, :m] = sigma.T
        evals, _ = oracle.symmetric_eig(block)
        return float(evals[0])
    basis = _complement_basis(v)
    b = (sigma.T @ sigma) / c - c * np.eye(v.size)
    reduced = basis.T @ b @ basis
    if reduced.size == 0:
        return -c
    evals, _ = oracle.symmetric_eig(reduced)
    return max(-c, float(evals[0]))


def _classify(c: float, eig: float, scale: float) -> str:
    if eig <= STABILITY_TOL:
        return KIND_STABLE
    if abs(c) <= KKT_TOL * max(1.0, scale):
        return KIND_NULL
    return KIND_SADDLE


def enumerate_stationary_points(sigma_xy) -> list[StationaryPoint]:
    """Isolated stationary pairs of the constrained problem.

    Returns one sign representative per nonzero singular value, plus one
    null-space representative when the matrix is rank deficient, each
    classified by its largest curvature eigenvalue. Raises when the two
    leading singular values nearly tie (the optimum is then a continuum
    and the leading pair unidentifiable).
    """
    sigma = np.asarray(sigma_xy, dtype=float)
    if sigma.ndim != 2:
        raise ValueError("sigma_xy must be a matrix")
    res = oracle.svd(sigma)
    vals = res.singular
    top = float(vals[0]) if vals.size else 0.0
    second = float(vals[1]) if vals.size > 1 else 0.0
    if top - second <= GAP_TOL:
        raise ValueError(
            f"leading singular values {top:.12g} and {second:.12g} nearly tie; "
            "the optimal pair is unidentifiable"
        )
    rank_tol = max(sigma.shape) * np.finfo(float).eps * max(top, 1.0)
    scale = float(np.abs(sigma).max()) if sigma.size else 0.0

    points: list[StationaryPoint] = []

    def add(u: np.ndarray, v: np.ndarray):
        c = float(u @ sigma @ v)
        eig = lagrangian_hessian_max_eig(u, v, sigma)
        points.append(
            StationaryPoint(
                u=u.copy(),
                v=v.copy(),
                multiplier=0.5 * c,
                kind=_classify(c, eig, scale),
                max_hessian_eig=eig,
            )
        )

    rank = sum(1 for s in vals if s > rank_tol)
    for i in range(rank):
        add(res.o_x[:, i], res.o_y[:, i])
    if rank < min(sigma.shape):
        add(res.o_x[:, rank], res.o_y[:, rank])
    return points
