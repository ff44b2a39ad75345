"""Self-contained numerical ground-truth routines.

The routines here are deliberately independent of the iterative solvers they
are used to check: the SVD is a cyclic one-sided Jacobi, the symmetric
eigensolver a cyclic two-sided Jacobi, and the inverse normal CDF a rational
approximation polished with a Newton step on an erf-based CDF. The test
suite leans on them as reference answers, and a few production paths reuse
them directly (spectral basis construction, Fantope projection,
stationary-point enumeration).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

MAX_SWEEPS = 60


class ConvergenceError(RuntimeError):
    """An iterative oracle routine failed to converge."""


@dataclass(frozen=True)
class SvdResult:
    """Full orthogonal factors of A = o_x[:, :k] @ diag(singular) @ o_y[:, :k].T.

    o_x is square (m, m), o_y square (d, d), singular has length
    k = min(m, d) and is nonnegative and descending.
    """

    o_x: np.ndarray
    singular: np.ndarray
    o_y: np.ndarray


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError("expected a nonempty 2-D array")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return a


def _complete_columns(cols: list[np.ndarray], dim: int) -> list[np.ndarray]:
    # Modified Gram-Schmidt against the existing columns, one
    # re-orthogonalization pass, candidates taken from the identity.
    for k in range(dim):
        if len(cols) == dim:
            break
        cand = np.zeros(dim)
        cand[k] = 1.0
        for _ in range(2):
            for c in cols:
                cand = cand - (c @ cand) * c
        nrm = math.sqrt(float(cand @ cand))
        if nrm > 1e-8:
            cols.append(cand / nrm)
    if len(cols) != dim:
        raise ConvergenceError("failed to complete an orthonormal basis")
    return cols


def _flip_sign(col: np.ndarray) -> float:
    # Orientation rule: the largest-magnitude entry is made positive.
    i = int(np.argmax(np.abs(col)))
    return -1.0 if col[i] < 0.0 else 1.0


def svd(a) -> SvdResult:
    """Cyclic one-sided Jacobi SVD with full orthogonal factors.

    Column pairs of a working copy are rotated until every Gram entry
    satisfies |g_pq| <= 1e-12 * sqrt(g_pp * g_qq) (at most MAX_SWEEPS
    sweeps), with the Gram matrix recomputed from the columns at each
    sweep and columns at rounding-debris scale (below 16 eps times the
    largest column norm) left alone. Left vectors for numerically zero
    singular values are filled in by Gram-Schmidt completion. Each
    retained pair is oriented so the left vector's largest-magnitude
    entry is positive; the right vector inherits the flip so the
    factorization is preserved.
    """
    a = _as_matrix(a)
    m, d = a.shape
    if m < d:
        res = svd(a.T)
        return SvdResult(o_x=res.o_y, singular=res.singular, o_y=res.o_x)

    b = a.copy()
    v = np.eye(d)
    eps = float(np.finfo(float).eps)
    for _ in range(MAX_SWEEPS):
        # Refresh the Gram matrix every sweep: incremental updates round at
        # the eps * sigma_max^2 level, which swamps the true entries once a
        # column deflates below sqrt(eps) * sigma_max and stalls convergence.
        g = b.T @ b
        # Columns whose norm has fallen to rounding debris cannot be made
        # relatively orthogonal to anything; freeze them.
        floor = (16.0 * eps) ** 2 * float(g.diagonal().max())
        rotated = False
        for p in range(d - 1):
            for q in range(p + 1, d):
                gpq = g[p, q]
                gpp = g[p, p]
                gqq = g[q, q]
                if gpp <= floor or gqq <= floor:
                    continue
                if abs(gpq) <= 1e-12 * math.sqrt(gpp * gqq):
                    continue
                tau = (gqq - gpp) / (2.0 * gpq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                bp = b[:, p].copy()
                b[:, p] = c * bp - s * b[:, q]
                b[:, q] = s * bp + c * b[:, q]
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
                gp = g[:, p].copy()
                g[:, p] = c * gp - s * g[:, q]
                g[:, q] = s * gp + c * g[:, q]
                g[p, :] = g[:, p]
                g[q, :] = g[:, q]
                g[p, p] = c * c * gpp - 2.0 * c * s * gpq + s * s * gqq
                g[q, q] = s * s * gpp + 2.0 * c * s * gpq + c * c * gqq
                g[p, q] = 0.0
                g[q, p] = 0.0
                rotated = True
        if not rotated:
            break
    else:
        raise ConvergenceError(
            f"one-sided Jacobi SVD did not converge in {MAX_SWEEPS} sweeps"
        )

    sig = np.sqrt(np.sum(b * b, axis=0))
    order = np.argsort(-sig, kind="stable")
    sig = sig[order]
    b = b[:, order]
    v = v[:, order]

    rank_tol = max(m, d) * np.finfo(float).eps * (sig[0] if sig[0] > 0 else 1.0)
    left_cols: list[np.ndarray] = []
    rank = 0
    for j in range(d):
        if sig[j] > rank_tol:
            left_cols.append(b[:, j] / sig[j])
            rank += 1
        else:
            break
    o_x = np.column_stack(_complete_columns(left_cols, m)) if m > 0 else np.eye(m)
    o_y = v

    for j in range(rank):
        f = _flip_sign(o_x[:, j])
        o_x[:, j] *= f
        o_y[:, j] *= f  # paired flip keeps a = o_x diag(sig) o_y^T
    for j in range(rank, m):
        o_x[:, j] *= _flip_sign(o_x[:, j])
    for j in range(rank, d):
        o_y[:, j] *= _flip_sign(o_y[:, j])

    return SvdResult(o_x=o_x, singular=sig, o_y=o_y)


def symmetric_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic two-sided Jacobi eigensolver for a symmetric matrix.

    Returns (eigenvalues, eigenvectors) with eigenvalues descending and
    eigenvectors in columns, each oriented so its largest-magnitude entry
    is positive. Convergence: every off-diagonal entry falls below
    1e-12 * ||a||_F.
    """
    a = _as_matrix(a)
    n, n2 = a.shape
    if n != n2:
        raise ValueError("expected a square matrix")
    scale = math.sqrt(float((a * a).sum()))
    if float(np.max(np.abs(a - a.T))) > 1e-8 * (1.0 + scale):
        raise ValueError("matrix is not symmetric")

    w = 0.5 * (a + a.T)
    v = np.eye(n)
    off_tol = 1e-12 * scale
    for _ in range(MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                wpq = w[p, q]
                if abs(wpq) <= off_tol:
                    continue
                wpp = w[p, p]
                wqq = w[q, q]
                tau = (wqq - wpp) / (2.0 * wpq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                wp = w[:, p].copy()
                w[:, p] = c * wp - s * w[:, q]
                w[:, q] = s * wp + c * w[:, q]
                rp = w[p, :].copy()
                w[p, :] = c * rp - s * w[q, :]
                w[q, :] = s * rp + c * w[q, :]
                w[p, q] = 0.0
                w[q, p] = 0.0
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
                rotated = True
        if not rotated:
            break
    else:
        raise ConvergenceError(
            f"Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
        )

    vals = np.diag(w).copy()
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = v[:, order]
    for j in range(n):
        vecs[:, j] *= _flip_sign(vecs[:, j])
    return vals, vecs


def empirical_cov(samples: Iterable, center: bool = False) -> np.ndarray:
    """Average of outer products (1/n) sum x_i y_i^T over the given samples.

    With center=True the sample means are subtracted afterwards:
    (1/n) sum x y^T - xbar ybar^T. Accepts objects with .x/.y attributes
    or plain (x, y) pairs; callers bound infinite streams themselves
    (e.g. with itertools.islice). Raises ValueError on empty input.
    """
    acc = None
    sum_x = sum_y = None
    n = 0
    for s in samples:
        x = np.asarray(s.x if hasattr(s, "x") else s[0], dtype=float)
        y = np.asarray(s.y if hasattr(s, "y") else s[1], dtype=float)
        if acc is None:
            acc = np.zeros((x.size, y.size))
            sum_x = np.zeros(x.size)
            sum_y = np.zeros(y.size)
        acc += np.outer(x, y)
        sum_x += x
        sum_y += y
        n += 1
    if n == 0:
        raise ValueError("empirical_cov needs at least one sample")
    cov = acc / n
    if center:
        cov = cov - np.outer(sum_x / n, sum_y / n)
    return cov


def fd_gradient(f: Callable[[np.ndarray], float], z, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function at z."""
    z = np.asarray(z, dtype=float)
    g = np.zeros_like(z)
    for i in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (f(zp) - f(zm)) / (2.0 * h)
    return g


@dataclass(frozen=True)
class McMoments:
    """Monte-Carlo estimates of latent second and fourth moments.

    gamma[i] ~ E[xbar_i^2], omega[i] ~ E[ybar_i^2],
    alpha[i, j] ~ E[xbar_i ybar_i xbar_j ybar_j]; *_se hold the matching
    standard errors of the mean.
    """

    gamma: np.ndarray
    omega: np.ndarray
    alpha: np.ndarray
    gamma_se: np.ndarray
    omega_se: np.ndarray
    alpha_se: np.ndarray
    n: int


def mc_latent_moments(
    latent_cov_x, latent_cross_diag, latent_cov_y, n: int, seed
) -> McMoments:
    """Estimate latent moments by sampling the latent Gaussian directly.

    Draws n joint latent pairs (xbar, ybar) from the block covariance
    [[latent_cov_x, diag(latent_cross_diag)], [diag(.), latent_cov_y]]
    and plugs them into the defining expectations. Independent of the
    closed-form moment formulas it is used to check. seed may be an int
    or a Generator.
    """
    cx = _as_matrix(latent_cov_x)
    cy = _as_matrix(latent_cov_y)
    diag = np.asarray(latent_cross_diag, dtype=float)
    d = cx.shape[0]
    if cx.shape != (d, d) or cy.shape != (d, d) or diag.shape != (d,):
        raise ValueError("inconsistent latent covariance shapes")
    joint = np.zeros((2 * d, 2 * d))
    joint[:d, :d] = cx
    joint[d:, d:] = cy
    joint[:d, d:] = np.diag(diag)
    joint[d:, :d] = np.diag(diag)
    try:
        factor = np.linalg.cholesky(joint)
    except np.linalg.LinAlgError:
        factor = np.linalg.cholesky(joint + 1e-12 * np.eye(2 * d))

    rng = np.random.default_rng(seed)
    sum_x2 = np.zeros(d)
    sum_x4 = np.zeros(d)
    sum_y2 = np.zeros(d)
    sum_y4 = np.zeros(d)
    sum_p = np.zeros((d, d))
    sum_p2 = np.zeros((d, d))
    left = n
    while left > 0:
        block = min(left, 65536)
        z = rng.standard_normal((block, 2 * d)) @ factor.T
        xb = z[:, :d]
        yb = z[:, d:]
        x2 = xb * xb
        y2 = yb * yb
        sum_x2 += x2.sum(axis=0)
        sum_x4 += (x2 * x2).sum(axis=0)
        sum_y2 += y2.sum(axis=0)
        sum_y4 += (y2 * y2).sum(axis=0)
        p = xb * yb
        sum_p += p.T @ p
        p2 = p * p
        sum_p2 += p2.T @ p2
        left -= block

    gamma = sum_x2 / n
    omega = sum_y2 / n
    alpha = sum_p / n
    gamma_se = np.sqrt(np.maximum(sum_x4 / n - gamma**2, 0.0) / n)
    omega_se = np.sqrt(np.maximum(sum_y4 / n - omega**2, 0.0) / n)
    alpha_se = np.sqrt(np.maximum(sum_p2 / n - alpha**2, 0.0) / n)
    return McMoments(gamma, omega, alpha, gamma_se, omega_se, alpha_se, n)


def mc_moments(model, n: int, rng) -> McMoments:
    """Monte-Carlo latent moments for a generative covariance model.

    Reads the pre-mixing latent blocks off the model, so the estimate is
    independent of the mixing matrices and of the analytic Isserlis
    formulas stored on the model itself.
    """
    return mc_latent_moments(
        model.latent_cov_x, model.latent_cross_diag, model.latent_cov_y, n, rng
    )


def normal_cdf(x: float) -> float:
    """Standard normal CDF via erfc (accurate in both tails)."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# Rational approximation coefficients (Acklam's algorithm).
_INV_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_INV_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_INV_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_INV_D = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
    3.754408661907416e00,
)


def inverse_normal_cdf(q: float) -> float:
    """Inverse standard normal CDF.

    Rational initial guess refined by one Newton step on the erf-based CDF;
    round-trip error |normal_cdf(result) - q| stays below 1e-10 for
    q in [1e-12, 1 - 1e-12].
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie strictly between 0 and 1")
    p_low = 0.02425
    if q < p_low:
        r = math.sqrt(-2.0 * math.log(q))
        num = ((((_INV_C[0] * r + _INV_C[1]) * r + _INV_C[2]) * r + _INV_C[3]) * r + _INV_C[4]) * r + _INV_C[5]
        den = (((_INV_D[0] * r + _INV_D[1]) * r + _INV_D[2]) * r + _INV_D[3]) * r + 1.0
        x = num / den
    elif q <= 1.0 - p_low:
        r = q - 0.5
        u = r * r
        num = (((((_INV_A[0] * u + _INV_A[1]) * u + _INV_A[2]) * u + _INV_A[3]) * u + _INV_A[4]) * u + _INV_A[5]) * r
        den = ((((_INV_B[0] * u + _INV_B[1]) * u + _INV_B[2]) * u + _INV_B[3]) * u + _INV_B[4]) * u + 1.0
        x = num / den
    else:
        r = math.sqrt(-2.0 * math.log(1.0 - q))
        num = ((((_INV_C[0] * r + _INV_C[1]) * r + _INV_C[2]) * r + _INV_C[3]) * r + _INV_C[4]) * r + _INV_C[5]
        den = (((_INV_D[0] * r + _INV_D[1]) * r + _INV_D[2]) * r + _INV_D[3]) * r + 1.0
        x = -num / den

    pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if pdf > 0.0:
        x = x - (normal_cdf(x) - q) / pdf
    return x
