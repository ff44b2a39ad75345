"""Spectral-coordinate theory for the streaming PLS dynamics.

The symmetric embedding Q = [[0, S], [S^T, 0]] of the cross-covariance S
diagonalizes as Q = P diag(lam) P^T with eigenvalues (s_1..s_r, 0.., -s_1..-s_r).
In the coordinates h = P^T (u; v)/sqrt(2) the averaged dynamics follow a
closed-form ODE, and near equilibria each coordinate behaves like an
Ornstein-Uhlenbeck process whose diffusion coefficient is a combination of
latent fourth moments. This module builds the basis, evaluates the ODE
solution, the O-U moments, and the three phase-time predictions, and
provides an Euler-Maruyama simulator to cross-check the moment formulas.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import oracle

# Leading spectral gaps below this are treated as ties: the top pair is
# then not identifiable and basis-dependent predictions are refused.
GAP_TOL = 1e-8


class StepSizeTooLarge(ValueError):
    """The convergence-phase precondition fails for the given step size."""


@dataclass(frozen=True)
class SpectralBasis:
    """Orthogonal eigenbasis of the symmetric embedding of S (m-by-d).

    p has shape (m+d, m+d); lam holds the signed eigenvalues in the column
    order: positive branch (descending), null block, negative branch
    (mirroring the positive order). rect marks m != d.
    """

    p: np.ndarray
    lam: np.ndarray
    m: int
    d: int
    rect: bool


def build_basis(sigma_xy) -> SpectralBasis:
    """Diagonalizing basis of [[0, S], [S^T, 0]] from the one-sided SVD.

    Pair columns are (1/sqrt(2))(u_i; +-v_i); for m > d the left null
    directions enter as full-weight middle columns with eigenvalue 0. The
    m < d case is built on the transpose and the row blocks are swapped
    back. Refuses matrices whose top two singular values nearly tie.
    """
    sigma = np.asarray(sigma_xy, dtype=float)
    if sigma.ndim != 2:
        raise ValueError("sigma_xy must be a matrix")
    m, d = sigma.shape
    if m < d:
        swapped = build_basis(sigma.T)
        p = np.vstack([swapped.p[d:], swapped.p[:d]])
        return SpectralBasis(p=p, lam=swapped.lam, m=m, d=d, rect=True)

    res = oracle.svd(sigma)
    vals = res.singular
    second = float(vals[1]) if vals.size > 1 else 0.0
    if float(vals[0]) - second <= GAP_TOL:
        raise ValueError(
            f"leading singular values {vals[0]:.12g} and {second:.12g} nearly tie; "
            "the top pair is unidentifiable"
        )
    r = 1.0 / math.sqrt(2.0)
    p = np.zeros((m + d, m + d))
    p[:m, :d] = r * res.o_x[:, :d]
    p[m:, :d] = r * res.o_y
    if m > d:
        p[:m, d:m] = res.o_x[:, d:]
    p[:m, m:] = r * res.o_x[:, :d]
    p[m:, m:] = -r * res.o_y
    lam = np.concatenate([vals, np.zeros(m - d), -vals])
    return SpectralBasis(p=p, lam=lam, m=m, d=d, rect=m != d)


def to_spectral(u, v, basis: SpectralBasis) -> np.ndarray:
    """Spectral coordinates h = P^T (u; v) / sqrt(2); unit (u, v) give unit h."""
    w = np.concatenate([np.asarray(u, dtype=float), np.asarray(v, dtype=float)])
    if w.size != basis.m + basis.d:
        raise ValueError("dimension mismatch with basis")
    return (basis.p.T @ w) / math.sqrt(2.0)


def from_spectral(h, basis: SpectralBasis) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of to_spectral: recover (u, v) from h."""
    h = np.asarray(h, dtype=float)
    w = math.sqrt(2.0) * (basis.p @ h)
    return w[: basis.m], w[basis.m :]


def ode_rhs(h, lam) -> np.ndarray:
    """Averaged-flow velocity: component i is h_i * sum_j (lam_i-lam_j) h_j^2."""
    h = np.asarray(h, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if h.shape != lam.shape:
        raise ValueError("h and lam must have matching shapes")
    s2 = float(h @ h)
    q = float((lam * h) @ h)
    return h * (lam * s2 - q)


def ode_solution(h0, lam, t) -> np.ndarray:
    """Closed-form flow h(t) = exp(lam t) h0 / ||exp(lam t) h0||.

    t may be a scalar or a 1-D array of nonnegative times (rows of the
    result). Exponentials are shifted by the largest rate active in h0's
    support before evaluation, so arbitrary horizons neither overflow nor
    collapse to 0/0. Coordinates that start at zero stay exactly zero.
    """
    h0 = np.asarray(h0, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if h0.shape != lam.shape:
        raise ValueError("h0 and lam must have matching shapes")
    norm0 = math.sqrt(float(h0 @ h0))
    if abs(norm0 - 1.0) > 1e-8:
        raise ValueError("h0 must be a unit vector")
    h0 = h0 / norm0
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if t_arr.ndim != 1:
        raise ValueError("t must be a scalar or 1-D array")
    if (t_arr < 0).any():
        raise ValueError("t must be nonnegative")
    support = h0 != 0.0
    ref = lam[support].max()
    exponents = np.outer(t_arr, lam - ref)
    # Rates off the support may exceed ref; those coordinates are zero
    # anyway, so send their exponents to -inf instead of overflowing.
    exponents[:, ~support] = -np.inf
    num = np.exp(exponents) * h0
    out = num / np.sqrt((num * num).sum(axis=1))[:, None]
    return out[0] if np.isscalar(t) or np.asarray(t).ndim == 0 else out


@dataclass(frozen=True)
class LatentMoments:
    """Second and fourth moments of the latent pair driving the noise.

    gamma[i] = Var(xbar_i), omega[i] = Var(ybar_i),
    alpha[i, j] = E[xbar_i ybar_i xbar_j ybar_j].
    """

    gamma: np.ndarray
    omega: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        omega = np.asarray(self.omega, dtype=float)
        alpha = np.asarray(self.alpha, dtype=float)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "alpha", alpha)
        d = gamma.size
        if omega.size != d or alpha.shape != (d, d):
            raise ValueError("moment shapes are inconsistent")
        if (gamma <= 0).any() or (omega <= 0).any():
            raise ValueError("variances must be strictly positive")
        if not np.allclose(alpha, alpha.T, atol=1e-10, rtol=0.0):
            raise ValueError("alpha must be symmetric")

    @property
    def dim(self) -> int:
        return self.gamma.size

    @classmethod
    def from_gaussian(cls, latent_cov_x, latent_cross_diag, latent_cov_y) -> "LatentMoments":
        """Analytic moments for jointly Gaussian latents with diagonal
        cross-covariance, via the fourth-moment product identity:
        alpha_ij = lam_i lam_j + Cx_ij Cy_ij off the diagonal and
        alpha_ii = gamma_i omega_i + 2 lam_i^2 on it."""
        cx = np.asarray(latent_cov_x, dtype=float)
        cy = np.asarray(latent_cov_y, dtype=float)
        lam = np.asarray(latent_cross_diag, dtype=float).ravel()
        d = lam.size
        if cx.shape != (d, d) or cy.shape != (d, d):
            raise ValueError("latent covariance shapes do not match the cross diagonal")
        gamma = np.diag(cx).copy()
        omega = np.diag(cy).copy()
        alpha = np.outer(lam, lam) + cx * cy
        np.fill_diagonal(alpha, gamma * omega + 2.0 * lam * lam)
        return cls(gamma=gamma, omega=omega, alpha=alpha)


def beta_coeff(i: int, j: int, mom: LatentMoments) -> float:
    """Diffusion coefficient of spectral coordinate i observed from j.

    Indices are 1-based over the 2d paired coordinates: 1..d is the
    positive branch, d+1..2d the negative branch, and i > d reads the base
    quantities at i-d. The fourth-moment term enters with + when i and j
    sit on the same branch and with - across branches:
    beta_ij = 0.5*sqrt(gamma_i omega_j + gamma_j omega_i +- 2 alpha_ij).
    A negative radicand (possible across branches at strong coupling) is
    outside the formula's validity and is rejected.
    """
    d = mom.dim
    if not (1 <= i <= 2 * d and 1 <= j <= 2 * d):
        raise ValueError(f"indices must lie in 1..{2 * d}")
    bi = (i - 1) % d
    bj = (j - 1) % d
    same_side = (i <= d) == (j <= d)
    sign = 2.0 if same_side else -2.0
    rad = (
        mom.gamma[bi] * mom.omega[bj]
        + mom.gamma[bj] * mom.omega[bi]
        + sign * mom.alpha[bi, bj]
    )
    if rad < 0:
        raise ValueError(
            f"negative radicand {rad:.6g} for indices ({i}, {j}); the cross-branch "
            "coefficient is not defined at this coupling strength"
        )
    return 0.5 * math.sqrt(rad)


def noise_aggregate(mom: LatentMoments) -> float:
    """Total squared diffusion felt at the optimum: sum_{i=1}^d beta_i1^2."""
    return sum(beta_coeff(i, 1, mom) ** 2 for i in range(1, mom.dim + 1))


def ou_moments(z0: float, gap: float, beta: float, t, phase: str) -> tuple:
    """Mean and variance of the linearized coordinate at time t.

    phase="converge": mean z0 e^{-gap t}, var (beta^2/2gap)(1 - e^{-2 gap t});
    phase="escape": the signs flip, the variance grows as e^{2 gap t} - 1.
    gap must be positive: the zero-gap coordinate is a pure random walk
    with var beta^2 t, handled by the simulator rather than here.
    """
    if gap <= 0:
        raise ValueError("gap must be positive (zero gap is a random walk)")
    t = np.asarray(t, dtype=float)
    if (t < 0).any():
        raise ValueError("t must be nonnegative")
    scale = beta * beta / (2.0 * gap)
    if phase == "converge":
        mean = z0 * np.exp(-gap * t)
        var = scale * (1.0 - np.exp(-2.0 * gap * t))
    elif phase == "escape":
        mean = z0 * np.exp(gap * t)
        var = scale * np.expm1(2.0 * gap * t)
    else:
        raise ValueError("phase must be 'converge' or 'escape'")
    if t.ndim == 0:
        return float(mean), float(var)
    return mean, var


def simulate_ou(z0, gap, beta, t_end, dt, rng, phase: str) -> np.ndarray:
    """Euler-Maruyama path of dz = +-gap z dt + beta dB on [0, t_end].

    Returns round(t_end/dt)+1 values including z0. gap may be zero (pure
    random walk); the drift sign follows the phase.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < dt:
        raise ValueError("t_end must be at least dt")
    if gap < 0:
        raise ValueError("gap must be nonnegative")
    if phase == "converge":
        drift = -gap
    elif phase == "escape":
        drift = gap
    else:
        raise ValueError("phase must be 'converge' or 'escape'")
    n = int(round(t_end / dt))
    path = np.empty(n + 1)
    path[0] = z0
    noise = (beta * math.sqrt(dt)) * rng.standard_normal(n)
    z = float(z0)
    a = 1.0 + drift * dt
    for k in range(n):
        z = a * z + noise[k]
        path[k + 1] = z
    return path


def simulate_ou_paths(
    z0, gap, beta, t_end, dt, rng, phase: str, n_paths: int
) -> np.ndarray:
    """Endpoint values of n_paths independent Euler-Maruyama paths.

    Same scheme as simulate_ou, vectorized across paths; used for
    moment cross-checks where only z(t_end) matters.
    """
    if dt <= 0 or t_end < dt:
        raise ValueError("need dt > 0 and t_end >= dt")
    if gap < 0:
        raise ValueError("gap must be nonnegative")
    drift = -gap if phase == "converge" else gap
    if phase not in ("converge", "escape"):
        raise ValueError("phase must be 'converge' or 'escape'")
    n = int(round(t_end / dt))
    z = np.full(n_paths, float(z0))
    a = 1.0 + drift * dt
    sig = beta * math.sqrt(dt)
    for _ in range(n):
        z = a * z + sig * rng.standard_normal(n_paths)
    return z


@dataclass(frozen=True)
class PhasePrediction:
    """Predicted durations of the three convergence phases.

    Times are in rescaled (continuous) units; counts are iterations
    N_i = ceil(T_i/eta). t3 is clamped at zero when the tolerance is
    already met at arrival (the raw formula goes negative there).
    """

    eta: float
    nu: float
    epsilon: float
    mu_exponent: float
    delta: float
    phi: float
    beta_12: float
    lam: tuple
    t1: float
    t2: float
    t3: float
    t_total: float
    n1: int
    n2: int
    n3: int
    n_total: int

    def to_json(self) -> str:
        payload = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}
        return json.dumps(payload, indent=2, sort_keys=True)


def phase_times(
    lam,
    mom: LatentMoments,
    eta: float,
    nu: float = 0.1,
    epsilon: float = 0.01,
    mu_exponent: float = 0.75,
) -> PhasePrediction:
    """Evaluate the three phase-time formulas with unit constants.

    lam is the positive singular spectrum (descending). With g the leading
    gap, delta = eta^mu_exponent and q the two-sided normal quantile at
    confidence nu:

      T1 = (1/g) log(2 delta^2 g / (eta q^2 beta_12^2) + 1)
      T2 = (1/g) log((1 - delta^2)/delta^2)
      T3 = (1/g) log(g delta^2 / (g epsilon - 8 eta phi)), floored at 0.

    Requires g*epsilon > 8*eta*phi; otherwise the step size cannot reach
    the requested accuracy and StepSizeTooLarge is raised.
    """
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.size < 2:
        raise ValueError("need at least two singular values")
    if not 0 < nu < 1:
        raise ValueError("nu must lie in (0, 1)")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if eta <= 0:
        raise ValueError("eta must be positive")
    gap = float(lam[0] - lam[1])
    if gap <= GAP_TOL:
        raise ValueError("leading spectral gap must be positive")
    delta = eta**mu_exponent
    delta_sq = delta * delta
    if delta_sq >= 1.0:
        raise ValueError("eta^mu must be below 1")
    q = oracle.inverse_normal_cdf((1.0 + nu / 2.0) / 2.0)
    b12 = beta_coeff(1, 2, mom)
    phi = noise_aggregate(mom)

    t1 = math.log(2.0 * delta_sq * gap / (eta * q * q * b12 * b12) + 1.0) / gap
    t2 = math.log((1.0 - delta_sq) / delta_sq) / gap
    denom = gap * epsilon - 8.0 * eta * phi
    if denom <= 0.0:
        raise StepSizeTooLarge(
            f"need (lambda1 - lambda2)*epsilon > 8*eta*phi, got "
            f"{gap * epsilon:.6g} <= {8.0 * eta * phi:.6g}; reduce eta below "
            f"{gap * epsilon / (8.0 * phi):.6g}"
        )
    t3 = max(0.0, math.log(gap * delta_sq / denom) / gap)
    n1 = math.ceil(t1 / eta)
    n2 = math.ceil(t2 / eta)
    n3 = math.ceil(t3 / eta)
    return PhasePrediction(
        eta=eta,
        nu=nu,
        epsilon=epsilon,
        mu_exponent=mu_exponent,
        delta=delta,
        phi=phi,
        beta_12=b12,
        lam=tuple(float(x) for x in lam),
        t1=t1,
        t2=t2,
        t3=t3,
        t_total=t1 + t2 + t3,
        n1=n1,
        n2=n2,
        n3=n3,
        n_total=n1 + n2 + n3,
    )


def recommended_eta(epsilon: float, lambda1: float, lambda2: float, phi: float) -> float:
    """Step size scaling eta = epsilon*(lambda1 - lambda2)/phi (constant 1)."""
    if epsilon <= 0 or phi <= 0:
        raise ValueError("epsilon and phi must be positive")
    if lambda1 <= lambda2:
        raise ValueError("lambda1 must exceed lambda2")
    return epsilon * (lambda1 - lambda2) / phi
