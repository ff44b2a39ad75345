"""Synthetic two-view Gaussian models, sample streams, and data files.

A model starts from latent covariances with a diagonal cross-covariance and
rotates each view by an orthogonal mixing matrix drawn from a seed. Streams
draw i.i.d. pairs through the joint Cholesky factor; block-based generators
keep the per-sample cost small for long runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .core import TwoViewSample
from .diffusion import LatentMoments

# Joint covariances with eigenvalues below this floor are rejected;
# negatives above it are clipped to zero before factorization.
_PSD_TOL = -1e-8


def _check_symmetric(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    if not np.allclose(a, a.T, atol=1e-10, rtol=0.0):
        raise ValueError(f"{name} must be symmetric")
    return 0.5 * (a + a.T)


def gram_schmidt_orthonormal(a) -> np.ndarray:
    """Column-wise modified Gram-Schmidt with one re-orthogonalization
    pass, which keeps orthogonality at a few hundred dimensions where the
    single-pass variant degrades."""
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix of candidate columns")
    n = a.shape[1]
    q = np.zeros_like(a)
    for j in range(n):
        w = a[:, j].copy()
        for _ in range(2):
            for i in range(j):
                w -= (q[:, i] @ w) * q[:, i]
        norm = math.sqrt(float(w @ w))
        if norm <= 1e-12:
            raise ValueError(f"column {j} is numerically dependent on earlier ones")
        q[:, j] = w / norm
    return q


@dataclass
class CovarianceModel:
    """Generative two-view Gaussian model.

    Latent blocks live in the unmixed coordinates (cross-covariance
    diagonal); the observed second moments are the mixed versions. moments
    carries the analytic latent fourth moments used by the diffusion
    predictions.
    """

    latent_cov_x: np.ndarray
    latent_cross_diag: np.ndarray
    latent_cov_y: np.ndarray
    mix_x: np.ndarray
    mix_y: np.ndarray
    sigma_x: np.ndarray
    sigma_y: np.ndarray
    sigma_xy: np.ndarray
    moments: LatentMoments
    seed: int | None = None
    _chol: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m, d = self.dim_x, self.dim_y
        if self.sigma_xy.shape != (m, d):
            raise ValueError(f"sigma_xy must have shape ({m}, {d})")
        for mat, n, name in ((self.mix_x, m, "mix_x"), (self.mix_y, d, "mix_y")):
            err = np.abs(mat.T @ mat - np.eye(n)).max()
            if err > 1e-10:
                raise ValueError(f"{name} is not orthogonal (deviation {err:.3e})")
        self.joint_cholesky()

    @property
    def dim_x(self) -> int:
        return self.sigma_x.shape[0]

    @property
    def dim_y(self) -> int:
        return self.sigma_y.shape[0]

    def joint(self) -> np.ndarray:
        top = np.hstack([self.sigma_x, self.sigma_xy])
        bot = np.hstack([self.sigma_xy.T, self.sigma_y])
        return np.vstack([top, bot])

    def joint_cholesky(self) -> np.ndarray:
        """Lower Cholesky factor of the joint covariance, cached.

        Marginally indefinite joints (eigenvalues in [-1e-8, 0)) are
        repaired by clipping; anything below that floor is rejected as an
        inconsistent model.
        """
        if self._chol is None:
            joint = 0.5 * (self.joint() + self.joint().T)
            evals, evecs = np.linalg.eigh(joint)
            if evals.min() < _PSD_TOL:
                raise ValueError(
                    f"joint covariance is indefinite (eigenvalue {evals.min():.3e})"
                )
            if evals.min() < 0.0:
                joint = (evecs * np.clip(evals, 0.0, None)) @ evecs.T
            try:
                self._chol = np.linalg.cholesky(joint)
            except np.linalg.LinAlgError:
                jitter = 1e-12 * np.eye(joint.shape[0])
                self._chol = np.linalg.cholesky(joint + jitter)
        return self._chol


def build_model(
    latent_cov_x,
    latent_cross_diag,
    latent_cov_y,
    m: int | None = None,
    d: int | None = None,
    seed: int = 0,
    *,
    mixing: str = "gram_schmidt",
) -> CovarianceModel:
    """Assemble a model from latent blocks and seeded orthogonal mixing.

    latent_cross_diag may be a vector or a diagonal matrix; entries must be
    nonnegative and nonincreasing so the spectral order is explicit. When
    m exceeds the latent dimension the extra x-coordinates are independent
    unit-variance noise with zero cross-covariance. mixing="identity" is a
    test hook that skips the random rotation.
    """
    cx = _check_symmetric(latent_cov_x, "latent_cov_x")
    cy = _check_symmetric(latent_cov_y, "latent_cov_y")
    cross = np.asarray(latent_cross_diag, dtype=float)
    if cross.ndim == 2:
        off = cross - np.diag(np.diag(cross))
        if np.abs(off).max() > 0:
            raise ValueError("latent_cross_diag matrix must be diagonal")
        cross = np.diag(cross).copy()
    if cross.ndim != 1:
        raise ValueError("latent_cross_diag must be a vector or diagonal matrix")
    d_lat = cross.size
    if cx.shape != (d_lat, d_lat) or cy.shape != (d_lat, d_lat):
        raise ValueError("latent covariances must match the cross diagonal length")
    if (cross < 0).any():
        raise ValueError("cross-covariance entries must be nonnegative")
    if (np.diff(cross) > 0).any():
        raise ValueError("cross-covariance entries must be nonincreasing")
    d = d_lat if d is None else int(d)
    m = d_lat if m is None else int(m)
    if d != d_lat:
        raise ValueError("y-view dimension must equal the latent dimension")
    if m < d:
        raise ValueError("x-view dimension must be at least the y-view dimension")

    padded_xx = np.eye(m)
    padded_xx[:d_lat, :d_lat] = cx
    padded_xy = np.zeros((m, d))
    padded_xy[:d_lat, :d_lat] = np.diag(cross)

    if mixing == "gram_schmidt":
        rng = np.random.default_rng(seed)
        mix_x = gram_schmidt_orthonormal(rng.standard_normal((m, m)))
        mix_y = gram_schmidt_orthonormal(rng.standard_normal((d, d)))
    elif mixing == "identity":
        mix_x = np.eye(m)
        mix_y = np.eye(d)
    else:
        raise ValueError("mixing must be 'gram_schmidt' or 'identity'")

    sigma_x = mix_x.T @ padded_xx @ mix_x
    sigma_y = mix_y.T @ cy @ mix_y
    sigma_xy = mix_x.T @ padded_xy @ mix_y
    moments = LatentMoments.from_gaussian(cx, cross, cy)
    return CovarianceModel(
        latent_cov_x=cx,
        latent_cross_diag=cross,
        latent_cov_y=cy,
        mix_x=mix_x,
        mix_y=mix_y,
        sigma_x=0.5 * (sigma_x + sigma_x.T),
        sigma_y=0.5 * (sigma_y + sigma_y.T),
        sigma_xy=sigma_xy,
        moments=moments,
        seed=seed,
    )


def sample(model: CovarianceModel, rng: np.random.Generator) -> TwoViewSample:
    """One centered Gaussian pair drawn through the joint factor."""
    z = model.joint_cholesky() @ rng.standard_normal(model.dim_x + model.dim_y)
    return TwoViewSample(z[: model.dim_x], z[model.dim_x :])


def mask(s: TwoViewSample, p: float, rng: np.random.Generator) -> TwoViewSample:
    """Entrywise dropout: keep each coordinate with probability p,
    zero-impute the rest, and attach the Boolean observation masks."""
    if not 0.0 < p <= 1.0:
        raise ValueError("observe probability must lie in (0, 1]")
    keep_x = rng.random(s.x.size) < p
    keep_y = rng.random(s.y.size) < p
    return TwoViewSample(s.x * keep_x, s.y * keep_y, keep_x, keep_y)


def gaussian_stream(
    model: CovarianceModel,
    seed: int,
    *,
    block_size: int = 8192,
) -> Iterator[TwoViewSample]:
    """Endless i.i.d. stream of centered Gaussian pairs.

    Equivalent in distribution to repeated sample() calls but drawn
    block-wise; yielded arrays are views into the current block.
    """
    rng = np.random.default_rng(seed)
    lower = model.joint_cholesky()
    m = model.dim_x
    total = lower.shape[0]
    while True:
        block = rng.standard_normal((block_size, total)) @ lower.T
        xs = block[:, :m]
        ys = block[:, m:]
        for i in range(block_size):
            yield TwoViewSample(xs[i], ys[i])


def masked_gaussian_stream(
    model: CovarianceModel,
    seed: int,
    observe_prob: float,
    *,
    block_size: int = 8192,
) -> Iterator[TwoViewSample]:
    """Gaussian stream with i.i.d. entry dropout applied block-wise."""
    if not 0.0 < observe_prob <= 1.0:
        raise ValueError("observe_prob must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    lower = model.joint_cholesky()
    m = model.dim_x
    total = lower.shape[0]
    while True:
        block = rng.standard_normal((block_size, total)) @ lower.T
        keep = rng.random((block_size, total)) < observe_prob
        block = block * keep
        xs = block[:, :m]
        ys = block[:, m:]
        kx = keep[:, :m]
        ky = keep[:, m:]
        for i in range(block_size):
            yield TwoViewSample(xs[i], ys[i], kx[i], ky[i])


def draw_pairs(model: CovarianceModel, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """n joint draws as two row-per-sample arrays (X, Y)."""
    rng = np.random.default_rng(seed)
    lower = model.joint_cholesky()
    z = rng.standard_normal((n, lower.shape[0])) @ lower.T
    return z[:, : model.dim_x].copy(), z[:, model.dim_x :].copy()


def save_two_view_csv(path_x, path_y, x, y, *, header: bool = True) -> None:
    """Write paired samples as one CSV per view (17 significant digits)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[0] != y.shape[0]:
        raise ValueError(
            f"row count mismatch: x has {x.shape[0]} rows, y has {y.shape[0]}"
        )
    _write_matrix(path_x, x, "x", header)
    _write_matrix(path_y, y, "y", header)


def _write_matrix(path, a: np.ndarray, prefix: str, header: bool) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(",".join(f"{prefix}_{j}" for j in range(a.shape[1])) + "\n")
        for row in a:
            fh.write(",".join(f"{val:.17g}" for val in row) + "\n")


def _read_matrix(path, has_header: bool) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        start = 1
        if has_header:
            if not fh.readline():
                raise ValueError(f"{path}: line 1: empty file, expected a header")
            start = 2
        for lineno, line in enumerate(fh, start=start):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(",")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise ValueError(
                    f"{path}: line {lineno}: expected {width} fields, got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                bad = next(p for p in parts if not _is_float(p))
                raise ValueError(
                    f"{path}: line {lineno}: non-numeric cell {bad.strip()!r}"
                ) from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.asarray(rows)


def _is_float(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_two_view_csv(
    path_x, path_y, *, center: bool = True, has_header: bool = True
) -> list[TwoViewSample]:
    """Load paired samples from one CSV per view.

    Returns a finite, replayable list of samples in file order. Both files
    must have the same row count; centering (on by default) subtracts the
    per-view column means.
    """
    xs = _read_matrix(path_x, has_header)
    ys = _read_matrix(path_y, has_header)
    if xs.shape[0] != ys.shape[0]:
        raise ValueError(
            f"row count mismatch: {path_x} has {xs.shape[0]} rows, "
            f"{path_y} has {ys.shape[0]}"
        )
    if center:
        xs = xs - xs.mean(axis=0)
        ys = ys - ys.mean(axis=0)
    return [TwoViewSample(xs[i], ys[i]) for i in range(xs.shape[0])]
