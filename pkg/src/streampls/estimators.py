"""scikit-learn compatible wrappers around the streaming solvers.

Both estimators fit the leading pair of cross-covariance directions from
paired sample matrices, following the two-view fit(X, Y) convention of
sklearn's cross-decomposition module. HebbianPls runs the dual-free
streaming update; MsgPls runs the projected matrix baseline. transform
maps views onto their fitted directions, predict regresses Y on the
X-scores along the fitted pair.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import msg
from .core import PlsIterate, StepConfig, TwoViewSample, random_unit_pair, run_gha


def _check_views(X, Y):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 2:
        raise ValueError("X and Y must be 2-D sample matrices")
    if X.shape[0] != Y.shape[0]:
        raise ValueError(
            f"X and Y must have the same number of rows, got {X.shape[0]} and {Y.shape[0]}"
        )
    if X.shape[0] < 1:
        raise ValueError("need at least one sample")
    if not (np.isfinite(X).all() and np.isfinite(Y).all()):
        raise ValueError("X and Y must be finite")
    return X, Y


class _TwoViewMixin:
    def _prepare(self, X, Y):
        X, Y = _check_views(X, Y)
        if self.center:
            self.x_mean_ = X.mean(axis=0)
            self.y_mean_ = Y.mean(axis=0)
        else:
            self.x_mean_ = np.zeros(X.shape[1])
            self.y_mean_ = np.zeros(Y.shape[1])
        return X - self.x_mean_, Y - self.y_mean_

    def _epoch_order(self, n, rng):
        for _ in range(self.n_epochs):
            order = rng.permutation(n) if self.shuffle else np.arange(n)
            yield from order

    def _finalize(self, u, v, Xc, Yc):
        u = u / math.sqrt(float(u @ u))
        v = v / math.sqrt(float(v @ v))
        self.x_weights_ = u
        self.y_weights_ = v
        sigma_hat = Xc.T @ Yc / Xc.shape[0]
        self.singular_value_ = float(u @ sigma_hat @ v)
        xs = Xc @ u
        ys = Yc @ v
        denom = float(xs @ xs)
        self.coef_ = float(xs @ ys) / denom if denom > 0 else 0.0

    def transform(self, X, Y=None):
        """Project rows onto the fitted directions; returns the X-scores,
        or (X-scores, Y-scores) when Y is given."""
        self._require_fitted()
        X = np.asarray(X, dtype=float)
        xs = (X - self.x_mean_) @ self.x_weights_
        if Y is None:
            return xs[:, None]
        Y = np.asarray(Y, dtype=float)
        return xs[:, None], ((Y - self.y_mean_) @ self.y_weights_)[:, None]

    def predict(self, X):
        """Rank-1 prediction of Y: regress Y-scores on X-scores along the
        fitted pair, then map back through the Y-direction."""
        self._require_fitted()
        X = np.asarray(X, dtype=float)
        xs = (X - self.x_mean_) @ self.x_weights_
        return self.y_mean_ + np.outer(self.coef_ * xs, self.y_weights_)

    def score(self, X, Y):
        """Empirical objective of the fitted pair on held-out data."""
        self._require_fitted()
        X, Y = _check_views(X, Y)
        Xc = X - X.mean(axis=0)
        Yc = Y - Y.mean(axis=0)
        sigma_hat = Xc.T @ Yc / X.shape[0]
        return float(self.x_weights_ @ sigma_hat @ self.y_weights_)

    def _require_fitted(self):
        if not hasattr(self, "x_weights_"):
            raise RuntimeError("estimator is not fitted; call fit(X, Y) first")


class HebbianPls(_TwoViewMixin, TransformerMixin, BaseEstimator):
    """Leading cross-covariance pair via the dual-free streaming update.

    Parameters mirror the solver: eta is the constant step size or the
    numerator of the decaying schedules, n_epochs the number of passes over
    the rows, shuffle whether each pass visits rows in a seeded random
    order. No renormalization is applied unless requested; the update is
    self-stabilizing.
    """

    def __init__(
        self,
        eta: float = 1e-3,
        schedule: str = "constant",
        n_epochs: int = 1,
        center: bool = True,
        shuffle: bool = True,
        renormalize: bool = False,
        random_state: int | None = None,
    ):
        self.eta = eta
        self.schedule = schedule
        self.n_epochs = n_epochs
        self.center = center
        self.shuffle = shuffle
        self.renormalize = renormalize
        self.random_state = random_state

    def fit(self, X, Y):
        Xc, Yc = self._prepare(X, Y)
        rng = np.random.default_rng(self.random_state)
        init = random_unit_pair(Xc.shape[1], Yc.shape[1], rng)
        stream = (
            TwoViewSample(Xc[i], Yc[i]) for i in self._epoch_order(Xc.shape[0], rng)
        )
        cfg = StepConfig(
            eta=self.eta, schedule=self.schedule, renormalize=self.renormalize
        )
        n_steps = self.n_epochs * Xc.shape[0]
        final, _ = run_gha(stream, init, cfg, n_steps)
        self.n_iter_ = final.step_count
        self._finalize(final.u, final.v, Xc, Yc)
        return self


class MsgPls(_TwoViewMixin, TransformerMixin, BaseEstimator):
    """Leading cross-covariance pair via the projected matrix iteration.

    Each visited row contributes a rank-1 gradient step followed by the
    spectral projection onto the trace-capped feasible set; the fitted pair
    is the leading singular pair of the final matrix.
    """

    def __init__(
        self,
        eta: float = 0.05,
        schedule: str = "inverse_sqrt",
        n_epochs: int = 1,
        center: bool = True,
        shuffle: bool = True,
        random_state: int | None = None,
    ):
        self.eta = eta
        self.schedule = schedule
        self.n_epochs = n_epochs
        self.center = center
        self.shuffle = shuffle
        self.random_state = random_state

    def fit(self, X, Y):
        Xc, Yc = self._prepare(X, Y)
        rng = np.random.default_rng(self.random_state)
        cfg = StepConfig(eta=self.eta, schedule=self.schedule)
        it = msg.MsgIterate(np.zeros((Xc.shape[1], Yc.shape[1])))
        k = 0
        for i in self._epoch_order(Xc.shape[0], rng):
            k += 1
            it = msg.msg_step(it, TwoViewSample(Xc[i], Yc[i]), cfg.step_size(k))
        self.n_iter_ = it.step_count
        u, v, self.singular_value_ = msg.leading_pair(it)
        self._finalize(u, v, Xc, Yc)
        return self
