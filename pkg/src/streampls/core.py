"""Streaming rank-1 two-view PLS updates.

The solver maximizes u^T Sigma_xy v over unit vectors using one Hebbian-style
stochastic step per sample pair. Updates are dual-free: no renormalization is
applied unless explicitly requested, the self-limiting term keeps the norms
near one on its own.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

_SCHEDULES = ("constant", "inverse", "inverse_sqrt")


class StreamExhausted(RuntimeError):
    """The sample stream ended before the requested number of steps."""

    def __init__(self, completed: int, requested: int):
        super().__init__(f"stream exhausted after {completed} of {requested} steps")
        self.completed = completed
        self.requested = requested


class DivergenceError(RuntimeError):
    """A non-finite value appeared in the iterate."""

    def __init__(self, iteration: int):
        super().__init__(f"non-finite iterate at step {iteration}")
        self.iteration = iteration


@dataclass(slots=True)
class TwoViewSample:
    """One paired observation. Masks, when present, mark observed entries;
    masked-out entries of x and y are already zero-imputed."""

    x: np.ndarray
    y: np.ndarray
    mask_x: np.ndarray | None = None
    mask_y: np.ndarray | None = None


@dataclass(slots=True)
class PlsIterate:
    """Solution state: the pair of direction vectors and how many
    stochastic steps produced it."""

    u: np.ndarray
    v: np.ndarray
    step_count: int = 0

    def copy(self) -> "PlsIterate":
        return PlsIterate(self.u.copy(), self.v.copy(), self.step_count)


@dataclass
class StepConfig:
    """Step-size policy for the streaming solver.

    eta is the constant step size, or the numerator c of c/k
    ("inverse") or c/sqrt(k) ("inverse_sqrt") with k counted from 1.
    observe_prob is carried for missing-data runs; the harness masks the
    stream and folds the debias factor into eta itself.
    """

    eta: float
    schedule: str = "constant"
    renormalize: bool = False
    observe_prob: float = 1.0

    def __post_init__(self):
        if not (self.eta > 0.0 and math.isfinite(self.eta)):
            raise ValueError("eta must be a positive finite number")
        if self.schedule not in _SCHEDULES:
            raise ValueError(f"schedule must be one of {_SCHEDULES}")
        if not 0.0 < self.observe_prob <= 1.0:
            raise ValueError("observe_prob must lie in (0, 1]")

    def step_size(self, k: int) -> float:
        """Step size for 1-based step index k."""
        if k < 1:
            raise ValueError("step index counts from 1")
        if self.schedule == "constant":
            return self.eta
        if self.schedule == "inverse":
            return self.eta / k
        return self.eta / math.sqrt(k)


def gha_step(sample: TwoViewSample, iterate: PlsIterate, eta: float) -> PlsIterate:
    """One simultaneous stochastic update of (u, v).

    Both updates read the pre-step state, and the shared scalar
    (u.x)(y.v) is computed exactly once. Cost is O(m + d); no outer
    product is formed and no renormalization is applied.
    """
    u, v = iterate.u, iterate.v
    x, y = sample.x, sample.y
    if np.shape(x) != np.shape(u) or np.shape(y) != np.shape(v):
        raise ValueError("sample and iterate dimensions disagree")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("sample contains non-finite entries")
    yv = float(y @ v)
    ux = float(u @ x)
    s = ux * yv
    u_next = u + eta * (yv * x - s * u)
    v_next = v + eta * (ux * y - s * v)
    return PlsIterate(u_next, v_next, iterate.step_count + 1)


def gha_step_missing(sample: TwoViewSample, iterate: PlsIterate, eta_p: float) -> PlsIterate:
    """Missing-data variant: identical algebra on zero-imputed samples.

    The unbiased estimator would rescale the outer product by 1/p^2; that
    constant is absorbed into eta_p by the caller instead, so the update
    itself does not touch the masks beyond requiring them.
    """
    if sample.mask_x is None or sample.mask_y is None:
        raise ValueError("sample carries no observation masks")
    return gha_step(sample, iterate, eta_p)


def objective(u: np.ndarray, v: np.ndarray, sigma_xy: np.ndarray) -> float:
    """Cross-covariance objective u^T Sigma_xy v."""
    return float(u @ sigma_xy @ v)


def alignment_error(u, v, u_ref, v_ref) -> float:
    """Squared distance to the reference pair, minimized over the joint sign."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u_ref = np.asarray(u_ref, dtype=float)
    v_ref = np.asarray(v_ref, dtype=float)
    plus = float((u - u_ref) @ (u - u_ref) + (v - v_ref) @ (v - v_ref))
    minus = float((u + u_ref) @ (u + u_ref) + (v + v_ref) @ (v + v_ref))
    return min(plus, minus)


def random_unit_pair(m: int, d: int, rng: np.random.Generator) -> PlsIterate:
    """Independent uniform directions on the two unit spheres."""
    u = rng.standard_normal(m)
    v = rng.standard_normal(d)
    u /= math.sqrt(float(u @ u))
    v /= math.sqrt(float(v @ v))
    return PlsIterate(u, v)


@dataclass
class Trajectory:
    """Logged scalar series over a single run.

    iters holds the step indices at which the coords series were sampled
    (0 is the initial state); coords maps a column name to one value per
    logged index.
    """

    iters: np.ndarray
    coords: dict[str, np.ndarray]
    seed: int | None = None


def run_gha(
    stream: Iterable[TwoViewSample],
    init: PlsIterate,
    config: StepConfig,
    n_steps: int,
    *,
    log_probes: Mapping[str, Callable[[np.ndarray, np.ndarray], float]] | None = None,
    log_stride: int = 0,
    log_at: Sequence[int] = (),
    step_observer: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
    seed: int | None = None,
) -> tuple[PlsIterate, Trajectory]:
    """Drive the streaming update for n_steps samples.

    Probes are evaluated on (u, v) at step 0, every log_stride steps
    (0 disables the stride), at each extra index in log_at, and at the
    final step. step_observer, when given, is called after every step; a
    truthy return value stops the run early at that step. Raises
    StreamExhausted if the stream ends early and DivergenceError when the
    iterate stops being finite.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    u = np.array(init.u, dtype=float, copy=True)
    v = np.array(init.v, dtype=float, copy=True)
    if u.ndim != 1 or v.ndim != 1:
        raise ValueError("init vectors must be 1-D")

    probes = dict(log_probes or {})
    points: set[int] = set(int(i) for i in log_at if 0 <= int(i) <= n_steps)
    if log_stride > 0:
        points.update(range(0, n_steps + 1, log_stride))
    if probes:
        points.add(0)
        points.add(n_steps)
    log_indices = sorted(points)
    logged_iters: list[int] = []
    logged: dict[str, list[float]] = {name: [] for name in probes}

    def take_log(k: int):
        if not (np.isfinite(u).all() and np.isfinite(v).all()):
            raise DivergenceError(k)
        logged_iters.append(k)
        for name, fn in probes.items():
            logged[name].append(float(fn(u, v)))

    next_log = log_indices[0] if log_indices else -1
    log_pos = 0
    if next_log == 0:
        take_log(0)
        log_pos += 1
        next_log = log_indices[1] if len(log_indices) > 1 else -1

    schedule = config.schedule
    eta_const = config.eta if schedule == "constant" else 0.0
    renorm = config.renormalize
    observer = step_observer

    k = 0
    it = iter(stream)
    while k < n_steps:
        try:
            sample = next(it)
        except StopIteration:
            raise StreamExhausted(k, n_steps) from None
        k += 1
        if schedule == "constant":
            eta = eta_const
        else:
            eta = config.step_size(k)
        x = sample.x
        y = sample.y
        yv = float(y @ v)
        ux = float(u @ x)
        s = ux * yv
        if not math.isfinite(s):
            raise DivergenceError(k)
        u = u + eta * (yv * x - s * u)
        v = v + eta * (ux * y - s * v)
        if renorm:
            u /= math.sqrt(float(u @ u))
            v /= math.sqrt(float(v @ v))
        stop = observer is not None and observer(k, u, v)
        if k == next_log:
            take_log(k)
            log_pos += 1
            next_log = log_indices[log_pos] if log_pos < len(log_indices) else -1
        if stop:
            break

    if not (np.isfinite(u).all() and np.isfinite(v).all()):
        raise DivergenceError(k)
    traj = Trajectory(
        iters=np.asarray(logged_iters, dtype=np.int64),
        coords={name: np.asarray(vals) for name, vals in logged.items()},
        seed=seed,
    )
    return PlsIterate(u, v, init.step_count + k), traj


def write_trajectories_csv(path, trajectories: Sequence[Trajectory]) -> None:
    """Long-format CSV (iter,coord_name,value,seed), 17 significant digits,
    LF line endings. Rows are ordered by trajectory, then iteration, then
    the coords insertion order, so identical inputs give identical bytes."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iter,coord_name,value,seed\n")
        for traj in trajectories:
            seed_txt = "" if traj.seed is None else str(traj.seed)
            names = list(traj.coords)
            for i, k in enumerate(traj.iters):
                for name in names:
                    val = traj.coords[name][i]
                    fh.write(f"{k},{name},{val:.17g},{seed_txt}\n")


def read_trajectories_csv(path) -> list[Trajectory]:
    """Inverse of write_trajectories_csv.

    Rows are grouped into one Trajectory per seed value, in order of first
    appearance; every coordinate in a group must be sampled at the same
    iteration indices.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty trajectory file") from None
        if header != ["iter", "coord_name", "value", "seed"]:
            raise ValueError(f"{path}: unexpected header {header!r}")
        groups: dict[object, dict] = {}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise ValueError(f"{path}: line {lineno}: expected 4 columns")
            try:
                k = int(row[0])
                val = float(row[2])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric field") from None
            seed = None if row[3] == "" else int(row[3])
            grp = groups.setdefault(seed, {"iters": [], "coords": {}})
            grp["coords"].setdefault(row[1], []).append(val)
            if not grp["iters"] or grp["iters"][-1] != k:
                grp["iters"].append(k)
    out = []
    for seed, grp in groups.items():
        n = len(grp["iters"])
        for name, series in grp["coords"].items():
            if len(series) != n:
                raise ValueError(
                    f"{path}: coordinate {name!r} for seed {seed} has "
                    f"{len(series)} values over {n} iterations"
                )
        out.append(
            Trajectory(
                iters=np.asarray(grp["iters"], dtype=np.int64),
                coords={k: np.asarray(v) for k, v in grp["coords"].items()},
                seed=seed,
            )
        )
    return out
