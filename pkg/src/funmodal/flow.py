"""Gradient ascent on the sample pseudo-density and basin-of-attraction clustering."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .density import DensityModel, hessian_summary
from .errors import DeadZoneError, GridMismatchError, NumericalError
from .grid import Curve, CurveSample
from .kernels import eval_kh

log = logging.getLogger(__name__)

METHODS = ("mean_shift", "euler")
# relative slack when comparing densities of successive iterates
_DENSITY_SLACK = 1e-13
_MAX_HALVINGS = 40
# mean shift also waits for |x - target| to settle below this (margin under 1e-8)
FIXED_POINT_TOL = 5e-9


@dataclass(frozen=True)
class AscentOptions:
    """Ascent settings. ``None`` tolerances/steps are filled from the model.

    tol_grad defaults to 1e-7 * K1 and the Euler step to h / 2.
    """

    method: str = "mean_shift"
    step: Optional[float] = None
    tol_grad: Optional[float] = None
    tol_step: float = 1e-9
    max_iter: int = 10_000
    backtrack: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")
        if self.tol_grad is not None and not self.tol_grad > 0:
            raise ValueError("tol_grad must be positive")
        if not self.tol_step > 0:
            raise ValueError("tol_step must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")

    def resolved(self, model: DensityModel) -> "AscentOptions":
        return replace(
            self,
            tol_grad=self.tol_grad if self.tol_grad is not None else 1e-7 * model.constants.K1,
            step=self.step if self.step is not None else 0.5 * model.h,
        )


@dataclass(frozen=True, eq=False)
class AscentResult:
    endpoint: Curve
    iterations: int
    final_grad_norm: float
    density_trace: np.ndarray
    converged: bool

    @property
    def density(self) -> float:
        return float(self.density_trace[-1])


def mean_shift_weights(model: DensityModel, x: Curve) -> np.ndarray:
    """w_i = K_h'(d_i^2) / sum_j K_h'(d_j^2); nonnegative and summing to one."""
    if x.grid.m != model.grid.m:
        raise GridMismatchError(f"point on m={x.grid.m} grid, model on m={model.grid.m}")
    v = x.values[None, :] - model.sample.values
    d2 = (v * v) @ model.grid.weights
    k1 = eval_kh(model.kernel, model.h, d2, 1)
    total = k1.sum()
    if total == 0:
        raise DeadZoneError(
            "all kernel weights vanish at this point; increase the bandwidth h"
        )
    return k1 / total


def mean_shift_step(model: DensityModel, x: Curve) -> Curve:
    return Curve(x.grid, mean_shift_weights(model, x) @ model.sample.values)


class _Evaluation:
    """Density, gradient and mean-shift target for a batch of points."""

    def __init__(self, model: DensityModel, z: np.ndarray):
        d2 = model.squared_distances(z)
        k0 = eval_kh(model.kernel, model.h, d2, 0)
        k1 = np.atleast_2d(eval_kh(model.kernel, model.h, d2, 1))
        ksum = k1.sum(axis=1)
        if np.any(ksum == 0):
            raise DeadZoneError(
                "all kernel weights vanish at an ascent iterate; increase the bandwidth h"
            )
        n = model.n
        self.density = np.atleast_2d(k0).mean(axis=1)
        self.target = (k1 @ model.sample.values) / ksum[:, None]
        self.grad = (2.0 / n) * ksum[:, None] * (z - self.target)
        self.grad_norm = np.sqrt((self.grad * self.grad) @ model.grid.weights)
        if not (np.all(np.isfinite(self.target)) and np.all(np.isfinite(self.density))):
            raise NumericalError("non-finite value during ascent")

    def take(self, rows, other: "_Evaluation", other_rows):
        for name in ("density", "target", "grad", "grad_norm"):
            getattr(self, name)[rows] = getattr(other, name)[other_rows]


def _l2_norms(diff: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return np.sqrt((diff * diff) @ weights)


def ascend_many(model: DensityModel, starts, opts: Optional[AscentOptions] = None) -> list:
    """Run the ascent from every start at once; returns one AscentResult per start."""
    opts = (opts or AscentOptions()).resolved(model)
    grid = model.grid
    if isinstance(starts, CurveSample):
        z = np.array(starts.values, dtype=float)
    elif isinstance(starts, Curve):
        z = np.array(starts.values, dtype=float)[None, :]
    elif len(starts) and isinstance(starts[0], Curve):
        z = np.stack([c.values for c in starts]).astype(float)
    else:
        z = np.array(starts, dtype=float, ndmin=2)
    if z.shape[1] != grid.m:
        raise GridMismatchError(f"starts have {z.shape[1]} points, model grid has {grid.m}")
    w = grid.weights
    count = z.shape[0]
    ev = _Evaluation(model, z)
    traces = [[float(d)] for d in ev.density]
    iterations = np.zeros(count, dtype=int)
    done = np.zeros(count, dtype=bool)

    for _ in range(int(opts.max_iter)):
        small = ev.grad_norm <= opts.tol_grad
        if opts.method == "mean_shift":
            small &= _l2_norms(z - ev.target, w) <= FIXED_POINT_TOL
        done |= small
        rows = np.flatnonzero(~done)
        if rows.size == 0:
            break
        cur = z[rows]
        if opts.method == "mean_shift":
            proposal = ev.target[rows]
        else:
            proposal = cur + opts.step * ev.grad[rows]
        cand = proposal.copy()
        cand_ev = _Evaluation(model, cand)
        if opts.backtrack:
            old = ev.density[rows]
            worse = np.flatnonzero(cand_ev.density < old - _DENSITY_SLACK * old)
            for k in worse:
                frac = 1.0
                accepted = False
                for _ in range(_MAX_HALVINGS):
                    frac *= 0.5
                    trial = cur[k] + frac * (proposal[k] - cur[k])
                    trial_ev = _Evaluation(model, trial[None, :])
                    if trial_ev.density[0] >= old[k] - _DENSITY_SLACK * old[k]:
                        accepted = True
                        break
                if accepted:
                    cand[k] = trial
                    cand_ev.take([k], trial_ev, [0])
                else:
                    # no ascent direction left within round-off: stay put
                    cand[k] = cur[k]
                    own = _Evaluation(model, cur[k][None, :])
                    cand_ev.take([k], own, [0])
        disp = _l2_norms(cand - cur, w)
        z[rows] = cand
        ev.take(rows, cand_ev, np.arange(rows.size))
        iterations[rows] += 1
        for k, r in enumerate(rows):
            traces[r].append(float(cand_ev.density[k]))
        done[rows[disp <= opts.tol_step]] = True

    results = []
    for i in range(count):
        gnorm = float(ev.grad_norm[i])
        results.append(AscentResult(
            endpoint=Curve(grid, z[i]),
            iterations=int(iterations[i]),
            final_grad_norm=gnorm,
            density_trace=np.array(traces[i]),
            converged=gnorm <= opts.tol_grad,
        ))
    return results


def ascend(model: DensityModel, x0: Curve, opts: Optional[AscentOptions] = None) -> AscentResult:
    return ascend_many(model, x0, opts)[0]


@dataclass(frozen=True, eq=False)
class Mode:
    curve: Curve
    delta: float
    density: float
    count: int = 1


@dataclass(frozen=True, eq=False)
class ModeSet:
    modes: tuple
    merge_radius: float
    # critical points with delta <= 0, kept for inspection only
    non_max: tuple = ()
    n_unconverged: int = 0

    def __len__(self):
        return len(self.modes)

    @property
    def curves(self) -> list:
        return [md.curve for md in self.modes]

    @property
    def deltas(self) -> np.ndarray:
        return np.array([md.delta for md in self.modes])

    @property
    def densities(self) -> np.ndarray:
        return np.array([md.density for md in self.modes])


def default_merge_radius(model: DensityModel) -> float:
    return 0.05 * float(np.sqrt(model.h))


def _make_mode(model: DensityModel, curve: Curve, dens: float, count: int = 1) -> Mode:
    return Mode(curve, hessian_summary(model, curve).delta, dens, count)


def merge_modes(results: Sequence[AscentResult], model: DensityModel,
                merge_radius: Optional[float] = None, keep_non_max: bool = False) -> ModeSet:
    """Greedy agglomeration of converged endpoints, highest density first."""
    radius = default_merge_radius(model) if merge_radius is None else float(merge_radius)
    usable = [r for r in results if r.converged]
    skipped = len(results) - len(usable)
    if skipped:
        warnings.warn(f"{skipped} ascent(s) did not converge and were ignored", RuntimeWarning)
    order = np.argsort([-r.density for r in usable], kind="stable")
    w = model.grid.weights
    founders = []  # [values, Mode, is_max]
    for idx in order:
        res = usable[idx]
        x = res.endpoint.values
        for entry in founders:
            diff = x - entry[0]
            if np.sqrt(np.dot(w, diff * diff)) <= radius:
                entry[1] = replace(entry[1], count=entry[1].count + 1)
                break
        else:
            mode = _make_mode(model, res.endpoint, res.density)
            founders.append([x, mode, mode.delta > 0])
    modes = tuple(e[1] for e in founders if e[2] or keep_non_max)
    non_max = tuple(e[1] for e in founders if not e[2])
    if non_max:
        log.info("%d endpoint group(s) are non-max critical points (delta <= 0)", len(non_max))
    return ModeSet(modes, radius, non_max if not keep_non_max else (), skipped)


@dataclass(frozen=True, eq=False)
class Clustering:
    labels: np.ndarray
    mode_ids: tuple
    modeset: ModeSet
    # sample indices whose ascent hit max_iter
    unconverged: tuple = ()


def assign_clusters(model: DensityModel, modeset: ModeSet, opts: Optional[AscentOptions] = None,
                    results: Optional[Sequence[AscentResult]] = None) -> Clustering:
    """Label every sample curve by the mode its ascent path reaches.

    ``results`` may hold ascents already run from the sample curves (in order),
    which avoids running them twice.
    """
    if results is None:
        results = ascend_many(model, model.sample, opts)
    if len(results) != model.n:
        raise ValueError("need one ascent result per sample curve")
    w = model.grid.weights
    modes = list(modeset.modes)
    labels = np.empty(model.n, dtype=int)
    unconverged = []
    for i, res in enumerate(results):
        x = res.endpoint.values
        if modes:
            dist = np.array([np.sqrt(np.dot(w, (x - md.curve.values) ** 2)) for md in modes])
            j = int(np.argmin(dist))  # ties -> lowest index
            nearest = dist[j]
        else:
            j, nearest = -1, np.inf
        if not res.converged:
            unconverged.append(i)
            if j < 0:
                modes.append(_make_mode(model, res.endpoint, res.density))
                j = len(modes) - 1
        elif nearest > modeset.merge_radius and j >= 0 and any(
                np.sqrt(np.dot(w, (x - nm.curve.values) ** 2)) <= modeset.merge_radius
                for nm in modeset.non_max):
            # stalled on an excluded saddle; keep the nearest genuine mode
            pass
        elif nearest > modeset.merge_radius:
            warnings.warn(
                f"curve {i} ascended to a point {nearest:.3g} away from every mode; "
                "adding it as a new mode", RuntimeWarning)
            modes.append(_make_mode(model, res.endpoint, res.density))
            j = len(modes) - 1
        labels[i] = j
    if len(modes) != len(modeset.modes):
        modeset = replace(modeset, modes=tuple(modes))
    return Clustering(labels, tuple(range(len(modes))), modeset, tuple(unconverged))


def modal_clustering(model: DensityModel, opts: Optional[AscentOptions] = None,
                     merge_radius: Optional[float] = None):
    """Ascend from every sample curve once, merge endpoints, and label the sample."""
    results = ascend_many(model, model.sample, opts)
    modeset = merge_modes(results, model, merge_radius)
    return assign_clusters(model, modeset, opts, results=results)
