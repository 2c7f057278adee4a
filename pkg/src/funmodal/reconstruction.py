"""Gasser-Mueller reconstruction of curves from noisy grid observations.

    X~(t) = sum_j y_j / b * integral_{t_{j-1}}^{t_j} W((t - u) / b) du,  t_0 = 0

The estimator is linear in the data, so the whole reconstruction is one
(m_eval x m) weight matrix applied to every observed row.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid

from .errors import InvalidGridError, UndersmoothingError
from .grid import Curve, CurveSample, Grid

log = logging.getLogger(__name__)

BOUNDARY_MODES = ("renormalize", "reflect")
_MIDPOINTS = 16


@dataclass(frozen=True)
class SmoothingKernel:
    """Regression weight kernel W on [-support, support] with unit integral.

    ``cdf`` (the running integral of W) lets segment integrals be exact; without
    it a 16-point composite midpoint rule per segment is used.
    """

    name: str
    value: Callable
    cdf: Optional[Callable] = None
    support: float = 1.0


def _epanechnikov(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def _epanechnikov_cdf(u):
    u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
    return 0.5 + 0.75 * u - 0.25 * u**3


EPANECHNIKOV = SmoothingKernel("epanechnikov", _epanechnikov, _epanechnikov_cdf)


@dataclass(frozen=True)
class SmootherSpec:
    W: SmoothingKernel = EPANECHNIKOV
    b: float = 0.5
    boundary: str = "renormalize"

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"smoothing bandwidth must be positive, got b={self.b!r}")
        if self.boundary not in BOUNDARY_MODES:
            raise ValueError(f"boundary must be one of {BOUNDARY_MODES}")
        s = self.W.support
        u = np.linspace(-s, s, 200_001)
        vals = self.W.value(u)
        if np.any(vals < 0):
            raise ValueError("weight kernel must be nonnegative")
        total = trapezoid(vals, u)
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"weight kernel integrates to {total:.10f}, not 1")


@dataclass(frozen=True, eq=False)
class Observations:
    grid: Grid
    values: np.ndarray
    sigma: Optional[float] = None
    ids: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, ndmin=2)
        if v.shape[1] != self.grid.m:
            raise InvalidGridError(f"observations of shape {v.shape} do not match m={self.grid.m}")
        if not np.all(np.isfinite(v)):
            raise ValueError("observations must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.ids is None:
            object.__setattr__(self, "ids", tuple(f"curve_{i}" for i in range(v.shape[0])))

    @property
    def n(self) -> int:
        return self.values.shape[0]


def default_bandwidth(m: int, c_b: float = 1.0) -> float:
    if m < 3:
        raise InvalidGridError(f"need at least 3 design points, got m={m}")
    return c_b * m ** (-0.2)


def phi_plugin(m: int, c_phi: float = 1.0) -> float:
    """Plug-in L1 reconstruction error bound c_phi * m^(-2/5)."""
    if m < 3:
        raise InvalidGridError(f"need at least 3 design points, got m={m}")
    if not c_phi > 0:
        raise ValueError("c_phi must be positive")
    return c_phi * (m ** -0.2) ** 2


def _segment_integrals(W: SmoothingKernel, b: float, t_eval, lo, hi) -> np.ndarray:
    """(1/b) * integral_lo^hi W((t - u)/b) du for every eval point and segment."""
    te = np.asarray(t_eval)[:, None]
    if W.cdf is not None:
        return W.cdf((te - lo[None, :]) / b) - W.cdf((te - hi[None, :]) / b)
    frac = (np.arange(_MIDPOINTS) + 0.5) / _MIDPOINTS
    width = hi - lo
    u = lo[:, None] + width[:, None] * frac[None, :]
    vals = W.value((te[:, :, None] - u[None, :, :]) / b)
    return vals.sum(axis=2) * (width / _MIDPOINTS)[None, :] / b


def smoothing_matrix(grid: Grid, spec: SmootherSpec, eval_grid: Grid) -> np.ndarray:
    """Weights A with X~(eval points) = A @ y; rows sum to one."""
    t = grid.points
    lo = np.concatenate(([0.0], t[:-1]))  # segment j is [t_{j-1}, t_j], t_0 = 0
    hi = t
    te = eval_grid.points
    A = _segment_integrals(spec.W, spec.b, te, lo, hi)
    if spec.boundary == "reflect":
        A = A + _segment_integrals(spec.W, spec.b, te, -hi, -lo)
        A = A + _segment_integrals(spec.W, spec.b, te, 2.0 - hi, 2.0 - lo)
    total = A.sum(axis=1)
    if np.any(total <= 1e-12):
        bad = float(te[np.argmin(total)])
        raise UndersmoothingError(
            f"no design point carries weight near t={bad:.4g}; increase b (now {spec.b:.3g})"
        )
    return A / total[:, None]


def gm_smooth(obs_row, grid: Grid, spec: SmootherSpec, eval_grid: Optional[Grid] = None,
              shift: bool = True) -> Curve:
    eval_grid = eval_grid or grid
    y = np.asarray(obs_row, dtype=float)
    if y.shape != (grid.m,):
        raise InvalidGridError(f"row has {y.shape} values for an m={grid.m} grid")
    vals = smoothing_matrix(grid, spec, eval_grid) @ y
    if shift:
        vals = vals - vals[0]
    return Curve(eval_grid, vals)


def reconstruct_sample(obs: Observations, spec: SmootherSpec,
                       eval_grid: Optional[Grid] = None, shift: bool = True) -> CurveSample:
    eval_grid = eval_grid or obs.grid
    if obs.n >= obs.grid.m ** 0.4:
        log.warning(
            "n=%d is not small against m^(2/5)=%.2f; reconstructed curves may leave "
            "the H1_0 ball assumed by the consistency result", obs.n, obs.grid.m ** 0.4)
    vals = obs.values @ smoothing_matrix(obs.grid, spec, eval_grid).T
    if shift:
        vals = vals - vals[:, :1]
    return CurveSample(eval_grid, vals, ids=obs.ids)
