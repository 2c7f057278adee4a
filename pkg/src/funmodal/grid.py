"""Curves sampled on a uniform grid of [0, 1].

The L2 inner product uses the trapezoid rule and the H1_0 norm uses forward
differences with a rectangle rule. Curves live in H1_0 after subtracting their
value at t = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import GridMismatchError, InvalidGridError, RankDeficiencyError

PIVOT_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform design points t_j = (j - 1)/(m - 1), j = 1..m."""

    m: int

    def __post_init__(self):
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 3:
            raise InvalidGridError(f"grid needs at least 3 points, got m={self.m!r}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def spacing(self) -> float:
        return 1.0 / (self.m - 1)

    @cached_property
    def points(self) -> np.ndarray:
        t = np.linspace(0.0, 1.0, self.m)
        t.flags.writeable = False
        return t

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.m, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        w.flags.writeable = False
        return w


def make_grid(m: int) -> Grid:
    return Grid(m)


def _check_same_grid(*grids: Grid) -> Grid:
    first = grids[0]
    for g in grids[1:]:
        if g.m != first.m:
            raise GridMismatchError(f"curves live on different grids (m={first.m} vs m={g.m})")
    return first


@dataclass(frozen=True, eq=False)
class Curve:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.m,):
            raise InvalidGridError(
                f"curve has {v.shape} values but the grid has {self.grid.m} points"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("curve values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __add__(self, other: "Curve") -> "Curve":
        _check_same_grid(self.grid, other.grid)
        return Curve(self.grid, self.values + other.values)

    def __sub__(self, other: "Curve") -> "Curve":
        _check_same_grid(self.grid, other.grid)
        return Curve(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "Curve":
        return Curve(self.grid, float(scalar) * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class CurveSample:
    """n curves sharing one grid, stored row-wise in ``values`` (n x m)."""

    grid: Grid
    values: np.ndarray
    labels: Optional[np.ndarray] = None
    ids: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, ndmin=2)
        if v.ndim != 2 or v.shape[1] != self.grid.m:
            raise InvalidGridError(f"sample of shape {v.shape} does not match m={self.grid.m}")
        if v.shape[0] < 1:
            raise ValueError("a sample needs at least one curve")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (v.shape[0],):
                raise ValueError("labels must have one entry per curve")
            object.__setattr__(self, "labels", lab)
        if self.ids is None:
            object.__setattr__(self, "ids", tuple(f"curve_{i}" for i in range(v.shape[0])))
        elif len(self.ids) != v.shape[0]:
            raise ValueError("ids must have one entry per curve")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __len__(self):
        return self.n

    def __getitem__(self, i: int) -> Curve:
        return Curve(self.grid, self.values[i])

    @property
    def curves(self) -> list:
        return [self[i] for i in range(self.n)]

    @classmethod
    def from_curves(cls, curves: Sequence[Curve], labels=None) -> "CurveSample":
        if len(curves) == 0:
            raise ValueError("a sample needs at least one curve")
        grid = _check_same_grid(*[c.grid for c in curves])
        return cls(grid, np.stack([c.values for c in curves]), labels=labels)

    def shifted(self) -> "CurveSample":
        return CurveSample(self.grid, self.values - self.values[:, :1], self.labels, self.ids)


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Curves orthonormal under the discrete L2 inner product."""

    grid: Grid
    basis_curves: tuple

    @property
    def d(self) -> int:
        return len(self.basis_curves)

    @property
    def matrix(self) -> np.ndarray:
        """d x m array of basis values."""
        return np.stack([f.values for f in self.basis_curves])


def normalize_shift(curve: Curve) -> Curve:
    return Curve(curve.grid, curve.values - curve.values[0])


def inner_l2(x: Curve, y: Curve) -> float:
    grid = _check_same_grid(x.grid, y.grid)
    return float(np.dot(grid.weights, x.values * y.values))


def norm_l2(x: Curve) -> float:
    return float(np.sqrt(inner_l2(x, x)))


def norm_h10(x: Curve) -> float:
    diffs = np.diff(x.values)
    return float(np.sqrt(np.sum(diffs * diffs) / x.grid.spacing))


def h10_norms(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Row-wise H1_0 norms of an (n, m) array."""
    diffs = np.diff(np.atleast_2d(values), axis=1)
    return np.sqrt(np.sum(diffs * diffs, axis=1) / grid.spacing)


def linear_combination(coeffs: Sequence[float], curves: Sequence[Curve]) -> Curve:
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (len(curves),):
        raise ValueError(f"{coeffs.size} coefficients for {len(curves)} curves")
    if len(curves) == 0:
        raise ValueError("empty linear combination has no grid")
    grid = _check_same_grid(*[c.grid for c in curves])
    return Curve(grid, coeffs @ np.stack([c.values for c in curves]))


def gram_schmidt(curves: Sequence[Curve]) -> SubspaceBasis:
    """Modified Gram-Schmidt with one re-orthogonalization pass."""
    if len(curves) == 0:
        raise ValueError("need at least one curve")
    grid = _check_same_grid(*[c.grid for c in curves])
    w = grid.weights
    basis = []
    for k, c in enumerate(curves):
        v = c.values.copy()
        for _ in range(2):
            for q in basis:
                v -= np.dot(w, q * v) * q
        norm = np.sqrt(np.dot(w, v * v))
        if norm < PIVOT_TOL:
            raise RankDeficiencyError(k, norm)
        basis.append(v / norm)
    return SubspaceBasis(grid, tuple(Curve(grid, q) for q in basis))


def project(curve: Curve, basis: SubspaceBasis) -> np.ndarray:
    """Coefficients of the L2 projection of ``curve`` onto the basis span."""
    _check_same_grid(curve.grid, basis.grid)
    return basis.matrix @ (basis.grid.weights * curve.values)
