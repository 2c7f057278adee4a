"""Synthetic curve samples and independent finite-dimensional oracles.

Mixtures are drawn in a d-dimensional orthonormal curve basis, so every curve
is X = a_1 f_1 + ... + a_d f_d and L2 distances between curves equal Euclidean
distances between coefficient vectors. That makes the coefficient-space kernel
density estimator an independent check of the functional computations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import Curve, CurveSample, Grid, SubspaceBasis, gram_schmidt
from .kernels import KernelProfile, eval_kh
from .reconstruction import Observations


def sin_basis(d: int, grid: Grid) -> SubspaceBasis:
    """Orthonormalized sin((k - 1/2) pi t), k = 1..d; every member vanishes at t = 0."""
    if d < 1 or d >= grid.m - 1:
        raise ValueError(f"need 1 <= d < m - 1, got d={d}, m={grid.m}")
    t = grid.points
    raw = [Curve(grid, np.sin((k - 0.5) * np.pi * t)) for k in range(1, d + 1)]
    return gram_schmidt(raw)


@dataclass(frozen=True)
class Component:
    mean: tuple
    std: tuple
    weight: float


@dataclass(frozen=True, eq=False)
class MixtureSpec:
    basis: SubspaceBasis
    components: tuple
    seed: int = 0

    def __post_init__(self):
        d = self.basis.d
        comps = tuple(c if isinstance(c, Component) else Component(*c) for c in self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        for c in comps:
            if len(c.mean) != d or len(c.std) != d:
                raise ValueError(f"component dimensions must match the basis (d={d})")
            if c.weight <= 0 or any(s < 0 for s in c.std):
                raise ValueError("weights must be positive and stddevs nonnegative")
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"component weights sum to {total}, not 1")
        object.__setattr__(self, "components", comps)

    @property
    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components], dtype=float)

    @property
    def stds(self) -> np.ndarray:
        return np.array([c.std for c in self.components], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components], dtype=float)

    def mean_curves(self) -> list:
        return [Curve(self.basis.grid, mu @ self.basis.matrix) for mu in self.means]


@dataclass(frozen=True, eq=False)
class SimulatedSample:
    sample: CurveSample
    coeffs: np.ndarray
    labels: np.ndarray
    mean_curves: list


def two_component_spec(grid: Grid, separation: float = 2.0, std: float = 0.15,
                       seed: int = 0) -> MixtureSpec:
    """Balanced two-component mixture in the first two sin-basis directions."""
    half = 0.5 * separation
    return MixtureSpec(
        sin_basis(2, grid),
        (Component((half, 0.0), (std, std), 0.5), Component((-half, 0.0), (std, std), 0.5)),
        seed,
    )


def sample_mixture(spec: MixtureSpec, n: int) -> SimulatedSample:
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(spec.seed)
    labels = rng.choice(len(spec.components), size=n, p=spec.weights)
    noise = rng.standard_normal((n, spec.basis.d))
    coeffs = spec.means[labels] + spec.stds[labels] * noise
    values = coeffs @ spec.basis.matrix
    sample = CurveSample(spec.basis.grid, values, labels=labels)
    return SimulatedSample(sample, coeffs, labels, spec.mean_curves())


def observe_noisy(sample: CurveSample, sigma: float, seed: int) -> Observations:
    """y_ij = X_i(t_j) + N(0, sigma^2) noise."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    noise = sigma * rng.standard_normal(sample.values.shape)
    return Observations(sample.grid, sample.values + noise, sigma=float(sigma), ids=sample.ids)


def fd_kde_gradient(sample_coeffs, x, kernel: KernelProfile, h: float) -> np.ndarray:
    """Gradient of (1/n) sum_i K_h(|x - a_i|^2) in coefficient space, Euclidean norms."""
    a = np.atleast_2d(np.asarray(sample_coeffs, dtype=float))
    x = np.asarray(x, dtype=float)
    diff = x[None, :] - a
    d2 = np.einsum("ij,ij->i", diff, diff)
    k1 = eval_kh(kernel, h, d2, 1)
    return (2.0 / a.shape[0]) * (k1 @ diff)


def fd_mean_shift(sample_coeffs, x0, kernel: KernelProfile, h: float,
                  tol: float = 1e-13, max_iter: int = 100_000) -> np.ndarray:
    """Plain coefficient-space mean shift, iterated to a fixed point."""
    a = np.atleast_2d(np.asarray(sample_coeffs, dtype=float))
    x = np.asarray(x0, dtype=float).copy()
    for _ in range(max_iter):
        diff = x[None, :] - a
        k1 = eval_kh(kernel, h, np.einsum("ij,ij->i", diff, diff), 1)
        nxt = (k1 @ a) / k1.sum()
        if np.linalg.norm(nxt - x) <= tol:
            return nxt
        x = nxt
    return x


def _population_terms(spec: MixtureSpec, h: float, x: np.ndarray):
    s = 0.5 * h + spec.stds**2  # per-component, per-coordinate scale
    norm = np.prod(np.sqrt(h / (h + 2.0 * spec.stds**2)), axis=1)
    diff = spec.means - x[None, :]
    c = spec.weights * norm * np.exp(-0.5 * np.sum(diff * diff / s, axis=1))
    return c, diff, s


def exponential_population_density(spec: MixtureSpec, h: float, x) -> float:
    """E exp(-|X - x|^2 / h) for X drawn from the mixture, in closed form."""
    c, _, _ = _population_terms(spec, h, np.asarray(x, dtype=float))
    return float(c.sum())


def exponential_population_modes(spec: MixtureSpec, h: float, tol: float = 1e-12,
                                 merge_tol: float = 1e-6) -> list:
    """Non-degenerate local maxima of the population pseudo-density (exponential kernel).

    Under the exponential kernel the pseudo-density of a diagonal Gaussian
    mixture is itself a Gaussian mixture in coefficient space, so its modes are
    found by fixed-point iteration started from every component mean. Returns
    coefficient vectors.
    """
    found = []
    for start in spec.means:
        x = start.copy()
        for _ in range(100_000):
            c, _, s = _population_terms(spec, h, x)
            nxt = (c[:, None] * spec.means / s).sum(0) / (c[:, None] / s).sum(0)
            if np.linalg.norm(nxt - x) <= tol:
                x = nxt
                break
            x = nxt
        c, diff, s = _population_terms(spec, h, x)
        hess = np.einsum("k,ki,kj->ij", c, diff / s, diff / s) - np.diag((c[:, None] / s).sum(0))
        if np.linalg.eigvalsh(hess)[-1] >= 0:
            continue
        if all(np.linalg.norm(x - y) > merge_tol for y in found):
            found.append(x)
    return found


def coeffs_to_curves(coeffs, basis: SubspaceBasis) -> list:
    return [Curve(basis.grid, np.asarray(a) @ basis.matrix) for a in np.atleast_2d(coeffs)]


def rand_index(labels_a: Sequence, labels_b: Sequence) -> float:
    """Fraction of sample pairs on which two partitions agree."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    n = a.size
    if n != b.size:
        raise ValueError("label vectors differ in length")
    if n < 2:
        return 1.0
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(table, (ia, ib), 1)
    pairs = n * (n - 1) / 2
    same_both = (table * (table - 1)).sum() / 2
    same_a = (table.sum(1) * (table.sum(1) - 1)).sum() / 2
    same_b = (table.sum(0) * (table.sum(0) - 1)).sum() / 2
    return float((pairs + 2 * same_both - same_a - same_b) / pairs)
