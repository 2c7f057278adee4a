"""Sample pseudo-density of a curve sample and its derivatives.

    p(x)          = (1/n) sum_i K_h(|X_i - x|^2)
    grad p(x)     = (2/n) sum_i K_h'(d_i^2) (x - X_i)
    D2p(x)(z1,z2) = (1/n) sum_i [4 K_h''(d_i^2) <x - X_i, z1><x - X_i, z2>
                                 + 2 K_h'(d_i^2) <z1, z2>]

with |.| and <.,.> the discrete L2 norm and inner product of the grid.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import AssumptionViolationError, GridMismatchError, KernelDomainError, NumericalError
from .grid import Curve, CurveSample
from .kernels import KernelConstants, KernelProfile, check_assumptions, eval_kh, get_kernel, kernel_constants

RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DensityModel:
    sample: CurveSample
    kernel: KernelProfile
    h: float
    constants: KernelConstants

    @property
    def grid(self):
        return self.sample.grid

    @property
    def n(self) -> int:
        return self.sample.n

    @cached_property
    def _weighted(self) -> np.ndarray:
        return self.sample.values * self.grid.weights

    @cached_property
    def _sq_norms(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.sample.values, self._weighted)

    def squared_distances(self, points: np.ndarray) -> np.ndarray:
        """|X_i - z_a|^2 for a batch of points (a, m) -> (a, n).

        Uses the expanded form, so it is meant for batched ascent; the single
        point functions below difference the curves directly.
        """
        z = np.atleast_2d(points)
        zz = np.einsum("ij,ij->i", z * self.grid.weights, z)
        d2 = zz[:, None] + self._sq_norms[None, :] - 2.0 * z @ self._weighted.T
        return np.maximum(d2, 0.0)


def make_model(sample: CurveSample, kernel="exponential", h: float = 1.0, check: bool = True) -> DensityModel:
    """Build a density model; the kernel must satisfy K' + K <= 0 unless ``check`` is off."""
    kernel = get_kernel(kernel)
    if not h > 0:
        raise KernelDomainError(f"bandwidth must be positive, got h={h!r}")
    if check:
        report = check_assumptions(kernel)
        if not report.h2_pass:
            raise AssumptionViolationError(
                f"kernel {kernel.name!r} violates K'(t^2) + K(t^2) <= 0 on t in "
                f"{report.h2_violation_interval} (worst {report.h2_worst_value:.3g} "
                f"at t={report.h2_worst_t:.4g})"
            )
    return DensityModel(sample, kernel, float(h), kernel_constants(kernel, h))


def _diffs(model: DensityModel, x: Curve):
    if x.grid.m != model.grid.m:
        raise GridMismatchError(f"point on m={x.grid.m} grid, model on m={model.grid.m}")
    v = x.values[None, :] - model.sample.values
    d2 = (v * v) @ model.grid.weights
    return v, d2


def density(model: DensityModel, x: Curve) -> float:
    _, d2 = _diffs(model, x)
    return float(np.mean(eval_kh(model.kernel, model.h, d2, 0)))


def gradient(model: DensityModel, x: Curve) -> Curve:
    v, d2 = _diffs(model, x)
    k1 = eval_kh(model.kernel, model.h, d2, 1)
    return Curve(x.grid, (2.0 / model.n) * (k1 @ v))


def hessian_form(model: DensityModel, x: Curve, z1: Curve, z2: Curve) -> float:
    v, d2 = _diffs(model, x)
    if z1.grid.m != x.grid.m or z2.grid.m != x.grid.m:
        raise GridMismatchError("directions must share the model grid")
    w = model.grid.weights
    p1 = v @ (w * z1.values)
    p2 = v @ (w * z2.values)
    k1 = eval_kh(model.kernel, model.h, d2, 1)
    k2 = eval_kh(model.kernel, model.h, d2, 2)
    z12 = float(np.dot(w, z1.values * z2.values))
    # group p1 * p2 first so the form is exactly symmetric in rounding
    return float(np.mean(4.0 * k2 * (p1 * p2) + 2.0 * k1 * z12))


@dataclass(frozen=True, eq=False)
class HessianSummary:
    sup_form: float
    delta: float
    complement_value: float
    top_eigenvalue: float
    span_dim: int
    direction: Curve


def hessian_summary(model: DensityModel, x: Curve) -> HessianSummary:
    """Largest value of D2p(x)(u, u) over unit-norm u, and its maximizer.

    The form is c <u, u> + sum_i a_i <v_i, u>^2 with v_i = x - X_i, so its
    spectrum is c on the complement of span{v_i} and c plus the eigenvalues of
    G^(1/2) diag(a) G^(1/2) on the span, G being the Gram matrix of the v_i.
    """
    v, d2 = _diffs(model, x)
    n, m = v.shape
    ambient = m - 1
    c = 2.0 * float(np.mean(eval_kh(model.kernel, model.h, d2, 1)))
    a = (4.0 / n) * eval_kh(model.kernel, model.h, d2, 2)
    sqrt_w = np.sqrt(model.grid.weights)
    u_rows = v * sqrt_w
    gram = u_rows @ u_rows.T
    try:
        lam, q = np.linalg.eigh(gram)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Gram eigensolver failed: {exc}") from exc
    trace = float(np.sum(np.diag(gram)))
    keep = lam > RANK_TOL * trace if trace > 0 else np.zeros_like(lam, dtype=bool)
    r = int(np.count_nonzero(keep))
    # orthonormal basis of span{v_i}, in sqrt-weight coordinates (columns)
    span_basis = u_rows.T @ (q[:, keep] / np.sqrt(lam[keep]))
    if r:
        half = q[:, keep] * np.sqrt(lam[keep])
        small = half.T @ (a[:, None] * half)
        try:
            mu, y = np.linalg.eigh(0.5 * (small + small.T))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"reduced eigensolver failed: {exc}") from exc
        top = float(mu[-1])
    else:
        top = 0.0
    if r and (top > 0 or r >= ambient):
        sup = c + top
        u = span_basis @ y[:, -1]
    else:
        sup = c + max(top, 0.0) if r < ambient else c + top
        u = _complement_direction(span_basis, m)
    return HessianSummary(
        sup_form=sup,
        delta=-sup,
        complement_value=c,
        top_eigenvalue=top,
        span_dim=r,
        direction=Curve(x.grid, u / sqrt_w),
    )


def _complement_direction(span_basis: np.ndarray, m: int) -> np.ndarray:
    # coordinate vector (t > 0) with the largest residual off the span
    eye = np.eye(m)[:, 1:]
    resid = eye - span_basis @ (span_basis.T @ eye)
    j = int(np.argmax(np.sum(resid * resid, axis=0)))
    u = resid[:, j]
    return u / np.linalg.norm(u)
