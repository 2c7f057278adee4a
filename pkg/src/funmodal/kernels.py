"""Kernel profiles K(s), s >= 0, used through K_h(s) = K(s / h).

Each profile carries analytic derivatives up to order three. The
``kernel_constants`` routine computes the derivative bounds K0..K3 that feed
the significance thresholds; ``check_assumptions`` verifies that
K'(s) + K(s) <= 0 (which makes mean-shift weights well defined) and that the
supplied derivatives are consistent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import AssumptionViolationError, KernelDomainError

_DECAY_LEVEL = 1e-12
_SCAN_POINTS = 100_000
_BREAK_EXCLUSION = 1e-9


@dataclass(frozen=True)
class KernelProfile:
    name: str
    value: Callable
    d1: Callable
    d2: Callable
    d3: Callable
    support_cutoff: float = math.inf
    # s-values where d3 jumps; scans avoid them
    breakpoints: tuple = field(default=())

    def derivative(self, order: int) -> Callable:
        try:
            return (self.value, self.d1, self.d2, self.d3)[order]
        except (IndexError, TypeError):
            raise KernelDomainError(f"derivative order must be 0..3, got {order!r}") from None


@dataclass(frozen=True)
class KernelConstants:
    K0: float
    K1: float
    K2: float
    K3: float
    h: float

    def as_dict(self) -> dict:
        return {"K0": self.K0, "K1": self.K1, "K2": self.K2, "K3": self.K3, "h": self.h}


def _exp(s):
    return np.exp(-np.asarray(s, dtype=float))


def _neg_exp(s):
    return -np.exp(-np.asarray(s, dtype=float))


EXPONENTIAL = KernelProfile("exponential", _exp, _neg_exp, _exp, _neg_exp)


def _cubic_part(power, coef):
    def f(s):
        s = np.asarray(s, dtype=float)
        inside = s < 1.0
        base = np.where(inside, 1.0 - s, 0.0)
        return np.where(inside, coef * base**power, 0.0)

    return f


CUBIC = KernelProfile(
    "cubic",
    _cubic_part(3, 1.0),
    _cubic_part(2, -3.0),
    _cubic_part(1, 6.0),
    _cubic_part(0, -6.0),
    support_cutoff=1.0,
    breakpoints=(1.0,),
)

KERNELS = {"exponential": EXPONENTIAL, "cubic": CUBIC}


def get_kernel(name) -> KernelProfile:
    if isinstance(name, KernelProfile):
        return name
    try:
        return KERNELS[name]
    except KeyError:
        raise KernelDomainError(
            f"unknown kernel {name!r}; choose one of {sorted(KERNELS)}"
        ) from None


def eval_kh(kernel: KernelProfile, h: float, s, order: int = 0):
    """d^order/ds^order of K(s / h), i.e. h**-order * K^(order)(s / h)."""
    if not h > 0:
        raise KernelDomainError(f"bandwidth must be positive, got h={h!r}")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(np.isnan(s_arr)):
        raise KernelDomainError("kernel argument must be nonnegative")
    out = kernel.derivative(order)(s_arr / h)
    if order:
        out = out * h ** (-order)
    return float(out) if np.ndim(out) == 0 else out


def scan_limit(kernel: KernelProfile, h: float = 1.0) -> float:
    """Largest t worth scanning for sup_t of expressions in K_h(t^2)."""
    if math.isfinite(kernel.support_cutoff):
        return math.sqrt(kernel.support_cutoff * h)
    k0 = float(kernel.value(0.0))
    level = _DECAY_LEVEL * max(k0, 1.0)

    def excess(t):
        return float(kernel.value(t * t / h)) - level

    hi = math.sqrt(h)
    while excess(hi) >= 0:
        hi *= 2.0
        if hi > 1e6 * math.sqrt(h):
            return hi
    lo = 0.0 if excess(0.0) > 0 else hi
    if lo == hi:
        return hi
    return brentq(excess, lo, hi, xtol=1e-12 * hi)


def _scan_points(t_max: float, breaks_t) -> np.ndarray:
    t = np.linspace(0.0, t_max, _SCAN_POINTS)
    t = np.union1d(t, np.geomspace(1e-8 * min(t_max, 1.0), t_max, _SCAN_POINTS // 10))
    for b in breaks_t:
        t = t[np.abs(t - b) > _BREAK_EXCLUSION]
    return t


@dataclass
class AssumptionReport:
    kernel: str
    nonnegative: bool
    h2_pass: bool
    h2_worst_t: float
    h2_worst_s: float
    h2_worst_value: float
    h2_violation_interval: Optional[tuple]
    h1_pass: bool
    h1_max_rel_error: float

    @property
    def passed(self) -> bool:
        return self.nonnegative and self.h2_pass and self.h1_pass


def _derivative_spot_check(kernel: KernelProfile) -> float:
    top = min(kernel.support_cutoff, 5.0)
    pts = np.array([0.1, 0.25, 0.4, 0.55, 0.7, 0.85]) * top
    pts = np.array([p for p in pts if all(abs(p - b) > 1e-3 for b in kernel.breakpoints)])
    eps = 1e-5
    worst = 0.0
    for order in (1, 2, 3):
        lower = kernel.derivative(order - 1)
        exact = kernel.derivative(order)(pts)
        fd = (lower(pts + eps) - lower(pts - eps)) / (2 * eps)
        scale = np.maximum(np.abs(exact), 1e-8)
        worst = max(worst, float(np.max(np.abs(fd - exact) / scale)))
    return worst


def check_assumptions(kernel: KernelProfile, rel_tol: float = 1e-6) -> AssumptionReport:
    """Scan K'(t^2) + K(t^2) <= 0 over t in [0, T_max] and spot-check derivatives."""
    t_max = scan_limit(kernel)
    t = _scan_points(t_max, [math.sqrt(b) for b in kernel.breakpoints])
    s = t * t
    vals = kernel.value(s)
    h2 = kernel.d1(s) + vals
    # allow round-off for kernels where K' + K vanishes identically
    slack = 1e-14 * np.maximum(np.abs(vals), 1.0)
    bad = h2 > slack
    i_worst = int(np.argmax(h2))
    interval = (float(t[bad].min()), float(t[bad].max())) if bad.any() else None
    err = _derivative_spot_check(kernel)
    return AssumptionReport(
        kernel=kernel.name,
        nonnegative=bool(np.all(vals >= 0)),
        h2_pass=not bad.any(),
        h2_worst_t=float(t[i_worst]),
        h2_worst_s=float(s[i_worst]),
        h2_worst_value=float(h2[i_worst]),
        h2_violation_interval=interval,
        h1_pass=err <= rel_tol,
        h1_max_rel_error=err,
    )


def _bound_functions(kernel: KernelProfile, h: float):
    def k(order, t):
        return kernel.derivative(order)(t * t / h) * h ** (-order)

    return (
        lambda t: np.abs(k(0, t)),
        lambda t: np.abs(k(1, t) * t),
        lambda t: np.abs(k(1, t)) + np.abs(k(2, t) * t * t),
        lambda t: np.abs(k(2, t) * t) + np.abs(k(3, t) * t**3),
    )


def _sup(f, t: np.ndarray, breaks_t, n_refine: int = 5) -> float:
    vals = f(t)
    if not np.all(np.isfinite(vals)):
        raise AssumptionViolationError("kernel bound is not finite on the scan grid")
    best = float(vals.max())
    # refine around the largest interior local maxima of the scan
    interior = np.flatnonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])) + 1
    candidates = list(interior[np.argsort(vals[interior])[::-1][:n_refine]])
    candidates += [0, len(t) - 1]
    for i in candidates:
        lo, hi = t[max(i - 1, 0)], t[min(i + 1, len(t) - 1)]
        if hi <= lo:
            continue
        res = minimize_scalar(lambda x: -float(f(np.array(x))), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-14 * max(hi, 1.0)})
        best = max(best, -float(res.fun))
    # one-sided limits at derivative jumps give the essential supremum
    for b in breaks_t:
        for side in (0.0, np.inf):
            tb = np.nextafter(b, side)
            if tb >= 0:
                best = max(best, float(f(np.array(tb))))
    if not math.isfinite(best):
        raise AssumptionViolationError("kernel bound supremum is not finite")
    return best


def kernel_constants(kernel: KernelProfile, h: float) -> KernelConstants:
    """Derivative bounds of K_h(t^2) by dense scan plus local refinement."""
    kernel = get_kernel(kernel)
    if not h > 0:
        raise KernelDomainError(f"bandwidth must be positive, got h={h!r}")
    t_max = scan_limit(kernel, h)
    breaks_t = [math.sqrt(b * h) for b in kernel.breakpoints]
    t = _scan_points(t_max, breaks_t)
    ks = [_sup(f, t, breaks_t) for f in _bound_functions(kernel, h)]
    return KernelConstants(*ks, h=float(h))
