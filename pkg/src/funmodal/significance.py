"""Significance thresholds for estimated modes and the bandwidth scan.

A mode x of the sample pseudo-density is significant at level alpha when

    delta(x) >= max(sqrt(8 * beta3 * C1), 8 * C2),   beta3 = 12 * K3,

    C1 = (125 M K1^2 K2 / (2n))^(1/3) + (25 K1^2 log(2C/alpha) / (4n))^(1/2)
    C2 = (125 M K2^2 K3 / (4n))^(1/3) + (25 K2^2 log(2C/alpha) / (8n))^(1/2)

where C is the covering constant (default 1). With reconstructed curves the
log terms use 4C/alpha and gain the perturbation terms 8 K2 phi/alpha and
16 K3 phi/alpha.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .density import make_model
from .flow import AscentOptions, ModeSet, ascend_many, merge_modes
from .grid import Curve, CurveSample, h10_norms
from .kernels import KernelConstants, get_kernel


@dataclass(frozen=True)
class ThresholdInputs:
    n: int
    M: float
    alpha: float
    constants: KernelConstants
    phi_m: Optional[float] = None
    covering: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not self.M > 0:
            raise ValueError(f"M must be positive, got {self.M!r}")
        if self.phi_m is not None and self.phi_m < 0:
            raise ValueError("phi_m must be nonnegative")
        if not self.covering >= 1:
            raise ValueError("covering constant must be >= 1")


def _c1(inp: ThresholdInputs, log_factor: float) -> float:
    k = inp.constants
    n = inp.n
    cube = (125.0 * inp.M * k.K1**2 * k.K2 / (2.0 * n)) ** (1.0 / 3.0)
    root = math.sqrt(25.0 * k.K1**2 * math.log(log_factor * inp.covering / inp.alpha) / (4.0 * n))
    return cube + root


def _c2(inp: ThresholdInputs, log_factor: float) -> float:
    k = inp.constants
    n = inp.n
    cube = (125.0 * inp.M * k.K2**2 * k.K3 / (4.0 * n)) ** (1.0 / 3.0)
    root = math.sqrt(25.0 * k.K2**2 * math.log(log_factor * inp.covering / inp.alpha) / (8.0 * n))
    return cube + root


def c1_alpha(inputs: ThresholdInputs) -> float:
    return _c1(inputs, 2.0)


def c2_alpha(inputs: ThresholdInputs) -> float:
    return _c2(inputs, 2.0)


def c_tilde(inputs: ThresholdInputs) -> tuple:
    """(C1~, C2~) for curves reconstructed with L1 perturbation bound phi_m."""
    if inputs.phi_m is None:
        raise ValueError("c_tilde needs phi_m")
    k = inputs.constants
    phi = inputs.phi_m
    c1 = _c1(inputs, 4.0) + 8.0 * k.K2 * phi / inputs.alpha
    c2 = _c2(inputs, 4.0) + 16.0 * k.K3 * phi / inputs.alpha
    return c1, c2


def beta3(constants: KernelConstants) -> float:
    return 12.0 * constants.K3


def threshold_value(C1: float, C2: float, b3: float) -> float:
    return max(math.sqrt(8.0 * b3 * C1), 8.0 * C2)


@dataclass(frozen=True)
class ModeDecision:
    index: int
    delta: float
    density: float
    significant: bool
    ball_radius: float
    localization: float


@dataclass(frozen=True)
class SignificanceReport:
    n: int
    M: float
    alpha: float
    constants: KernelConstants
    C1: float
    C2: float
    tilde: bool
    beta3: float
    threshold: float
    decisions: tuple
    phi_m: Optional[float] = None
    covering: float = 1.0

    @property
    def significant_indices(self) -> list:
        return [d.index for d in self.decisions if d.significant]

    @property
    def n_significant(self) -> int:
        return sum(d.significant for d in self.decisions)

    def to_dict(self) -> dict:
        def finite(x):
            return x if math.isfinite(x) else None

        c_names = ("C1_tilde", "C2_tilde") if self.tilde else ("C1", "C2")
        return {
            "n": self.n,
            "M": self.M,
            "alpha": self.alpha,
            "covering_constant": self.covering,
            "phi_m": self.phi_m,
            "kernel_constants": self.constants.as_dict(),
            c_names[0]: self.C1,
            c_names[1]: self.C2,
            "beta3": self.beta3,
            "threshold": self.threshold,
            "modes": [
                {
                    "index": d.index,
                    "delta": d.delta,
                    "density": d.density,
                    "significant": d.significant,
                    "ball_radius": d.ball_radius,
                    "localization_radius": finite(d.localization),
                }
                for d in self.decisions
            ],
        }


def classify(modeset: ModeSet, inputs: ThresholdInputs) -> SignificanceReport:
    """Mark each mode significant when its delta reaches the threshold (inclusive)."""
    tilde = inputs.phi_m is not None
    if tilde:
        C1, C2 = c_tilde(inputs)
    else:
        C1, C2 = c1_alpha(inputs), c2_alpha(inputs)
    b3 = beta3(inputs.constants)
    thr = threshold_value(C1, C2, b3)
    decisions = []
    for i, md in enumerate(modeset.modes):
        delta = float(md.delta)
        decisions.append(ModeDecision(
            index=i,
            delta=delta,
            density=float(md.density),
            significant=delta >= thr,
            ball_radius=delta / (2.0 * b3),
            localization=8.0 * C1 / delta if delta > 0 else math.inf,
        ))
    return SignificanceReport(
        n=inputs.n, M=inputs.M, alpha=inputs.alpha, constants=inputs.constants,
        C1=C1, C2=C2, tilde=tilde, beta3=b3, threshold=thr, decisions=tuple(decisions),
        phi_m=inputs.phi_m, covering=inputs.covering,
    )


@dataclass(frozen=True)
class PhiMatch:
    """Images of the significant estimated modes among the true modes.

    ``images[k]`` lists the truth indices inside the matching ball of the k-th
    significant mode (``mode_indices[k]`` in the ModeSet).
    """

    mode_indices: tuple
    radii: tuple
    images: tuple
    distances: tuple
    n_truth: int
    status: str

    @property
    def bijective(self) -> bool:
        return self.status == "bijective"


def phi_match(estimated: ModeSet, truth: Sequence[Curve], inputs: ThresholdInputs,
              report: Optional[SignificanceReport] = None) -> PhiMatch:
    """Match significant modes to true modes within min(delta/(2 beta3), log(n) C1/delta)."""
    report = report or classify(estimated, inputs)
    idx, radii, images, dists = [], [], [], []
    for d in report.decisions:
        if not d.significant:
            continue
        x = estimated.modes[d.index].curve
        w = x.grid.weights
        radius = min(d.delta / (2.0 * report.beta3), math.log(inputs.n) * report.C1 / d.delta)
        dist = [float(np.sqrt(np.dot(w, (x.values - y.values) ** 2))) for y in truth]
        idx.append(d.index)
        radii.append(radius)
        images.append(tuple(j for j, r in enumerate(dist) if r <= radius))
        dists.append(tuple(dist))
    hits = np.zeros(len(truth), dtype=int)
    for im in images:
        for j in im:
            hits[j] += 1
    if any(len(im) > 1 for im in images) or np.any(hits > 1):
        status = "non-injective"
    elif any(len(im) == 0 for im in images) or np.any(hits == 0):
        status = "incomplete"
    else:
        status = "bijective"
    return PhiMatch(tuple(idx), tuple(radii), tuple(images), tuple(dists), len(truth), status)


def resolve_M(sample: CurveSample, M: Optional[float] = None) -> tuple:
    """Return (M, provenance). Without a known bound, fall back to 1.05 * max H1_0 norm."""
    if M is not None:
        return float(M), "given"
    M_hat = 1.05 * float(np.max(h10_norms(sample.values, sample.grid)))
    warnings.warn(
        f"no a.s. H1_0 bound M supplied; using the plug-in 1.05 * max_i |X_i| = {M_hat:.4g}. "
        "The coverage guarantee assumes M is known in advance.",
        UserWarning,
    )
    return M_hat, "fallback"


@dataclass(frozen=True)
class ScanRow:
    h: float
    n_modes: int
    n_significant: int
    densities: tuple
    deltas: tuple
    threshold: float
    recommended: bool = False


@dataclass(frozen=True)
class ScanTable:
    rows: tuple
    recommended_h: float
    rule: str = field(default="max_significant")

    @property
    def h_values(self) -> list:
        return [r.h for r in self.rows]

    @property
    def mode_counts(self) -> list:
        return [r.n_modes for r in self.rows]

    @property
    def significant_counts(self) -> list:
        return [r.n_significant for r in self.rows]


def _plateau_index(counts: Sequence[int], n: int) -> Optional[int]:
    """Middle of the longest run of equal mode counts in [2, sqrt(n)]; later runs win ties."""
    upper = max(2, int(math.isqrt(n)))
    best = None  # (length, start, end)
    i = 0
    while i < len(counts):
        j = i
        while j + 1 < len(counts) and counts[j + 1] == counts[i]:
            j += 1
        if 2 <= counts[i] <= upper:
            if best is None or j - i + 1 >= best[0]:
                best = (j - i + 1, i, j)
        i = j + 1
    if best is None:
        return None
    return (best[1] + best[2] + 1) // 2


def scan_h(sample: CurveSample, kernel, h_grid: Sequence[float], inputs: ThresholdInputs,
           opts: Optional[AscentOptions] = None, merge_factor: float = 0.05) -> ScanTable:
    """Mode and significant-mode counts over increasing bandwidths.

    The recommended h maximizes the number of significant modes (ties go to the
    larger h). When no h yields a significant mode, the middle of the longest
    stable plateau of 2..sqrt(n) modes is recommended instead.
    """
    h_grid = [float(h) for h in h_grid]
    if not h_grid:
        raise ValueError("h_grid must not be empty")
    if any(b <= a for a, b in zip(h_grid, h_grid[1:])) or h_grid[0] <= 0:
        raise ValueError("h_grid must be positive and strictly increasing")
    kernel = get_kernel(kernel)
    rows = []
    for h in h_grid:
        model = make_model(sample, kernel, h)
        results = ascend_many(model, sample, opts)
        modes = merge_modes(results, model, merge_factor * math.sqrt(h))
        rep = classify(modes, replace(inputs, constants=model.constants))
        rows.append(ScanRow(h, len(modes), rep.n_significant, tuple(modes.densities.tolist()),
                            tuple(modes.deltas.tolist()), rep.threshold))
    sig = [r.n_significant for r in rows]
    rule = "max_significant"
    if max(sig) > 0:
        best = max(i for i, s in enumerate(sig) if s == max(sig))
    else:
        best = _plateau_index([r.n_modes for r in rows], sample.n)
        if best is None:
            best = len(rows) - 1
        else:
            rule = "stable_plateau"
    rows[best] = replace(rows[best], recommended=True)
    return ScanTable(tuple(rows), rows[best].h, rule)
