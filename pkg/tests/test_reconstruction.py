import numpy as np
import pytest

from funmodal.errors import InvalidGridError, UndersmoothingError
from funmodal.grid import CurveSample, Grid
from funmodal.reconstruction import (
    EPANECHNIKOV, Observations, SmootherSpec, SmoothingKernel, default_bandwidth, gm_smooth,
    phi_plugin, reconstruct_sample, smoothing_matrix,
)
from funmodal.simgen import observe_noisy


def test_default_bandwidth():
    assert default_bandwidth(32) == 0.5
    assert default_bandwidth(100) / default_bandwidth(1600) == pytest.approx(16 ** 0.2, rel=1e-14)
    assert default_bandwidth(32, c_b=2.0) == 1.0
    with pytest.raises(InvalidGridError):
        default_bandwidth(1)


def test_phi_plugin():
    assert phi_plugin(32) == 0.25
    assert phi_plugin(50, 2.0) == 2 * phi_plugin(50, 1.0)
    ms = np.array([16, 64, 256, 1024])
    slope = np.polyfit(np.log(ms), np.log([phi_plugin(m) for m in ms]), 1)[0]
    assert abs(slope + 0.4) < 1e-12
    with pytest.raises(InvalidGridError):
        phi_plugin(2)


def test_spec_validation():
    with pytest.raises(ValueError):
        SmootherSpec(b=0.0)
    with pytest.raises(ValueError):
        SmootherSpec(boundary="wrap")
    half = SmoothingKernel("half", lambda u: 0.5 * EPANECHNIKOV.value(u))
    with pytest.raises(ValueError, match="integrates"):
        SmootherSpec(W=half)


@pytest.mark.parametrize("boundary", ["renormalize", "reflect"])
def test_constant_row(boundary):
    g = Grid(101)
    spec = SmootherSpec(b=0.1, boundary=boundary)
    out = gm_smooth(np.full(101, 3.5), g, spec, shift=False)
    interior = (g.points > 0.1) & (g.points < 0.9)
    assert np.max(np.abs(out.values[interior] - 3.5)) <= 1e-8
    assert np.all(gm_smooth(np.zeros(101), g, spec).values == 0.0)


def test_renormalize_preserves_constants_everywhere():
    g = Grid(64)
    out = gm_smooth(np.full(64, -2.0), g, SmootherSpec(b=0.3), shift=False)
    assert np.max(np.abs(out.values + 2.0)) <= 1e-12


def test_rows_partition_unity_exact_cdf():
    g = Grid(40)
    A = smoothing_matrix(g, SmootherSpec(b=0.2, boundary="reflect"), Grid(97))
    np.testing.assert_allclose(A.sum(1), 1.0, atol=1e-14)


def test_midpoint_fallback_close_to_exact():
    g = Grid(50)
    no_cdf = SmoothingKernel("epa-numeric", EPANECHNIKOV.value)
    A = smoothing_matrix(g, SmootherSpec(b=0.15), g)
    B = smoothing_matrix(g, SmootherSpec(W=no_cdf, b=0.15), g)
    assert np.max(np.abs(A - B)) < 1e-4


def test_linearity(rng):
    g = Grid(77)
    spec = SmootherSpec(b=0.2)
    y1, y2 = rng.standard_normal(77), rng.standard_normal(77)
    a = 2.7
    lhs = gm_smooth(a * y1 + y2, g, spec, shift=False).values
    rhs = a * gm_smooth(y1, g, spec, shift=False).values + gm_smooth(y2, g, spec, shift=False).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_noiseless_sine_bias_bound():
    m = 512
    g = Grid(m)
    b = default_bandwidth(m)
    fine = Grid(2049)
    out = gm_smooth(np.sin(np.pi * g.points), g, SmootherSpec(b=b), eval_grid=fine, shift=False)
    t = fine.points
    interior = (t > b) & (t < 1 - b)
    err = np.max(np.abs(out.values[interior] - np.sin(np.pi * t[interior])))
    assert err <= 5 * b**2 * np.pi**2


def test_undersmoothing_detected():
    # weight only away from the centre: tiny b leaves interior points with nothing
    def ring(u):
        u = np.abs(np.asarray(u, dtype=float))
        return 24.0 * np.maximum((u - 0.5) * (1.0 - u), 0.0)

    W = SmoothingKernel("ring", ring)
    with pytest.raises(UndersmoothingError, match="increase b"):
        gm_smooth(np.ones(11), Grid(11), SmootherSpec(W=W, b=1e-4))


def test_single_constant_signal():
    obs = Observations(Grid(33), np.full((1, 33), 4.0))
    out = reconstruct_sample(obs, SmootherSpec(b=default_bandwidth(33)))
    assert out.n == 1
    assert np.max(np.abs(out.values)) <= 1e-12


def test_noise_free_reproduces_truth():
    m = 400
    g = Grid(m)
    truth = 1 - np.cos(np.pi * g.points)
    rec = reconstruct_sample(Observations(g, truth[None, :]), SmootherSpec(b=default_bandwidth(m)))
    err = np.sqrt(np.dot(g.weights, (rec.values[0] - truth) ** 2))
    b = default_bandwidth(m)
    assert err <= 5 * b**2 * np.pi**2


def test_error_decreases_with_m():
    errs = []
    for m in (64, 128, 256):
        g = Grid(m)
        truth = 1 - np.cos(np.pi * g.points)
        sample = CurveSample(g, np.tile(truth, (50, 1)))
        obs = observe_noisy(sample, 0.1, seed=m)
        rec = reconstruct_sample(obs, SmootherSpec(b=default_bandwidth(m)))
        errs.append(np.mean(((rec.values - truth) ** 2) @ g.weights))
    assert errs[0] > errs[1] > errs[2]


def test_observations_validation():
    with pytest.raises(InvalidGridError):
        Observations(Grid(5), np.zeros((2, 4)))
    with pytest.raises(ValueError):
        Observations(Grid(3), [[0.0, np.inf, 1.0]])
