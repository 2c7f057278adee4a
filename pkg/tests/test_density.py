import math

import numpy as np
import pytest

from funmodal.density import density, gradient, hessian_form, hessian_summary, make_model
from funmodal.errors import AssumptionViolationError, GridMismatchError
from funmodal.grid import Curve, CurveSample, Grid, inner_l2, norm_l2
from funmodal.kernels import KernelProfile
from conftest import random_shifted_sample


def unit_direction(rng, grid):
    """Random L2-unit curve vanishing at t = 0."""
    u = np.zeros(grid.m)
    u[1:] = rng.standard_normal(grid.m - 1)
    z = u / np.sqrt(np.where(grid.weights > 0, grid.weights, 1.0))
    z[0] = 0.0
    c = Curve(grid, z)
    return c * (1.0 / norm_l2(c))


def dense_operator(model, x):
    """(m-1) x (m-1) matrix of the form in sqrt-weight coordinates on t > 0."""
    w = model.grid.weights[1:]
    v = (x.values - model.sample.values)[:, 1:] * np.sqrt(w)
    d2 = np.sum(v * v, axis=1)
    k1 = model.kernel.d1(d2 / model.h) / model.h
    k2 = model.kernel.d2(d2 / model.h) / model.h**2
    n = model.n
    return (2.0 / n) * k1.sum() * np.eye(len(w)) + (4.0 / n) * (v.T * k2) @ v


def test_single_curve_density_is_one():
    s = CurveSample(Grid(11), np.linspace(0, 1, 11)[None, :])
    model = make_model(s, "exponential", 0.5)
    assert density(model, s[0]) == 1.0
    assert np.all(gradient(model, s[0]).values == 0.0)


def test_two_curve_density():
    g = Grid(101)
    h = 0.7
    x = Curve(g, np.zeros(101))
    # |X1 - x|^2 = h
    X1 = g.points * math.sqrt(3 * h)
    s = CurveSample(g, np.stack([X1, np.zeros(101)]))
    model = make_model(s, "exponential", h)
    d2 = inner_l2(Curve(g, X1), Curve(g, X1))
    expected = (math.exp(-d2 / h) + 1.0) / 2.0
    assert density(model, x) == pytest.approx(expected, rel=1e-14)
    assert abs(d2 - h) < 1e-4
    assert abs(density(model, x) - 0.6839) < 1e-4


def test_midpoint_gradient_vanishes(rng):
    s = random_shifted_sample(rng, 2, 51)
    model = make_model(s, "exponential", 0.5)
    mid = Curve(s.grid, 0.5 * (s.values[0] + s.values[1]))
    assert np.max(np.abs(gradient(model, mid).values)) < 1e-15


def test_grid_refinement_stable():
    h = 0.5
    vals = []
    for m in (1001, 2003):
        g = Grid(m)
        t = g.points
        X = np.stack([t, t**2, 0.5 * np.sin(np.pi * t), -t + t**3])
        model = make_model(CurveSample(g, X), "exponential", h)
        vals.append(density(model, Curve(g, 0.3 * t * (1 - t))))
    assert abs(vals[0] - vals[1]) < 1e-6


def test_density_bounds(rng):
    s = random_shifted_sample(rng, 15, 41)
    for kern in ("exponential", "cubic"):
        model = make_model(s, kern, 0.4)
        for _ in range(20):
            p = density(model, unit_direction(rng, s.grid) * rng.uniform(0, 2))
            assert 0.0 <= p <= model.constants.K0


@pytest.mark.parametrize("kernel", ["exponential", "cubic"])
def test_gradient_central_difference(kernel, rng):
    eps = 1e-5
    for _ in range(20):
        s = random_shifted_sample(rng, 20, 101)
        model = make_model(s, kernel, 0.5 if kernel == "exponential" else 4.0)
        x = Curve(s.grid, s.values.mean(0)) + unit_direction(rng, s.grid) * 0.3
        v = unit_direction(rng, s.grid)
        fd = (density(model, x + v * eps) - density(model, x - v * eps)) / (2 * eps)
        exact = inner_l2(gradient(model, x), v)
        assert abs(fd - exact) <= 1e-6 * abs(exact)


def test_hessian_form_single_point():
    g = Grid(31)
    s = CurveSample(g, g.points[None, :] ** 2)
    h = 0.5
    model = make_model(s, "exponential", h)
    z = Curve(g, np.sin(3 * g.points))
    assert hessian_form(model, s[0], z, z) == pytest.approx(-(2 / h) * inner_l2(z, z), rel=1e-14)


def test_hessian_form_symmetric_and_fd(rng):
    eps = 1e-4
    for _ in range(20):
        s = random_shifted_sample(rng, 20, 101)
        model = make_model(s, "exponential", 0.5)
        x = Curve(s.grid, s.values.mean(0)) + unit_direction(rng, s.grid) * 0.3
        z1, z2 = unit_direction(rng, s.grid), unit_direction(rng, s.grid)
        assert hessian_form(model, x, z1, z2) == hessian_form(model, x, z2, z1)
        fd = (density(model, x + z1 * eps) - 2 * density(model, x) + density(model, x - z1 * eps)) / eps**2
        exact = hessian_form(model, x, z1, z1)
        assert abs(fd - exact) <= 1e-5 * abs(exact)


def test_delta_single_curve():
    g = Grid(21)
    s = CurveSample(g, np.sin(np.pi * g.points)[None, :])
    summ = hessian_summary(make_model(s, "exponential", 0.5), s[0])
    assert summ.delta == pytest.approx(4.0, rel=1e-15)
    assert summ.delta == -summ.sup_form
    assert summ.span_dim == 0


@pytest.mark.parametrize("kernel,h", [("exponential", 0.5), ("exponential", 0.05), ("cubic", 2.0)])
def test_sup_form_matches_dense_eigensolve(kernel, h, rng):
    for _ in range(10):
        s = random_shifted_sample(rng, 5, 21)
        model = make_model(s, kernel, h)
        x = Curve(s.grid, s.values.mean(0)) + unit_direction(rng, s.grid) * 0.2
        summ = hessian_summary(model, x)
        top = np.linalg.eigvalsh(dense_operator(model, x))[-1]
        assert abs(summ.sup_form - top) <= 1e-8
        assert summ.sup_form >= summ.complement_value - 1e-15


def test_sup_form_full_rank_case(rng):
    # n >= m - 1: the span covers the whole ambient space
    s = random_shifted_sample(rng, 12, 9)
    model = make_model(s, "exponential", 0.3)
    x = Curve(s.grid, s.values.mean(0))
    summ = hessian_summary(model, x)
    assert summ.span_dim == 8
    assert abs(summ.sup_form - np.linalg.eigvalsh(dense_operator(model, x))[-1]) <= 1e-8


def test_sup_form_upper_bounds_random_directions(rng):
    s = random_shifted_sample(rng, 5, 21)
    model = make_model(s, "exponential", 0.5)
    x = Curve(s.grid, s.values.mean(0))
    summ = hessian_summary(model, x)
    vals = [hessian_form(model, x, u, u) for u in (unit_direction(rng, s.grid) for _ in range(1000))]
    assert max(vals) <= summ.sup_form + 1e-9
    d = summ.direction
    assert abs(norm_l2(d) - 1.0) < 1e-12
    assert abs(hessian_form(model, x, d, d) - summ.sup_form) <= 1e-6


def test_complement_direction_attains_c():
    # a single curve at its own position: empty span, the complement carries the sup
    g = Grid(41)
    s = CurveSample(g, (g.points ** 2)[None, :])
    model = make_model(s, "exponential", 0.2)
    summ = hessian_summary(model, s[0])
    assert summ.span_dim == 0
    assert summ.sup_form == summ.complement_value
    d = summ.direction
    assert d.values[0] == 0.0
    assert abs(hessian_form(model, s[0], d, d) - summ.sup_form) <= 1e-9


def test_grid_mismatch(rng):
    s = random_shifted_sample(rng, 3, 11)
    model = make_model(s, "exponential", 1.0)
    with pytest.raises(GridMismatchError):
        density(model, Curve(Grid(12), np.zeros(12)))


def test_model_rejects_h2_violation():
    k = KernelProfile(
        "rational",
        lambda s: 1.0 / (1.0 + np.asarray(s, dtype=float)),
        lambda s: -1.0 / (1.0 + np.asarray(s, dtype=float)) ** 2,
        lambda s: 2.0 / (1.0 + np.asarray(s, dtype=float)) ** 3,
        lambda s: -6.0 / (1.0 + np.asarray(s, dtype=float)) ** 4,
    )
    s = CurveSample(Grid(5), np.zeros((1, 5)))
    with pytest.raises(AssumptionViolationError):
        make_model(s, k, 1.0)
