import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funmodal.errors import GridMismatchError, InvalidGridError, RankDeficiencyError
from funmodal.grid import (
    Curve, CurveSample, Grid, gram_schmidt, inner_l2, linear_combination, make_grid,
    norm_h10, norm_l2, normalize_shift, project,
)


def test_make_grid_m3():
    g = make_grid(3)
    np.testing.assert_array_equal(g.points, [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(g.weights, [0.25, 0.5, 0.25])


@pytest.mark.parametrize("m", [2, 1, 0, -4, 2.5])
def test_make_grid_rejects_small(m):
    with pytest.raises(InvalidGridError):
        make_grid(m)


def test_weights_sum_to_one():
    for m in (3, 101, 1001, 4097):
        assert abs(make_grid(m).weights.sum() - 1.0) <= 1e-14


def test_points_uniform():
    g = make_grid(101)
    assert g.points[0] == 0.0 and g.points[-1] == 1.0
    np.testing.assert_allclose(np.diff(g.points), g.spacing, rtol=0, atol=1e-15)


def test_normalize_shift():
    g = make_grid(3)
    assert normalize_shift(Curve(g, [1.0, 2.0, 3.0])).values.tolist() == [0.0, 1.0, 2.0]
    assert normalize_shift(Curve(g, [0.0, 0.0, 0.0])).values.tolist() == [0.0, 0.0, 0.0]


def test_normalize_shift_idempotent(rng):
    c = Curve(make_grid(50), rng.standard_normal(50))
    once = normalize_shift(c)
    np.testing.assert_array_equal(normalize_shift(once).values, once.values)


def test_curve_rejects_nonfinite():
    with pytest.raises(ValueError):
        Curve(make_grid(3), [0.0, np.nan, 1.0])


def test_inner_l2_examples():
    g = make_grid(201)
    t = g.points
    assert abs(inner_l2(Curve(g, t), Curve(g, np.ones_like(t))) - 0.5) <= 1e-4
    z = Curve(g, np.zeros_like(t))
    assert inner_l2(z, z) == 0.0
    s, c = Curve(g, np.sin(2 * np.pi * t)), Curve(g, np.cos(2 * np.pi * t))
    assert abs(inner_l2(s, c)) <= 1e-3


def test_inner_l2_grid_mismatch():
    with pytest.raises(GridMismatchError):
        inner_l2(Curve(make_grid(3), [0, 1, 2]), Curve(make_grid(4), [0, 1, 2, 3]))


def test_norm_h10_examples():
    g = make_grid(101)
    t = g.points
    assert abs(norm_h10(Curve(g, t)) - 1.0) <= 1e-12
    assert norm_h10(Curve(g, 0 * t)) == 0.0
    assert abs(norm_h10(Curve(g, 2 * t)) - 2.0) <= 1e-12


def test_linear_combination():
    g = make_grid(5)
    x = Curve(g, np.arange(5.0))
    y = Curve(g, np.ones(5))
    np.testing.assert_array_equal(linear_combination([1, 0], [x, y]).values, x.values)
    np.testing.assert_allclose(linear_combination([0.5, 0.5], [x, x]).values, x.values)
    with pytest.raises(ValueError):
        linear_combination([1.0], [x, y])


def test_project_reconstructs_span(rng):
    g = make_grid(101)
    basis = gram_schmidt([Curve(g, rng.standard_normal(101)) for _ in range(4)])
    coeffs = rng.standard_normal(4)
    x = linear_combination(coeffs, list(basis.basis_curves))
    back = linear_combination(project(x, basis), list(basis.basis_curves))
    assert np.max(np.abs(back.values - x.values)) <= 1e-12


def test_gram_schmidt_orthonormal_input_unchanged():
    g = make_grid(201)
    t = g.points
    raw = gram_schmidt([Curve(g, np.sin(np.pi * t)), Curve(g, t)])
    again = gram_schmidt(list(raw.basis_curves))
    np.testing.assert_allclose(again.matrix, raw.matrix, atol=1e-12)


def test_gram_schmidt_proportional_curves():
    g = make_grid(11)
    x = Curve(g, g.points)
    with pytest.raises(RankDeficiencyError) as err:
        gram_schmidt([x, x * 3.0])
    assert err.value.index == 1


def test_gram_schmidt_identity_gram(rng):
    g = make_grid(64)
    basis = gram_schmidt([Curve(g, rng.standard_normal(64)) for _ in range(3)])
    F = basis.matrix
    gram = (F * g.weights) @ F.T
    assert np.max(np.abs(gram - np.eye(3))) <= 1e-10


def test_sample_requires_shared_grid():
    with pytest.raises(GridMismatchError):
        CurveSample.from_curves([Curve(make_grid(3), [0, 1, 2]), Curve(make_grid(4), [0, 1, 2, 3])])


def test_sample_shifted_keeps_ids():
    s = CurveSample(make_grid(3), [[1.0, 2.0, 4.0]], ids=("a",))
    sh = s.shifted()
    assert sh.ids == ("a",)
    assert sh.values.tolist() == [[0.0, 1.0, 3.0]]


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=3, max_size=40))
def test_symmetry_and_cauchy_schwarz(pairs):
    g = make_grid(len(pairs))
    x = Curve(g, [p[0] for p in pairs])
    y = Curve(g, [p[1] for p in pairs])
    assert inner_l2(x, y) == inner_l2(y, x)
    scale = inner_l2(x, x) * inner_l2(y, y)
    assert inner_l2(x, y) ** 2 <= scale + 1e-12 * max(1.0, scale)


def test_discrete_poincare(rng):
    for m in (11, 101, 513):
        g = make_grid(m)
        for _ in range(50):
            v = np.cumsum(rng.standard_normal(m))
            x = normalize_shift(Curve(g, v))
            assert norm_l2(x) <= norm_h10(x) + 10 * g.spacing


def test_quadrature_second_order():
    errs = []
    for m in (33, 65, 129, 257):
        t = make_grid(m).points
        g = make_grid(m)
        errs.append(abs(inner_l2(Curve(g, np.exp(t)), Curve(g, np.sin(t)))
                        - (np.e * (np.sin(1) - np.cos(1)) + 1) / 2))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(np.abs(ratios - 4.0) < 0.1)
