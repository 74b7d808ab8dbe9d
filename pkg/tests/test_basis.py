import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grade.basis import (
    BasisSpec,
    build_basis_design,
    build_integrated_design,
    evaluate_basis,
    group_gram,
    quadrature_grid,
)
from grade.errors import QuadTooCoarse
from grade.smoother import LocalPolyConfig, local_poly_fit

TIMES = np.arange(1, 201) / 200


def cox_de_boor(knots, i, k, x):
    """Textbook recursion for the i-th B-spline of degree k (right-open intervals)."""
    if k == 0:
        return 1.0 if knots[i] <= x < knots[i + 1] else 0.0
    left = right = 0.0
    if knots[i + k] > knots[i]:
        left = (x - knots[i]) / (knots[i + k] - knots[i]) * cox_de_boor(knots, i, k - 1, x)
    if knots[i + k + 1] > knots[i + 1]:
        right = (knots[i + k + 1] - x) / (knots[i + k + 1] - knots[i + 1]) * cox_de_boor(knots, i + 1, k - 1, x)
    return left + right


def identity_smooth(u):
    return np.asarray(u, dtype=float)


def test_monomial_values():
    np.testing.assert_array_equal(evaluate_basis(BasisSpec.monomial(3), 2.0), [2.0, 4.0, 8.0])


def test_linear_values():
    np.testing.assert_array_equal(evaluate_basis(BasisSpec.linear(), -1.5), [-1.5])


@pytest.mark.parametrize("x", [0.0, 0.2, 0.5, 0.77, 0.999])
def test_spline_matches_cox_de_boor(x):
    fitted = BasisSpec.cubic_spline(2).fit(lo=0.0, hi=1.0)
    knots = fitted.knot_vector
    expected = [cox_de_boor(knots, i, 3, x) for i in range(6)]
    np.testing.assert_allclose(fitted(x), expected, atol=1e-12)


def test_spline_quantile_knots():
    vals = np.linspace(0.0, 9.0, 1000) ** 2
    fitted = BasisSpec.cubic_spline(2).fit(vals)
    np.testing.assert_allclose(fitted.interior, np.quantile(vals, [1 / 3, 2 / 3]))
    assert fitted.lo == 0.0 and fitted.hi == 81.0


def test_spline_knots_fall_back_when_collapsed():
    vals = np.r_[np.zeros(900), np.linspace(0, 1, 100)]
    fitted = BasisSpec.cubic_spline(2).fit(vals)
    np.testing.assert_allclose(fitted.interior, [1 / 3, 2 / 3])


def test_spline_linear_tails():
    fitted = BasisSpec.cubic_spline(2).fit(lo=0.0, hi=1.0)
    d = fitted._spline.derivative()
    for edge, x in ((0.0, -0.3), (1.0, 1.4)):
        expected = fitted(edge) + (x - edge) * d(edge)
        np.testing.assert_allclose(fitted(x), expected, atol=1e-12)


def test_spline_partition_of_unity():
    fitted = BasisSpec.cubic_spline(3).fit(lo=-2.0, hi=5.0)
    x = np.linspace(-2, 5, 57)
    np.testing.assert_allclose(fitted(x).sum(axis=-1), 1.0, atol=1e-12)


@pytest.mark.parametrize("text,label,M", [("monomial3", "monomial3", 3), ("linear", "linear", 1),
                                          ("spline2", "spline2", 6), ("trig4", "trig4", 4)])
def test_spec_parse(text, label, M):
    spec = BasisSpec.parse(text)
    assert spec.label == label and spec.n_basis == M


def test_spec_rejects_unknown():
    with pytest.raises(ValueError):
        BasisSpec.parse("wavelet")


def test_trig_is_orthonormal_on_range():
    fitted = BasisSpec.trigonometric(4).fit(lo=0.0, hi=1.0)
    x = (np.arange(20000) + 0.5) / 20000
    B = fitted(x)
    np.testing.assert_allclose(B.T @ B / len(x), np.eye(4), atol=1e-8)


def test_integrated_linear_is_half_t_squared():
    times = np.arange(1, 101) / 100
    d = build_integrated_design([identity_smooth], BasisSpec.linear(), times)
    np.testing.assert_allclose(d.group(1)[:, 0], times ** 2 / 2, atol=1e-6)
    assert d.group(1)[-1, 0] == pytest.approx(0.5, abs=1e-6)


def test_integrated_monomial_power_integrals():
    d = build_integrated_design([identity_smooth], BasisSpec.monomial(3), TIMES, quad_step=0.01)
    np.testing.assert_allclose(d.group(1)[-1], [1 / 2, 1 / 3, 1 / 4], atol=1e-5)


def test_integral_vanishes_at_zero():
    times = np.linspace(0.0, 1.0, 11)
    d = build_integrated_design([np.cos, np.exp], BasisSpec.monomial(3), times)
    assert np.all(d.blocks[0] == 0)


def test_time_column_and_groups():
    d = build_integrated_design([[np.sin, np.cos], [np.cos, np.sin]], BasisSpec.monomial(2), TIMES)
    assert d.R == 2 and d.p == 2 and d.M == 2 and d.n_rows == 400
    np.testing.assert_array_equal(d.group(0)[:, 0], np.tile(TIMES, 2))
    assert d.matrix().shape == (400, 5)
    assert d.column_names() == ["t", "x1_1", "x1_2", "x2_1", "x2_2"]


def test_time_gram_closed_form():
    n = 200
    d = build_integrated_design([identity_smooth], BasisSpec.linear(), TIMES)
    G = group_gram(d, 0)
    assert G[0, 0] == pytest.approx((n + 1) * (2 * n + 1) / (6 * n * n), rel=1e-14)


def test_duplicated_column_gram_is_singular():
    d = build_integrated_design([identity_smooth, identity_smooth], BasisSpec.linear(), TIMES)
    X = np.column_stack([d.group(1), d.group(2)])
    w = np.linalg.eigvalsh(X.T @ X / len(X))
    assert abs(w[0]) <= 1e-12


def test_gram_matches_direct_product():
    rng = np.random.default_rng(0)
    y = np.sin(4 * TIMES) + 0.1 * rng.standard_normal(200)
    est = local_poly_fit(TIMES, y)
    d = build_integrated_design([est], BasisSpec.monomial(3), TIMES)
    X = d.matrix()[:, 1:4]
    np.testing.assert_allclose(group_gram(d, 1), X.T @ X / 200, atol=1e-12)


def test_quad_step_validation():
    with pytest.raises(QuadTooCoarse):
        build_integrated_design([identity_smooth], BasisSpec.linear(), TIMES, quad_step=0.0)
    with pytest.raises(QuadTooCoarse):
        build_integrated_design([identity_smooth], BasisSpec.linear(), TIMES, quad_step=0.05)


def test_quadrature_grid_contains_observation_times():
    times = np.array([0.013, 0.5, 0.777])
    grid = quadrature_grid(times, 0.01)
    assert set(times) <= set(grid)
    assert grid[0] == 0.0 and np.all(np.diff(grid) > 0)


def test_quadrature_refinement_on_smoothed_data():
    rng = np.random.default_rng(3)
    y = np.cos(3 * TIMES) + 0.3 * rng.standard_normal(200)
    est = local_poly_fit(TIMES, y)
    coarse = build_integrated_design([est], BasisSpec.monomial(3), TIMES, quad_step=0.01)
    fine = build_integrated_design([est], BasisSpec.monomial(3), TIMES, quad_step=0.001,
                                   bases=coarse.bases)
    assert np.abs(coarse.blocks - fine.blocks).max() <= 1e-4


def test_baseline_design_is_not_integrated():
    d = build_basis_design([identity_smooth], BasisSpec.monomial(2), TIMES)
    assert d.time is None and d.intercept == "common"
    np.testing.assert_allclose(d.group(1), np.column_stack([TIMES, TIMES ** 2]))


def test_design_csv_header(tmp_path):
    d = build_integrated_design([identity_smooth], BasisSpec.monomial(2), TIMES)
    d.to_csv(tmp_path / "design.csv")
    header = (tmp_path / "design.csv").read_text().splitlines()[0]
    assert header == "experiment,t,x1_1,x1_2"


smooth_curves = st.tuples(st.floats(-2, 2), st.floats(0.5, 6), st.floats(0, 6.3))


def curve(params):
    a, w, phi = params
    return lambda u: a + np.sin(w * np.asarray(u) + phi)


@settings(max_examples=25, deadline=None)
@given(smooth_curves, st.sampled_from(["monomial3", "spline2", "trig4"]))
def test_quadrature_second_order(params, family):
    f = curve(params)
    spec = BasisSpec.parse(family)
    times = np.arange(1, 101) / 100
    bases = build_integrated_design([f], spec, times).bases
    designs = [build_integrated_design([f], spec, times, quad_step=q, bases=bases) for q in (0.01, 0.005, 0.0025)]
    d1 = np.abs(designs[0].blocks - designs[1].blocks).max()
    d2 = np.abs(designs[1].blocks - designs[2].blocks).max()
    assert d2 <= 1.5 * d1 / 4 + 1e-13


@settings(max_examples=25, deadline=None)
@given(smooth_curves)
def test_monotone_integrand_gives_monotone_design(params):
    _, w, phi = params

    def g(u):
        return 2.0 + np.sin(w * np.asarray(u) + phi)

    d = build_integrated_design([g], BasisSpec.monomial(2), TIMES)
    # psi = (x, x^2) is positive for x in [1, 3]
    assert np.all(np.diff(d.group(1), axis=0) >= 0)


@settings(max_examples=25, deadline=None)
@given(smooth_curves, st.sampled_from(["monomial3", "linear", "spline2"]))
def test_gram_consistency_and_continuity(params, family):
    f = curve(params)
    d = build_integrated_design([f, np.cos], BasisSpec.parse(family), TIMES)
    X = d.matrix()
    full = X.T @ X / d.n_rows
    M = d.M
    for k in (1, 2):
        sl = slice(1 + (k - 1) * M, 1 + k * M)
        np.testing.assert_allclose(group_gram(d, k), full[sl, sl], atol=1e-12, rtol=1e-12)
    # increments bounded by sup|psi| times the spacing
    grid = np.linspace(0, 1, 2001)
    bound = max(np.abs(b(fn(grid))).max() for b, fn in zip(d.bases, [f, np.cos]))
    assert np.abs(np.diff(d.blocks, axis=0)).max() <= bound * (TIMES[1] - TIMES[0]) + 1e-12
