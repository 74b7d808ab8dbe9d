import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grade.errors import AllSingular, SingularLocalDesign
from grade.smoother import (
    KERNELS,
    LocalPolyConfig,
    default_bandwidth_grid,
    gcv_score,
    gcv_select_bandwidth,
    influence_trace,
    local_poly_fit,
    weight_vector,
)

TIMES = np.arange(1, 201) / 200


def wls_weights(t, times, h, degree, kernel):
    """Weights from the normal equations of the local polynomial problem."""
    u = (times - t) / h
    U = np.column_stack([u ** m / math.factorial(m) for m in range(degree + 1)])
    k = KERNELS[kernel](u)
    B = U.T @ (k[:, None] * U)
    # fitted value at t is e_1^T B^{-1} U^T K y
    return np.linalg.solve(B, U.T * k)[0]


def test_flat_kernel_degree_zero():
    times = np.linspace(0.1, 0.9, 5)
    w, diag = weight_vector(0.5, times, LocalPolyConfig(degree=0, kernel="uniform"), h=1.0)
    np.testing.assert_allclose(w, 0.2, atol=1e-15)
    assert diag["sup_abs"] == pytest.approx(0.2)
    assert diag["sum_abs"] == pytest.approx(1.0)


def test_local_linear_matches_normal_equations():
    times = np.arange(1, 51) / 50
    w, _ = weight_vector(0.5, times, LocalPolyConfig(degree=1), h=0.2)
    np.testing.assert_allclose(w, wls_weights(0.5, times, 0.2, 1, "epanechnikov"), atol=1e-10)


@pytest.mark.parametrize("kernel", sorted(KERNELS))
def test_cubic_weights_match_normal_equations(kernel):
    w, _ = weight_vector(0.03, TIMES, LocalPolyConfig(degree=3, kernel=kernel), h=0.1)
    np.testing.assert_allclose(w, wls_weights(0.03, TIMES, 0.1, 3, kernel), atol=1e-10)


def test_kernels_supported_on_unit_interval():
    u = np.linspace(-2, 2, 401)
    for K in KERNELS.values():
        k = K(u)
        assert np.all(k[np.abs(u) > 1] == 0) and np.all(k >= 0)


def test_gaussian_kernel_definition():
    # standard normal density at 3u, truncated at |u| = 1
    u = np.array([0.0, 0.5, 1.0])
    expected = 3 * np.exp(-0.5 * (3 * u) ** 2) / math.sqrt(2 * math.pi)
    np.testing.assert_allclose(KERNELS["gaussian"](u), expected, rtol=1e-15)


def test_constant_data():
    est = local_poly_fit(TIMES, np.full(200, 2.5))
    grid = np.linspace(0, 1, 101)
    np.testing.assert_allclose(est(grid), 2.5, atol=1e-10)


def test_linear_data_and_derivative():
    y = 3.0 * TIMES - 1.0
    est = local_poly_fit(TIMES, y, LocalPolyConfig(degree=1, bandwidth=0.1))
    t = np.linspace(0.15, 0.85, 50)
    np.testing.assert_allclose(est(t), 3.0 * t - 1.0, atol=1e-8)
    np.testing.assert_allclose(est.derivative(t), 3.0, atol=1e-8)


def test_sine_mse():
    grid = np.linspace(0, 1, 1000)
    passes = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        y = np.sin(2 * np.pi * TIMES) + 0.1 * rng.standard_normal(200)
        est = local_poly_fit(TIMES, y)
        passes += np.mean((est(grid) - np.sin(2 * np.pi * grid)) ** 2) <= 0.01
    assert passes >= 19


def test_noise_gets_wider_bandwidth_than_signal():
    grid = default_bandwidth_grid(200, 3)
    cfg = LocalPolyConfig(h_grid=tuple(grid))
    wins = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(200)
        signal = np.sin(6 * np.pi * TIMES) * 5 + 0.1 * rng.standard_normal(200)
        wins += gcv_select_bandwidth(TIMES, noise, cfg) >= gcv_select_bandwidth(TIMES, signal, cfg)
    assert wins >= 40


def test_singleton_grid():
    cfg = LocalPolyConfig(h_grid=(0.3,))
    y = np.random.default_rng(0).standard_normal(200)
    assert gcv_select_bandwidth(TIMES, y, cfg) == 0.3


def test_noiseless_cubic_picks_largest_h():
    y = 1 - 2 * TIMES + 0.5 * TIMES ** 2 - 3 * TIMES ** 3
    cfg = LocalPolyConfig()
    h = gcv_select_bandwidth(TIMES, y, cfg)
    assert h == pytest.approx(cfg.grid_for(200).max())


def test_all_singular():
    cfg = LocalPolyConfig(degree=3, h_grid=(0.001, 0.002))
    with pytest.raises(AllSingular):
        gcv_select_bandwidth(TIMES, np.zeros(200), cfg)


def test_singular_local_design():
    with pytest.raises(SingularLocalDesign):
        local_poly_fit(TIMES, np.zeros(200), LocalPolyConfig(degree=3, bandwidth=0.004))
    # no observations within h of t = 0.5
    times = np.r_[np.linspace(0.0, 0.4, 41), np.linspace(0.6, 1.0, 41)]
    est = local_poly_fit(times, np.zeros(82), LocalPolyConfig(degree=0, bandwidth=0.05))
    with pytest.raises(SingularLocalDesign):
        est(np.array([0.5]))


def test_invalid_inputs():
    with pytest.raises(ValueError):
        LocalPolyConfig(kernel="triangle")
    with pytest.raises(ValueError):
        local_poly_fit([0.2, 0.1, 0.3, 0.4, 0.5], np.zeros(5))
    with pytest.raises(ValueError):
        local_poly_fit([0.1, 0.2], [0.0, 1.0], LocalPolyConfig(degree=3))


def test_gcv_formula():
    rng = np.random.default_rng(1)
    y = np.cos(3 * TIMES) + 0.2 * rng.standard_normal(200)
    cfg = LocalPolyConfig()
    h = 0.15
    score, diag = gcv_score(TIMES, y, h, cfg)
    L = np.array([wls_weights(t, TIMES, h, 3, "epanechnikov") for t in TIMES])
    rss = np.sum((y - L @ y) ** 2)
    expected = (rss / 200) / (1 - np.trace(L) / 200) ** 2
    assert score == pytest.approx(expected, rel=1e-9)
    np.testing.assert_allclose(diag, np.diag(L), atol=1e-12)


def test_estimate_is_immutable():
    est = local_poly_fit(TIMES, np.sin(TIMES))
    with pytest.raises(ValueError):
        est.y[0] = 1.0


configs = st.builds(
    lambda d, k, frac: (d, k, frac),
    st.integers(0, 3),
    st.sampled_from(sorted(KERNELS)),
    st.floats(0.0, 1.0),
)


@settings(max_examples=200, deadline=None)
@given(configs, st.floats(0.0, 1.0), st.integers(20, 120))
def test_weight_sum_identity(cfg, t, n):
    degree, kernel, frac = cfg
    times = np.arange(1, n + 1) / n
    # bandwidths wide enough that a boundary window holds degree + 2 points
    lo = (degree + 2) / n
    h = lo + frac * (0.5 - lo)
    w, _ = weight_vector(t, times, LocalPolyConfig(degree=degree, kernel=kernel), h=h)
    assert abs(w.sum() - 1) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 3), st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(0.1, 0.3))
def test_polynomial_reproduction(degree, coefs, h):
    poly = np.polynomial.Polynomial(coefs[: degree + 1])
    est = local_poly_fit(TIMES, poly(TIMES), LocalPolyConfig(degree=degree, bandwidth=h))
    t = np.linspace(h + 1e-3, 1 - h - 1e-3, 25)
    t = t[t >= TIMES[0] + h]
    np.testing.assert_allclose(est(t), poly(t), atol=1e-8 * max(1.0, np.abs(coefs).max()))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(0.0, 6.3), st.floats(0.04, 0.06))
def test_derivative_matches_finite_differences(coefs, phase, h):
    # noiseless smooth signals: the local slope and the slope of the fit agree
    # once the local cubic tracks the signal (noise separates the two)
    def signal(t):
        return np.polynomial.Polynomial(coefs)(t) + np.sin(2 * np.pi * t + phase)

    est = local_poly_fit(TIMES, signal(TIMES), LocalPolyConfig(bandwidth=h))
    t = np.linspace(0.2, 0.8, 13)
    eps = 1e-5
    fd = (est(t + eps) - est(t - eps)) / (2 * eps)
    d = est.derivative(t)
    # relative to the derivative's size on the grid, since d crosses zero
    assert np.abs(d - fd).max() <= 1e-4 * max(np.abs(d).max(), 1.0)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_influence_trace_non_increasing(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(40, 150))
    times = np.sort(rng.uniform(0, 1, n))
    times = times[np.r_[True, np.diff(times) > 1e-6]]
    cfg = LocalPolyConfig()
    hs = np.linspace(0.15, 0.6, 12)
    tr = [influence_trace(times, h, cfg) for h in hs]
    assert np.all(np.diff(tr) <= 1e-8)
