"""Tests for kernel evaluation, bandwidths, and Nadaraya-Watson weights."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import array_shapes, arrays
from scipy.integrate import quad

from wsaa.kernels import (
    BandwidthSchedule,
    EmptyNeighborhoodError,
    KernelSpec,
    WeightVector,
    bandwidth,
    kde,
    kernel_eval,
    kernel_r2,
    nw_weights,
    sum_sq_weights,
)

GAUSS = KernelSpec("gaussian")
UNIF = KernelSpec("uniform")
EPAN = KernelSpec("epanechnikov")


class TestKernelEval:
    def test_gaussian_peak_at_origin(self):
        assert kernel_eval(GAUSS, np.zeros(3)) == 1.0

    def test_uniform_outside_ball(self):
        assert kernel_eval(UNIF, np.array([2.0])) == 0.0

    def test_epanechnikov_half_radius(self):
        assert kernel_eval(EPAN, np.array([0.5])) == pytest.approx(0.75)

    def test_all_families_peak_at_one(self):
        for spec in (GAUSS, UNIF, EPAN):
            assert kernel_eval(spec, np.zeros(2)) == 1.0

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            kernel_eval(GAUSS, np.array([np.nan]))

    def test_rejects_unknown_family(self):
        with pytest.raises(ValueError):
            KernelSpec("triangular")


class TestBandwidth:
    def test_n_one_returns_h0(self):
        assert bandwidth(BandwidthSchedule(1.0, 0.2, 2), 1) == 1.0

    def test_power_law(self):
        assert bandwidth(BandwidthSchedule(2.0, 0.2, 2), 32) == pytest.approx(1.0)

    def test_undersmoothing_exponent_accepted_without_warning(self):
        # delta = 1/(d_x + 3) = 1/5 sits inside the undersmoothing range for d_x = 2
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            sched = BandwidthSchedule(1.0, 1.0 / 5.0, 2)
        assert not sched.outside_debias_range

    def test_small_delta_warns(self):
        with pytest.warns(UserWarning):
            sched = BandwidthSchedule(1.0, 1.0 / 6.0, 2)
        assert sched.outside_debias_range

    def test_rejects_bad_delta(self):
        with pytest.raises(ValueError):
            BandwidthSchedule(1.0, 0.6, 2)

    def test_rejects_zero_n(self):
        with pytest.raises(ValueError):
            bandwidth(BandwidthSchedule(1.0, 0.2, 2), 0)


class TestNwWeights:
    def test_identical_points_give_uniform_weights(self):
        X = np.tile([1.0, -2.0], (5, 1))
        for spec in (GAUSS, UNIF, EPAN):
            w = nw_weights(X, [1.0, -2.0], spec, 0.5)
            np.testing.assert_allclose(w.values, 0.2)

    def test_two_point_gaussian_example(self):
        # direct evaluation: K(0) = 1, K(1) = exp(-1/2)
        w = nw_weights(np.array([[0.0], [1.0]]), [0.0], GAUSS, 1.0)
        k1 = math.exp(-0.5)
        np.testing.assert_allclose(w.values, [1.0 / (1.0 + k1), k1 / (1.0 + k1)], atol=1e-12)
        np.testing.assert_allclose(w.values, [0.6225, 0.3775], atol=1e-4)

    def test_empty_neighborhood_raises_with_distance(self):
        X = np.array([[1.0], [2.0]])
        with pytest.raises(EmptyNeighborhoodError, match="1"):
            nw_weights(X, [0.0], UNIF, 0.1)

    def test_gaussian_far_query_does_not_underflow(self):
        X = np.array([[0.0], [1.0]])
        w = nw_weights(X, [1e4], GAUSS, 0.01)
        assert np.isfinite(w.values).all()
        assert w.values.sum() == pytest.approx(1.0)
        assert w.values[1] > w.values[0]

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            nw_weights(np.ones((3, 2)), [0.0], GAUSS, 1.0)


class TestWeightVector:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            WeightVector(np.array([1.5, -0.5]))

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            WeightVector(np.array([0.5, 0.4]))

    def test_accepts_probability_vector(self):
        assert len(WeightVector(np.array([0.25, 0.75]))) == 2


class TestKde:
    def test_single_point_at_query(self):
        assert kde(np.array([[0.0]]), [0.0], GAUSS, 1.0) == pytest.approx(1.0)

    def test_two_point_example(self):
        got = kde(np.array([[0.0], [1.0]]), [0.0], GAUSS, 1.0)
        assert got == pytest.approx((1.0 + math.exp(-0.5)) / 2.0)
        assert got == pytest.approx(0.8033, abs=1e-4)

    def test_uniform_no_mass(self):
        assert kde(np.array([[1.0], [2.0]]), [0.0], UNIF, 0.1) == 0.0


class TestKernelR2:
    def test_gaussian_plane(self):
        assert kernel_r2(GAUSS, 2) == pytest.approx(math.pi)

    def test_uniform_interval_and_disk(self):
        assert kernel_r2(UNIF, 1) == pytest.approx(2.0)
        assert kernel_r2(UNIF, 2) == pytest.approx(math.pi)

    @pytest.mark.parametrize("spec", [GAUSS, UNIF, EPAN])
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_matches_radial_quadrature(self, spec, d):
        # independent route: R2 = surface(d-1) * int_0^inf K(r)^2 r^(d-1) dr
        surface = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
        if spec.family == "gaussian":
            profile, upper = (lambda r: math.exp(-r * r)), np.inf
        elif spec.family == "uniform":
            profile, upper = (lambda r: 1.0), 1.0
        else:
            profile, upper = (lambda r: (1.0 - r * r) ** 2), 1.0
        expected = surface * quad(lambda r: profile(r) * r ** (d - 1), 0.0, upper)[0]
        assert kernel_r2(spec, d) == pytest.approx(expected, rel=1e-6)

    def test_epanechnikov_high_dimension_falls_back_to_quadrature(self):
        surface = 2.0 * math.pi**2.5 / math.gamma(2.5)
        expected = surface * quad(lambda r: (1 - r * r) ** 2 * r**4, 0, 1)[0]
        assert kernel_r2(EPAN, 5) == pytest.approx(expected, rel=1e-9)


class TestSumSqWeights:
    def test_uniform_four(self):
        assert sum_sq_weights(np.full(4, 0.25)) == pytest.approx(0.25)

    def test_point_mass(self):
        assert sum_sq_weights(np.array([1.0, 0.0, 0.0])) == 1.0

    def test_two_point_example(self):
        k1 = math.exp(-0.5)
        w = np.array([1.0, k1]) / (1.0 + k1)
        assert sum_sq_weights(w) == pytest.approx(0.5300, abs=1e-3)


finite_rows = arrays(
    float,
    array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=20),
    elements=st.floats(-50, 50),
)


@given(X=finite_rows, h=st.floats(0.1, 10.0), family=st.sampled_from(["gaussian", "uniform", "epanechnikov"]))
@settings(max_examples=200, deadline=None)
def test_weights_form_probability_vector(X, h, family):
    spec = KernelSpec(family)
    x0 = X[0]
    try:
        w = nw_weights(X, x0, spec, h)
    except EmptyNeighborhoodError:
        assert family != "gaussian"
        return
    assert np.all(w.values >= 0)
    assert math.isclose(w.values.sum(), 1.0, rel_tol=1e-12)


@given(X=finite_rows, h=st.floats(0.1, 10.0), shift=st.floats(-100, 100))
@settings(max_examples=100, deadline=None)
def test_weights_translation_invariant(X, h, shift):
    x0 = X[0] + 0.3
    base = nw_weights(X, x0, GAUSS, h)
    moved = nw_weights(X + shift, x0 + shift, GAUSS, h)
    np.testing.assert_allclose(moved.values, base.values, rtol=1e-9, atol=1e-12)


@given(X=finite_rows, h=st.floats(0.1, 10.0), a=st.floats(0.01, 100.0))
@settings(max_examples=100, deadline=None)
def test_weights_scale_consistent(X, h, a):
    x0 = X[0] + 0.3
    base = nw_weights(X, x0, GAUSS, h)
    scaled = nw_weights(a * X, a * x0, GAUSS, a * h)
    np.testing.assert_allclose(scaled.values, base.values, rtol=1e-9, atol=1e-12)


@given(X=finite_rows, h=st.floats(0.1, 10.0))
@settings(max_examples=100, deadline=None)
def test_gaussian_kde_strictly_positive(X, h):
    assert kde(X, X[0] + 0.5, GAUSS, h) > 0.0
