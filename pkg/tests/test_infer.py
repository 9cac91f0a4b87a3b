"""Tests for variance estimation and interval construction."""

import math

import numpy as np
import pytest
from scipy.special import ndtri

from wsaa.costs import FeasibleBox, Newsvendor, WsaaProblem
from wsaa.infer import (
    DegenerateDensityError,
    confidence_interval,
    direct_variance_estimate,
    error_decomposition,
    sample_cond_variance,
    variance_estimate,
)
from wsaa.kernels import KernelSpec, kde, kernel_mass, kernel_r2, nw_weights
from wsaa.normal import norm_cdf, norm_ppf, truncated_normal_mean
from wsaa.simulate import NewsvendorDgp, RngStream, sample_dataset
from wsaa.solve import solve_exact


def two_value_problem(values=(0.0, 2.0)):
    # templated so cost_value(z=0, y) equals c_u * y: F values are the y's
    Y = np.asarray(values, dtype=float)[:, None]
    return WsaaProblem(Y=Y, weights=np.full(len(values), 1.0 / len(values)),
                       model=Newsvendor(1.0, 1.0), box=FeasibleBox([-10.0], [10.0]))


class TestNormalHelpers:
    def test_ppf_matches_scipy_to_1e9(self):
        ps = np.concatenate([
            np.linspace(1e-12, 1e-3, 200), np.linspace(1e-3, 1 - 1e-3, 400),
            np.linspace(1 - 1e-3, 1 - 1e-12, 200),
        ])
        for p in ps:
            assert norm_ppf(p) == pytest.approx(float(ndtri(p)), abs=1e-9)

    def test_ppf_rejects_boundaries(self):
        for p in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValueError):
                norm_ppf(p)

    def test_cdf_ppf_round_trip(self):
        for x in (-5.0, -1.0, 0.0, 0.5, 3.0):
            assert norm_ppf(norm_cdf(x)) == pytest.approx(x, abs=1e-11)

    def test_truncated_mean_matches_scipy(self):
        from scipy import stats

        for mu, sd in ((1.0, 2.0), (-0.5, 1.0), (100.0, 3.0)):
            expected = stats.truncnorm.mean(-mu / sd, np.inf, loc=mu, scale=sd)
            assert truncated_normal_mean(mu, sd) == pytest.approx(expected, rel=1e-9)


class TestSampleCondVariance:
    def test_zero_spread(self):
        p = two_value_problem((3.0, 3.0, 3.0))
        assert sample_cond_variance(p, 0.0) == 0.0

    def test_two_sample_value(self):
        assert sample_cond_variance(two_value_problem((0.0, 2.0)), 0.0) == pytest.approx(1.0)

    def test_point_mass_weight(self):
        p = WsaaProblem(Y=np.array([[1.0], [5.0]]), weights=np.array([1.0, 0.0]),
                        model=Newsvendor(1.0, 1.0), box=FeasibleBox([-10.0], [10.0]))
        assert sample_cond_variance(p, 0.0) == 0.0


class TestVarianceEstimate:
    def test_uniform_weights_composition(self):
        n = 25
        p = WsaaProblem(Y=np.linspace(0, 4, n)[:, None], weights=np.full(n, 1.0 / n),
                        model=Newsvendor(1.0, 1.0), box=FeasibleBox([-10.0], [10.0]))
        sigma2 = sample_cond_variance(p, 0.0)
        got = variance_estimate(p, 0.0, n=100, h=1.0, d_x=2)
        assert got == pytest.approx(100.0 * sigma2 / n)

    def test_zero_conditional_variance(self):
        p = two_value_problem((2.0, 2.0))
        assert variance_estimate(p, 0.0, 50, 0.3, 2) == 0.0

    def test_two_point_chained_example(self):
        k1 = math.exp(-0.5)
        w = np.array([1.0, k1]) / (1.0 + k1)
        Y = np.array([[0.0], [2.0]])
        p = WsaaProblem(Y=Y, weights=w, model=Newsvendor(1.0, 1.0),
                        box=FeasibleBox([-10.0], [10.0]))
        sigma2 = sample_cond_variance(p, 0.0)
        got = variance_estimate(p, 0.0, n=2, h=1.0, d_x=1)
        assert got == pytest.approx(2.0 * sigma2 * 0.5300, abs=2e-3 * 2.0 * sigma2)


class TestDirectVarianceEstimate:
    def test_zero_sigma(self):
        assert direct_variance_estimate(two_value_problem((1.0, 1.0)), 0.0, 0.4, 3.14) == 0.0

    def test_cancellation(self):
        p = two_value_problem((0.0, 2.0))
        sigma2 = sample_cond_variance(p, 0.0)
        assert direct_variance_estimate(p, 0.0, math.pi, math.pi) == pytest.approx(sigma2)

    def test_degenerate_density(self):
        with pytest.raises(DegenerateDensityError):
            direct_variance_estimate(two_value_problem(), 0.0, 0.0, 1.0)


class TestConfidenceInterval:
    def test_worked_example(self):
        report = confidence_interval(10.0, 4.0, n=400, h=1.0, d_x=1, alpha=0.05)
        assert report.half_width == pytest.approx(0.19600, abs=1e-5)
        assert report.lower == pytest.approx(9.804, abs=1e-3)
        assert report.upper == pytest.approx(10.196, abs=1e-3)

    def test_zero_variance_gives_point_interval(self):
        report = confidence_interval(5.0, 0.0, 100, 0.5, 2, 0.05)
        assert report.half_width == 0.0
        assert report.lower == report.upper == 5.0

    def test_alpha_half_quantile(self):
        report = confidence_interval(0.0, 1.0, 1, 1.0, 1, 0.5)
        assert report.half_width == pytest.approx(0.67449, abs=1e-5)

    def test_negative_variance_clamped(self):
        report = confidence_interval(1.0, -1e-12, 10, 1.0, 1, 0.05)
        assert report.half_width == 0.0

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            confidence_interval(0.0, 1.0, 10, 1.0, 1, 1.5)


class TestErrorDecomposition:
    def test_identities(self):
        assert error_decomposition(10.5, 10.2, 10.0) == (pytest.approx(0.3), pytest.approx(0.2))
        assert error_decomposition(1.0, 1.0, 1.0) == (0.0, 0.0)

    def test_parts_sum_exactly(self):
        opt, stat = error_decomposition(3.7, 2.9, 1.4)
        assert opt + stat == (3.7 - 1.4)


def test_interval_width_shrinks_at_theoretical_rate():
    # median half-width over replications should scale like n^-0.3 per
    # decade with delta = 0.2 and two covariates
    sim = NewsvendorDgp()
    model = Newsvendor(10.0, 2.0)
    box = FeasibleBox([0.0], [200.0])
    kern = KernelSpec("gaussian")
    x0 = np.array([18.651, 2.2203])
    h0, delta = 1.5, 0.2
    medians = []
    for n in (10**2, 10**3, 10**4):
        widths = []
        for rep in range(40):
            X, Y = sample_dataset(sim, n, RngStream(77, rep))
            h = h0 * n**-delta
            w = nw_weights(X, x0, kern, h)
            p = WsaaProblem(Y=Y, weights=w.values, model=model, box=box)
            z, f = solve_exact(p)
            v = variance_estimate(p, z, n, h, 2)
            widths.append(confidence_interval(f, v, n, h, 2, 0.05).half_width)
        medians.append(float(np.median(widths)))
    for a, b in zip(medians, medians[1:]):
        shrink = b / a
        assert 0.75 * 10**-0.3 < shrink < 1.25 * 10**-0.3


def test_direct_and_plugin_variance_agree_at_scale():
    # both estimate the same limit once the direct route is fed
    # probability-normalized kernel constants; the ratio concentrates near 1
    sim = NewsvendorDgp()
    model = Newsvendor(10.0, 2.0)
    box = FeasibleBox([0.0], [200.0])
    kern = KernelSpec("gaussian")
    x0 = np.array([18.651, 2.2203])
    n = 10**4
    h = 1.5 * n**-0.2
    mass = kernel_mass(kern, 2)
    inside = 0
    for rep in range(50):
        X, Y = sample_dataset(sim, n, RngStream(99, rep))
        w = nw_weights(X, x0, kern, h)
        p = WsaaProblem(Y=Y, weights=w.values, model=model, box=box)
        z, _ = solve_exact(p)
        v_hat = variance_estimate(p, z, n, h, 2)
        v_tilde = direct_variance_estimate(p, z, kde(X, x0, kern, h) / mass,
                                           kernel_r2(kern, 2) / mass**2)
        if 0.8 < v_tilde / v_hat < 1.25:
            inside += 1
    assert inside >= 45
