import math

import numpy as np
import pytest
from scipy import integrate

from sais.targets import (IsoGaussianMixture, Target, UnsupportedTargetError,
                          banana_target, cold_start_target,
                          gaussian_mixture_target)

# bimodal d=2 density value at one of its modes, pinned analytically:
# 0.5*N(mu, 0.2 I)(mu) + 0.5*N(-mu, 0.2 I)(mu) with mu = (1,1)/(2 sqrt 2)
MODE_VALUE_D2 = 0.430547940941


def test_mixture_validation():
    with pytest.raises(ValueError):
        IsoGaussianMixture(weights=np.array([0.5, 0.4]),
                           means=np.zeros((2, 1)),
                           variances=np.ones(2))
    with pytest.raises(ValueError):
        IsoGaussianMixture(weights=np.array([1.0]), means=np.zeros((1, 1)),
                           variances=np.array([-1.0]))
    with pytest.raises(ValueError):
        IsoGaussianMixture(weights=np.array([1.0]), means=np.zeros((2, 1)),
                           variances=np.ones(1))


def test_mixture_log_pdf_matches_manual():
    mix = IsoGaussianMixture(weights=np.array([0.3, 0.7]),
                             means=np.array([[1.0, 0.0], [-1.0, 2.0]]),
                             variances=np.array([0.5, 2.0]))
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((20, 2))

    def manual(x):
        total = 0.0
        for w, m, v in zip(mix.weights, mix.means, mix.variances):
            z = x - m
            total += w * math.exp(-0.5 * z @ z / v) / (2 * math.pi * v)
        return math.log(total)

    got = mix.log_pdf(pts)
    expected = [manual(x) for x in pts]
    np.testing.assert_allclose(got, expected, rtol=1e-12)
    # scalar call agrees with the vectorized one
    assert mix.log_pdf(pts[3]) == pytest.approx(got[3], rel=1e-15)


def test_mixture_convolve_adds_variance():
    mix = IsoGaussianMixture(weights=np.array([1.0]), means=np.zeros((1, 1)),
                             variances=np.array([1.0]))
    smooth = mix.convolve(0.5)
    np.testing.assert_allclose(smooth.variances, [1.25])
    # value at 0 is the N(0, 1.25) density
    assert smooth.log_pdf(np.zeros(1)) == pytest.approx(
        -0.5 * math.log(2 * math.pi * 1.25), rel=1e-12)


def test_gaussian_mixture_target_mode_value():
    t = gaussian_mixture_target(2)
    mu = np.ones(2) / (2 * math.sqrt(2))
    assert math.exp(t.log_density_unnorm(mu)) == pytest.approx(
        MODE_VALUE_D2, abs=1e-10)


def test_gaussian_mixture_target_structure():
    for d in (1, 2, 4):
        t = gaussian_mixture_target(d)
        assert t.dim == d
        assert t.normalized
        np.testing.assert_array_equal(t.true_mean, np.zeros(d))
        # symmetric bimodal: f(x) = f(-x)
        rng = np.random.default_rng(d)
        x = rng.standard_normal(d)
        assert t.log_density_unnorm(x) == pytest.approx(
            t.log_density_unnorm(-x), rel=1e-12)


def test_gaussian_mixture_target_integrates_to_one():
    t = gaussian_mixture_target(1)
    val, err = integrate.quad(lambda x: math.exp(
        t.log_density_unnorm(np.array([x]))), -12, 12, limit=200)
    assert val == pytest.approx(1.0, abs=1e-9)


def test_cold_start_target_geometry():
    for d in (1, 4, 9):
        t = cold_start_target(d)
        mu = np.full(d, 5.0 / math.sqrt(d))
        np.testing.assert_allclose(t.true_mean, mu, rtol=1e-15)
        assert float(t.true_mean @ t.true_mean) == pytest.approx(25.0)
        # isotropic Gaussian with per-coordinate variance 1/d, so the log
        # density at the mean is the normalizer alone
        assert t.log_density_unnorm(mu) == pytest.approx(
            -0.5 * d * math.log(2 * math.pi / d), rel=1e-12)


def test_banana_target_curvature_zero_is_plain_mixture():
    b = banana_target(3, curvature=0.0, spread=100.0)
    rng = np.random.default_rng(7)
    pts = rng.standard_normal((10, 3)) * 3

    def manual(x):
        # with no shear: one wide component + two unit offsets, weights 1/3
        comps = []
        var0 = np.array([100.0, 1.0, 1.0])
        for center in (np.zeros(3), np.array([6.0, -6.0, 0.0]),
                       np.array([-6.0, -6.0, 0.0])):
            z = x - center
            comps.append(-0.5 * np.sum(z * z / var0)
                         - 0.5 * np.sum(np.log(2 * np.pi * var0)))
            var0 = np.ones(3)
        return math.log(sum(math.exp(c) / 3 for c in comps))

    for x in pts:
        assert b.log_density_unnorm(x) == pytest.approx(manual(x), rel=1e-10)


def test_banana_target_metadata():
    b = banana_target(2)
    assert not b.normalized
    assert b.true_mean is None
    assert b.mixture is None
    with pytest.raises(ValueError):
        banana_target(1)


def test_banana_shear_moves_mass():
    b = banana_target(2, curvature=0.03, spread=100.0)
    # the shear z2 = x2 + b(x1^2 - s) lifts density along a parabola: a
    # point on the ridge beats the same point with x2 shifted off it
    x1 = 5.0
    on_ridge = np.array([x1, -0.03 * (x1 ** 2 - 100.0)])
    off_ridge = on_ridge + np.array([0.0, 4.0])
    assert b.log_density_unnorm(on_ridge) > b.log_density_unnorm(off_ridge)


def test_target_dataclass_passthrough():
    mix = IsoGaussianMixture(weights=np.array([1.0]), means=np.zeros((1, 1)),
                             variances=np.array([1.0]))
    t = Target(name="unit", dim=1, _log_density=mix.log_pdf,
               true_mean=np.zeros(1), normalized=True, mixture=mix)
    assert t.log_density_unnorm(np.zeros(1)) == pytest.approx(
        -0.5 * math.log(2 * math.pi))
