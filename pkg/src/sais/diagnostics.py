"""Estimator diagnostics: variance functionals, quadrature oracles, and
replicated central-limit checks.

The variance functional V(q, g) = int g^2 f^2 / q - (int g f)^2 is the
asymptotic variance of a self-normalized importance-sampling estimate of
int g f under proposal q; C(q) = int f^2 / q is the g-free criterion whose
unique minimizer over densities is q = f, with minimum value 1. Both are
computed by adaptive quadrature over a finite box, through the same
integrand field, so they agree with each other by construction.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from .cloud import ParticleCloud
from .kde import kde_log_density
from .targets import Target, UnsupportedTargetError
from .util import mix_seed, parallel_map

__all__ = ["CltCheck", "GaussianDensity", "clt_variance_check_integral",
           "clt_variance_check_kde", "criterion_C", "integrate_box",
           "mse_metric", "self_normalized_estimate", "sigma_sq_field",
           "variance_functional"]

#: default half-width of the integration box; the integrands here all carry
#: Gaussian-squared decay, so the tail beyond this is far below quadrature
#: tolerance for the unit-scale densities this module is used with
_BOX = 15.0

LogDensity = Callable[[np.ndarray], float]


@dataclasses.dataclass(frozen=True)
class GaussianDensity:
    """Isotropic Gaussian with per-coordinate variance, usable as a fixed
    proposal in the replicated checks (log_density + sample)."""

    mean: np.ndarray
    var: float

    def __post_init__(self) -> None:
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        if not self.var > 0:
            raise ValueError("variance must be positive")
        object.__setattr__(self, "mean", mean)

    @property
    def dim(self) -> int:
        return self.mean.size

    def log_density(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        z = pts - self.mean[None, :]
        out = (-0.5 * (z * z).sum(axis=1) / self.var
               - 0.5 * self.dim * math.log(2 * math.pi * self.var))
        return float(out[0]) if single else out

    def sample(self, rng: np.random.Generator,
               size: Optional[int] = None) -> np.ndarray:
        n = 1 if size is None else int(size)
        draws = self.mean[None, :] + math.sqrt(self.var) * rng.standard_normal(
            (n, self.dim))
        return draws[0] if size is None else draws


def _as_log_density(q) -> LogDensity:
    if hasattr(q, "log_density"):
        return q.log_density
    if callable(q):
        return q
    raise TypeError("proposal must expose log_density or be callable")


def _require_normalized(f: Target) -> None:
    if not f.normalized:
        raise UnsupportedTargetError(
            f"target {f.name!r} is unnormalized; the variance functionals "
            "are defined against normalized densities")


def _bounds(f: Target, bounds) -> Sequence[Tuple[float, float]]:
    if bounds is None:
        return [(-_BOX, _BOX)] * f.dim
    bounds = [tuple(map(float, b)) for b in bounds]
    if len(bounds) != f.dim:
        raise ValueError("one (low, high) pair per dimension is required")
    return bounds


def integrate_box(fn: Callable[[np.ndarray], float],
                  bounds: Sequence[Tuple[float, float]],
                  epsabs: float = 1e-12,
                  epsrel: float = 1e-10) -> Tuple[float, float]:
    """Adaptive quadrature of fn over a box; fn takes one point (d,).

    Returns (value, error estimate)."""
    dim = len(bounds)
    if dim == 1:
        val, err = integrate.quad(lambda x: fn(np.array([x])),
                                  bounds[0][0], bounds[0][1],
                                  epsabs=epsabs, epsrel=epsrel, limit=400)
        return val, err
    val, err = integrate.nquad(
        lambda *coords: fn(np.asarray(coords, dtype=float)),
        list(bounds),
        opts={"epsabs": epsabs, "epsrel": epsrel, "limit": 200})
    return val, err


def _vanishes_on_support(f: Target, log_q: LogDensity,
                         bounds: Sequence[Tuple[float, float]]) -> bool:
    """Probe a coarse grid: does q vanish somewhere the target does not?"""
    if f.dim <= 2:
        axes = [np.linspace(lo, hi, 81) for lo, hi in bounds]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        rng = np.random.default_rng(0)
        lo = np.array([b[0] for b in bounds])
        hi = np.array([b[1] for b in bounds])
        pts = lo + (hi - lo) * rng.random((4096, f.dim))
    log_f = np.asarray(f.log_density_unnorm(pts), dtype=float)
    log_qv = np.array([log_q(p) for p in pts], dtype=float)
    return bool(np.any((log_f > -690.0) & (log_qv == -np.inf)))


def sigma_sq_field(f: Target, q) -> Callable[[np.ndarray], float]:
    """Pointwise ratio f(x)^2 / q(x), the local variance density of
    importance sampling under proposal q."""
    _require_normalized(f)
    log_q = _as_log_density(q)

    def field(x: np.ndarray) -> float:
        lf = float(f.log_density_unnorm(x))
        lq = float(log_q(x))
        if lf == -np.inf:
            return 0.0
        return math.exp(2.0 * lf - lq)

    return field


def criterion_C(f: Target, q, bounds=None) -> float:
    """The proposal-quality criterion int f^2 / q.

    Equals 1 exactly when q = f and exceeds 1 otherwise; returns inf when q
    vanishes somewhere the target has mass (detected on a probe grid).
    """
    bounds = _bounds(f, bounds)
    log_q = _as_log_density(q)
    if _vanishes_on_support(f, log_q, bounds):
        return math.inf
    value, _ = integrate_box(sigma_sq_field(f, q), bounds)
    return value


def variance_functional(f: Target, q, g: Callable[[np.ndarray], float],
                        bounds=None) -> float:
    """Asymptotic variance V(q, g) = int g^2 f^2 / q - (int g f)^2 of the
    self-normalized importance-sampling estimate of int g f under q."""
    bounds = _bounds(f, bounds)
    log_q = _as_log_density(q)
    if _vanishes_on_support(f, log_q, bounds):
        return math.inf
    field = sigma_sq_field(f, q)

    def second_moment(x: np.ndarray) -> float:
        return float(g(x)) ** 2 * field(x)

    def mean_integrand(x: np.ndarray) -> float:
        lf = float(f.log_density_unnorm(x))
        return float(g(x)) * math.exp(lf) if lf > -np.inf else 0.0

    moment, _ = integrate_box(second_moment, bounds)
    mean, _ = integrate_box(mean_integrand, bounds)
    return moment - mean * mean


def self_normalized_estimate(cloud: ParticleCloud,
                             g: Callable[[np.ndarray], np.ndarray]) -> float:
    """Weighted average of g over the cloud; g maps (n, d) -> (n,)."""
    weights = cloud.normalized_weights()
    values = np.asarray(g(cloud.positions), dtype=float)
    if values.shape != (len(cloud),):
        raise ValueError("g must map (n, d) positions to (n,) values")
    return float(weights @ values)


def mse_metric(estimate: Union[np.ndarray, "RunResult"],
               target: Target) -> float:
    """Squared Euclidean error of a mean estimate against the target mean.

    Accepts a point estimate (d,), a chain (n, d) whose rows are averaged,
    or any object with a final_estimate attribute.
    """
    if target.true_mean is None:
        raise UnsupportedTargetError(
            f"target {target.name!r} has no reference mean")
    if hasattr(estimate, "final_estimate"):
        point = np.asarray(estimate.final_estimate, dtype=float)
    else:
        arr = np.asarray(estimate, dtype=float)
        point = arr.mean(axis=0) if arr.ndim == 2 else arr
    if point.shape != (target.dim,):
        raise ValueError("estimate dimension does not match target")
    diff = point - target.true_mean
    return float(diff @ diff)


@dataclasses.dataclass(frozen=True)
class CltCheck:
    """Replicated variance against an oracle.

    z_score is (empirical - oracle) / SE where SE = oracle * sqrt(2/(R-1))
    is the chi-square standard error of a variance estimate at the oracle;
    |z| below a few units means the measured spread is consistent with the
    claimed limit.
    """

    empirical: float
    oracle: float
    z_score: float
    replicates: int


def _replicate_stats(stat_fn: Callable[[np.random.Generator], float],
                     replicates: int, base_seed: int, jobs: int) -> np.ndarray:
    if replicates < 2:
        raise ValueError("need at least two replicates")

    def one(index: int) -> float:
        rng = np.random.Generator(np.random.PCG64(mix_seed(base_seed, index)))
        return float(stat_fn(rng))

    return np.asarray(parallel_map(one, list(range(replicates)), jobs=jobs))


def _check(stats: np.ndarray, oracle_variance: float) -> CltCheck:
    emp = float(np.var(stats, ddof=1))
    se = oracle_variance * math.sqrt(2.0 / (len(stats) - 1))
    return CltCheck(empirical=emp, oracle=oracle_variance,
                    z_score=(emp - oracle_variance) / se,
                    replicates=len(stats))


def clt_variance_check_integral(estimator: Callable[[np.random.Generator, int], float],
                                n: int, true_value: float,
                                oracle_variance: float,
                                replicates: int = 200, base_seed: int = 0,
                                jobs: int = 1) -> CltCheck:
    """Variance of sqrt(n) * (estimator - truth) over independent replicates,
    compared to the claimed asymptotic variance.

    estimator(rng, n) must return a scalar estimate built from a sample of
    size n; replicate seeds are derived deterministically from base_seed.
    """
    root = math.sqrt(n)

    def stat(rng: np.random.Generator) -> float:
        return root * (estimator(rng, n) - true_value)

    return _check(_replicate_stats(stat, replicates, base_seed, jobs),
                  oracle_variance)


def clt_variance_check_kde(cloud_factory: Callable[[np.random.Generator, int],
                                                   Tuple[np.ndarray, np.ndarray]],
                           x: np.ndarray, n: int, h: float,
                           reference_value: float, oracle_variance: float,
                           replicates: int = 200, base_seed: int = 0,
                           jobs: int = 1) -> CltCheck:
    """Variance of sqrt(n h^d) * (f_n(x) - reference) over replicates.

    cloud_factory(rng, n) returns (centers, normalized weights) for one
    replicate; f_n is the weighted KDE at bandwidth h evaluated at x, and
    reference_value is typically the kernel-smoothed density at x.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    scale = math.sqrt(n * h ** x.size)

    def stat(rng: np.random.Generator) -> float:
        centers, weights = cloud_factory(rng, n)
        value = math.exp(kde_log_density(x, centers, weights, h))
        return scale * (value - reference_value)

    return _check(_replicate_stats(stat, replicates, base_seed, jobs),
                  oracle_variance)
