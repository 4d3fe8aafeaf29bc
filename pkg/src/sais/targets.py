"""Benchmark target densities with exact reference statistics.

All samplers consume only the unnormalized log density; the analytic mixture
structure carried by Gaussian targets exists for diagnostics (exact smoothed
references, quadrature oracles) and for error measurement via true_mean.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

__all__ = [
    "IsoGaussianMixture",
    "Target",
    "UnsupportedTargetError",
    "banana_target",
    "cold_start_target",
    "gaussian_mixture_target",
]


class UnsupportedTargetError(ValueError):
    """The target lacks the structure the requested operation needs."""


@dataclasses.dataclass(frozen=True)
class IsoGaussianMixture:
    """Mixture of isotropic Gaussians: sum_c w_c N(mean_c, var_c * I).

    Parameters
    ----------
    weights : ndarray, shape (c,)
        Mixture weights, summing to 1.
    means : ndarray, shape (c, d)
    variances : ndarray, shape (c,)
        Per-coordinate variance of each (isotropic) component.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        m = np.atleast_2d(np.asarray(self.means, dtype=float))
        v = np.asarray(self.variances, dtype=float)
        if not (w.shape[0] == m.shape[0] == v.shape[0]):
            raise ValueError("component counts disagree")
        if abs(w.sum() - 1.0) > 1e-12 or np.any(w <= 0):
            raise ValueError("weights must be positive and sum to 1")
        if np.any(v <= 0):
            raise ValueError("variances must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def log_pdf(self, x: np.ndarray) -> np.ndarray:
        """Normalized log density; x is (d,) or (k, d)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        d = self.dim
        # (k, c) matrix of per-component log densities
        diff = pts[:, None, :] - self.means[None, :, :]
        sq = np.einsum("kcd,kcd->kc", diff, diff)
        logcomp = (np.log(self.weights)[None, :]
                   - 0.5 * sq / self.variances[None, :]
                   - 0.5 * d * np.log(2 * math.pi * self.variances)[None, :])
        m = logcomp.max(axis=1)
        out = m + np.log(np.exp(logcomp - m[:, None]).sum(axis=1))
        return float(out[0]) if single else out

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def convolve(self, h: float) -> "IsoGaussianMixture":
        """Exact convolution with a Gaussian kernel of bandwidth h."""
        return IsoGaussianMixture(self.weights, self.means,
                                  self.variances + h * h)


@dataclasses.dataclass(frozen=True)
class Target:
    """An evaluatable unnormalized log density with metadata.

    Attributes
    ----------
    name : str
    dim : int
    true_mean : ndarray or None
        Mean of the normalized density, when known analytically.
    normalized : bool
        Whether log_density_unnorm already integrates to 1. Samplers must not
        rely on this; it exists for quadrature diagnostics.
    mixture : IsoGaussianMixture or None
        Analytic structure when the target is a Gaussian mixture.
    """

    name: str
    dim: int
    _log_density: Callable[[np.ndarray], np.ndarray]
    true_mean: Optional[np.ndarray] = None
    normalized: bool = False
    mixture: Optional[IsoGaussianMixture] = None

    def log_density_unnorm(self, x: np.ndarray) -> np.ndarray:
        """Log f_U at x; accepts (d,) -> float or (k, d) -> (k,)."""
        return self._log_density(x)


def gaussian_mixture_target(d: int) -> Target:
    """Two-component symmetric Gaussian mixture.

    f = 0.5 N(mu, (0.4/d) I) + 0.5 N(-mu, (0.4/d) I) with
    mu = (1,...,1)/(2 sqrt d); the two modes are Euclidean distance 1 apart
    and the true mean is 0. Returned normalized.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    mu = np.full(d, 1.0 / (2.0 * math.sqrt(d)))
    mix = IsoGaussianMixture(np.array([0.5, 0.5]),
                             np.stack([mu, -mu]),
                             np.array([0.4 / d, 0.4 / d]))
    return Target(name="gaussian-mixture", dim=d, _log_density=mix.log_pdf,
                  true_mean=np.zeros(d), normalized=True, mixture=mix)


def cold_start_target(d: int) -> Target:
    """Single Gaussian far from the origin: N((5,...,5)/sqrt d, (1/d) I).

    ||true_mean||^2 = 25 regardless of d, so a sampler that never leaves the
    origin scores a squared error of 25.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    mu = np.full(d, 5.0 / math.sqrt(d))
    mix = IsoGaussianMixture(np.array([1.0]), mu[None, :], np.array([1.0 / d]))
    return Target(name="cold-start", dim=d, _log_density=mix.log_pdf,
                  true_mean=mu, normalized=True, mixture=mix)


def banana_target(d: int = 2, curvature: float = 0.03,
                  spread: float = 100.0) -> Target:
    """Illustration target: a twisted Gaussian plus two offset Gaussians.

    The twisted component follows N(0, diag(spread, 1, ..., 1)) with the
    second coordinate sheared by x2 -> x2 + curvature*(x1^2 - spread); the
    two companions are unit-variance Gaussians at (+-6, -6, 0, ...). The
    parameters are illustrative. Unnormalized; no true_mean.
    """
    if d < 2:
        raise ValueError("banana target needs d >= 2")
    b = float(curvature)
    s = float(spread)
    if s <= 0:
        raise ValueError("spread must be positive")
    off = np.zeros((2, d))
    off[0, :2] = (6.0, -6.0)
    off[1, :2] = (-6.0, -6.0)
    log_third = math.log(1.0 / 3.0)
    norm_banana = -0.5 * (math.log(2 * math.pi * s)
                          + (d - 1) * math.log(2 * math.pi))
    norm_gauss = -0.5 * d * math.log(2 * math.pi)

    def logpdf(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        z = pts.copy()
        z[:, 1] = pts[:, 1] + b * (pts[:, 0] ** 2 - s)
        quad = z[:, 0] ** 2 / s + (z[:, 1:] ** 2).sum(axis=1)
        lb = norm_banana - 0.5 * quad
        comps = [log_third + lb]
        for c in range(2):
            diff = pts - off[c]
            comps.append(log_third + norm_gauss - 0.5 * (diff ** 2).sum(axis=1))
        stack = np.stack(comps, axis=1)
        m = stack.max(axis=1)
        out = m + np.log(np.exp(stack - m[:, None]).sum(axis=1))
        return float(out[0]) if single else out

    return Target(name="banana", dim=d, _log_density=logpdf)
