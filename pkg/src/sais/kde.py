"""Kernels and weighted kernel density estimation.

The estimator is f(x) = sum_k w_k K_h(x - X_k) with K_h(u) = K(u/h)/h^d.
Everything is computed in log domain with max-shifted summation; the Gaussian
default gets a fast path that streams over center chunks (squared distances
via a matrix product) so that evaluation stays exact O(#centers) without ever
materializing the full point-by-center matrix.
"""

from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np

from .targets import Target, UnsupportedTargetError

__all__ = ["GAUSSIAN", "GaussianKernel", "kde_log_density", "kde_sample",
           "smoothed_reference"]

# elements per streamed chunk of the point-by-center exponent matrix; sized
# so a chunk plus its operands stay cache-resident (measured fastest here)
_CHUNK_ELEMENTS = 2_000_000


class GaussianKernel:
    """Standard Gaussian product kernel.

    Smooth, bounded, Lipschitz, zero mean, identity second moment, and closed
    under convolution with Gaussian targets, which is what makes the exact
    smoothed reference available for the distributional checks.
    """

    name = "gaussian"

    def log_k(self, u: np.ndarray) -> np.ndarray:
        """Log kernel value; u has shape (..., d)."""
        u = np.asarray(u, dtype=float)
        d = u.shape[-1]
        return -0.5 * (u * u).sum(axis=-1) - 0.5 * d * math.log(2 * math.pi)

    def sample_unit(self, rng: np.random.Generator, size: int,
                    dim: int) -> np.ndarray:
        return rng.standard_normal((size, dim))

    def sq_integral(self, dim: int) -> float:
        """Value of the integral of K^2 in dimension dim: (4 pi)^(-d/2)."""
        return (4 * math.pi) ** (-dim / 2)

    def second_moment(self, dim: int) -> float:
        """Integral of ||u||^2 K(u) du."""
        return float(dim)


GAUSSIAN = GaussianKernel()


def _validate_support(centers: np.ndarray, weights: np.ndarray,
                      h: float) -> Tuple[np.ndarray, np.ndarray]:
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    weights = np.asarray(weights, dtype=float)
    if centers.shape[0] == 0:
        raise ValueError("KDE needs at least one center")
    if weights.shape != (centers.shape[0],):
        raise ValueError("weights length must match centers")
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-8:
        raise ValueError("weights must be nonnegative and sum to 1")
    return centers, weights


def kde_log_density(x: np.ndarray, centers: np.ndarray, weights: np.ndarray,
                    h: float, kernel: GaussianKernel = GAUSSIAN):
    """Log of the weighted KDE at x.

    Parameters
    ----------
    x : ndarray, shape (d,) or (p, d)
    centers : ndarray, shape (k, d)
    weights : ndarray, shape (k,)
        Normalized (sum to 1); zero entries are allowed.
    h : float
        Bandwidth.
    kernel : kernel object
        Gaussian default uses the streamed fast path; any other kernel is
        evaluated through its log_k on explicit differences.

    Returns
    -------
    float or ndarray of shape (p,)
    """
    centers, weights = _validate_support(centers, weights, h)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != centers.shape[1]:
        raise ValueError("query dimension does not match centers")
    d = centers.shape[1]
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    if isinstance(kernel, GaussianKernel):
        out = _gaussian_path(pts, centers, logw, h)
    else:
        out = _generic_path(pts, centers, logw, h, kernel, d)
    return float(out[0]) if single else out


def _gaussian_path(pts, centers, logw, h):
    """Streamed max-shifted log-sum-exp over center chunks.

    The exponent splits as inv*||x||^2 (a per-row constant, added at the end)
    plus log w_k + inv*||X_k||^2 (a per-column offset) plus -2*inv*(x . X_k).
    The cross term comes from a matrix product against pre-scaled points (a
    plain broadcast multiply in one dimension, where BLAS is at its worst).
    """
    p, d = pts.shape
    k = centers.shape[0]
    inv = -1.0 / (2.0 * h * h)
    pts = np.ascontiguousarray(pts)
    row = inv * (pts * pts).sum(axis=1)
    const = -0.5 * d * math.log(2.0 * math.pi) - d * math.log(h)
    scaled = pts * (-2.0 * inv)
    m = np.full(p, -np.inf)
    s = np.zeros(p)
    step = max(1, _CHUNK_ELEMENTS // p)
    for lo in range(0, k, step):
        hi = min(lo + step, k)
        ck = np.ascontiguousarray(centers[lo:hi])
        col = logw[lo:hi] + inv * (ck * ck).sum(axis=1)
        if d == 1:
            g = scaled[:, 0:1] * ck[None, :, 0]
        else:
            g = scaled @ ck.T
        g += col[None, :]
        cmax = g.max(axis=1)
        new_m = np.maximum(m, cmax)
        shift = np.where(np.isfinite(new_m), new_m, 0.0)
        s *= np.exp(m - shift)
        g -= shift[:, None]
        np.exp(g, out=g)
        s += g.sum(axis=1)
        m = new_m
    with np.errstate(divide="ignore"):
        return m + np.log(s) + row + const


def _generic_path(pts, centers, logw, h, kernel, d):
    p = pts.shape[0]
    k = centers.shape[0]
    const = -d * math.log(h)
    m = np.full(p, -np.inf)
    s = np.zeros(p)
    step = max(1, _CHUNK_ELEMENTS // max(p * d, 1))
    for lo in range(0, k, step):
        hi = min(lo + step, k)
        diff = (pts[:, None, :] - centers[None, lo:hi, :]) / h
        g = kernel.log_k(diff) + logw[None, lo:hi]
        cmax = g.max(axis=1)
        new_m = np.maximum(m, cmax)
        shift = np.where(np.isfinite(new_m), new_m, 0.0)
        s *= np.exp(m - shift)
        s += np.exp(g - shift[:, None]).sum(axis=1)
        m = new_m
    with np.errstate(divide="ignore"):
        return m + np.log(s) + const


def kde_sample(centers: np.ndarray, weights: np.ndarray, h: float,
               rng: np.random.Generator, size: Optional[int] = None,
               kernel: GaussianKernel = GAUSSIAN) -> np.ndarray:
    """Draw from the weighted KDE: pick a center, add h times a kernel draw.

    Returns shape (d,) when size is None, else (size, d). Center selection
    uses the cumulative weights with ties resolved to the higher index.
    """
    centers, weights = _validate_support(centers, weights, h)
    n = 1 if size is None else int(size)
    if n < 0:
        raise ValueError("size must be >= 0")
    d = centers.shape[1]
    cum = np.cumsum(weights)
    u = rng.random(n) * cum[-1]
    idx = np.searchsorted(cum, u, side="right")
    np.minimum(idx, centers.shape[0] - 1, out=idx)
    draws = centers[idx] + h * kernel.sample_unit(rng, n, d)
    return draws[0] if size is None else draws


def smoothed_reference(target: Target, h: float) -> Target:
    """Exact Gaussian-kernel smoothing of a Gaussian-mixture target.

    Convolution adds h^2 to each component's per-coordinate variance; the
    mean is unchanged. Raises UnsupportedTargetError when the target carries
    no analytic mixture structure.
    """
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    if target.mixture is None:
        raise UnsupportedTargetError(
            f"target {target.name!r} has no Gaussian-mixture structure")
    mix = target.mixture.convolve(h)
    return Target(name=f"{target.name}+kernel(h={h:g})", dim=target.dim,
                  _log_density=mix.log_pdf, true_mean=target.true_mean,
                  normalized=target.normalized, mixture=mix)
