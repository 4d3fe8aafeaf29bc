"""Particle storage and log-domain weight arithmetic.

Importance weights can span hundreds of orders of magnitude when the target
density is known only up to scale, so every weight is stored as a natural log
and weights are only ever combined through max-shifted exponentiation. The
single linear-domain structure is the cumulative weight array needed for
O(log n) multinomial resampling; it is maintained incrementally against a
log-scale offset and re-summed whenever the dynamic range moves or the
backing buffers grow, which bounds floating-point drift.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

__all__ = ["DegenerateCloudError", "Particle", "ParticleCloud"]

# exp() under/overflow guard band for the linear cumulative array
_RANGE = 600.0


class DegenerateCloudError(RuntimeError):
    """Every particle weight is zero, so no normalization exists."""


@dataclasses.dataclass(frozen=True)
class Particle:
    """One weighted sample point.

    Attributes
    ----------
    position : ndarray, shape (d,)
        Sample location; entries must be finite.
    log_weight : float
        Natural log of the unnormalized importance weight. ``-inf`` is legal
        (the target vanished at the point); ``+inf`` and NaN are not.
    """

    position: np.ndarray
    log_weight: float

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float)
        if pos.ndim != 1:
            raise ValueError("particle position must be a 1-D vector")
        if not np.all(np.isfinite(pos)):
            raise ValueError("particle position must be finite")
        lw = float(self.log_weight)
        if math.isnan(lw) or lw == math.inf:
            raise ValueError("log_weight must be < +inf and not NaN")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "log_weight", lw)


class ParticleCloud:
    """Growing collection of weighted particles in a fixed dimension.

    Positions and log-weights live in amortized O(1)-append buffers. The
    cumulative weight array stores prefix sums of ``exp(log_weight -
    log_scale)``; ``log_scale`` is 0 until the observed weight range forces a
    rescale, so for moderate weights ``cum_weight[i] == sum(exp(lw[:i+1]))``.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = int(dim)
        self.log_scale = 0.0
        self._n = 0
        self._max_lw = -math.inf
        cap = 16
        self._pos = np.empty((cap, self.dim))
        self._lw = np.empty(cap)
        self._cum = np.empty(cap)

    def __len__(self) -> int:
        return self._n

    @property
    def positions(self) -> np.ndarray:
        return self._pos[: self._n]

    @property
    def log_weights(self) -> np.ndarray:
        return self._lw[: self._n]

    @property
    def cum_weight(self) -> np.ndarray:
        """Non-decreasing prefix sums of exp(log_weight - log_scale)."""
        return self._cum[: self._n]

    @property
    def total_weight(self) -> float:
        return float(self._cum[self._n - 1]) if self._n else 0.0

    def _grow(self, need: int):
        cap = max(2 * self._pos.shape[0], need, 16)
        for name in ("_pos", "_lw", "_cum"):
            old = getattr(self, name)
            shape = (cap,) + old.shape[1:]
            new = np.empty(shape)
            new[: self._n] = old[: self._n]
            setattr(self, name, new)
        # buffers were rewritten anyway; re-sum to cancel accumulated drift
        self.rebuild_cum()

    def rebuild_cum(self):
        """Re-sum cum_weight from the stored log weights.

        Also recenters log_scale on the current max log-weight when the
        offset has drifted out of exp()'s comfortable range.
        """
        if self._n and math.isfinite(self._max_lw):
            if abs(self._max_lw - self.log_scale) > _RANGE / 2:
                self.log_scale = self._max_lw
        np.cumsum(np.exp(self._lw[: self._n] - self.log_scale),
                  out=self._cum[: self._n])

    def append(self, p: Particle):
        """Append one particle (amortized O(1))."""
        if p.position.shape[0] != self.dim:
            raise ValueError(
                f"dimension mismatch: cloud is {self.dim}-dimensional, "
                f"particle has length {p.position.shape[0]}")
        self._append_raw(p.position, p.log_weight)

    def extend(self, positions: np.ndarray, log_weights: np.ndarray):
        """Append a batch of particles sharing validation with append()."""
        positions = np.asarray(positions, dtype=float)
        log_weights = np.asarray(log_weights, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != self.dim:
            raise ValueError("positions must have shape (k, %d)" % self.dim)
        if log_weights.shape != (positions.shape[0],):
            raise ValueError("log_weights length must match positions")
        if not np.all(np.isfinite(positions)):
            raise ValueError("positions must be finite")
        if np.any(np.isnan(log_weights)) or np.any(log_weights == np.inf):
            raise ValueError("log weights must be < +inf and not NaN")
        k = positions.shape[0]
        if k == 0:
            return
        if self._n + k > self._pos.shape[0]:
            self._grow(self._n + k)
        batch_max = float(log_weights.max())
        if batch_max > self._max_lw:
            self._max_lw = batch_max
        if batch_max - self.log_scale > _RANGE or (
                math.isfinite(self._max_lw)
                and self._max_lw - self.log_scale < -_RANGE):
            self.log_scale = self._max_lw
            np.cumsum(np.exp(self._lw[: self._n] - self.log_scale),
                      out=self._cum[: self._n])
        n = self._n
        self._pos[n: n + k] = positions
        self._lw[n: n + k] = log_weights
        prev = self._cum[n - 1] if n else 0.0
        self._cum[n: n + k] = prev + np.cumsum(np.exp(log_weights - self.log_scale))
        self._n = n + k

    def _append_raw(self, pos: np.ndarray, lw: float):
        if self._n == self._pos.shape[0]:
            self._grow(self._n + 1)
        if lw > self._max_lw:
            self._max_lw = lw
        # rescale before exp() could overflow, or when every weight so far
        # underflowed the current offset (total would stay falsely at zero)
        if lw - self.log_scale > _RANGE or (
                math.isfinite(self._max_lw)
                and self._max_lw - self.log_scale < -_RANGE):
            self.log_scale = self._max_lw
            np.cumsum(np.exp(self._lw[: self._n] - self.log_scale),
                      out=self._cum[: self._n])
        n = self._n
        self._pos[n] = pos
        self._lw[n] = lw
        prev = self._cum[n - 1] if n else 0.0
        self._cum[n] = prev + math.exp(lw - self.log_scale)
        self._n = n + 1

    def normalized_weights(self) -> np.ndarray:
        """Self-normalized weights, computed via max-shifted exponentiation.

        Returns w >= 0 with sum(w) == 1; raises DegenerateCloudError if every
        weight is zero.
        """
        if self._n == 0:
            raise ValueError("cloud is empty")
        lw = self._lw[: self._n]
        m = self._max_lw
        if m == -math.inf:
            raise DegenerateCloudError("all particle weights are zero")
        w = np.exp(lw - m)
        w /= w.sum()
        return w

    def effective_sample_size(self) -> float:
        """1 / sum(w_k^2) for normalized w; in [1, n]."""
        w = self.normalized_weights()
        return float(1.0 / np.dot(w, w))

    def weighted_mean(self) -> np.ndarray:
        """Self-normalized weighted mean of the positions."""
        w = self.normalized_weights()
        return w @ self.positions
