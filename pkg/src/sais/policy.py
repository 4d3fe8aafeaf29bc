"""Sampling policies: heavy-tailed safe density, KDE/safe mixtures, schedules.

A policy is q = (1 - lam) * kde + lam * safe. The safe component is a
multivariate Student-t whose polynomial tails dominate any Gaussian-tailed
target ratio, which keeps importance weights integrable no matter how badly
the KDE component misses. The schedules module-mate drives lam and the KDE
bandwidth down as the particle budget grows.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from typing import Optional

import numpy as np

from .cloud import DegenerateCloudError, ParticleCloud
from .kde import GAUSSIAN, GaussianKernel, kde_log_density, kde_sample

__all__ = ["PolicyState", "SafeDensity", "Schedules", "default_safe_density",
           "update_center"]

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class SafeDensity:
    """Isotropic multivariate Student-t, parameterized by per-coordinate
    scale (not standard deviation): density proportional to
    (1 + ||x - center||^2 / (dof * scale^2))^(-(dof + d)/2).

    Tails decay polynomially with order dof + d. For dof > 2 the covariance
    is scale^2 * dof / (dof - 2) * I.
    """

    center: np.ndarray
    scale: float
    dof: float = 3.0

    def __post_init__(self) -> None:
        center = np.asarray(self.center, dtype=float)
        if center.ndim != 1 or center.size == 0 or not np.all(np.isfinite(center)):
            raise ValueError("center must be a finite 1-D vector")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError("scale must be positive")
        if not (np.isfinite(self.dof) and self.dof > 0):
            raise ValueError("dof must be positive")
        d = center.size
        log_norm = (math.lgamma((self.dof + d) / 2.0)
                    - math.lgamma(self.dof / 2.0)
                    - 0.5 * d * math.log(self.dof * math.pi)
                    - d * math.log(self.scale))
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "_log_norm", log_norm)

    @property
    def dim(self) -> int:
        return self.center.size

    @classmethod
    def with_covariance(cls, dim: int, per_coord_var: float,
                        dof: float = 3.0,
                        center: Optional[np.ndarray] = None) -> "SafeDensity":
        """Student-t with covariance per_coord_var * I (requires dof > 2)."""
        if dof <= 2:
            raise ValueError("covariance parameterization needs dof > 2")
        if per_coord_var <= 0:
            raise ValueError("per-coordinate variance must be positive")
        scale = math.sqrt(per_coord_var * (dof - 2.0) / dof)
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        return cls(center=c, scale=scale, dof=dof)

    def covariance_per_coord(self) -> float:
        if self.dof <= 2:
            return math.inf
        return self.scale ** 2 * self.dof / (self.dof - 2.0)

    def log_density(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.dim:
            raise ValueError("point dimension does not match density")
        z = (pts - self.center[None, :]) / self.scale
        q = (z * z).sum(axis=1)
        out = (self._log_norm
               - 0.5 * (self.dof + self.dim) * np.log1p(q / self.dof))
        return float(out[0]) if single else out

    def sample(self, rng: np.random.Generator,
               size: Optional[int] = None) -> np.ndarray:
        """Gaussian draw divided by an independent chi draw (classic t
        representation). Consumes the generator as: normals, then chi-square."""
        n = 1 if size is None else int(size)
        z = rng.standard_normal((n, self.dim))
        chi2 = rng.chisquare(self.dof, n)
        draws = self.center[None, :] + self.scale * z * np.sqrt(self.dof / chi2)[:, None]
        return draws[0] if size is None else draws


def default_safe_density(dim: int, cov_scale: float = 5.0,
                         dof: float = 3.0) -> SafeDensity:
    """Safe density with covariance (cov_scale / d) * I centered at zero.

    The 1/d scaling keeps the expected squared radius of safe draws at
    cov_scale regardless of dimension, so cold starts explore the same
    radius-5ish shell in every d.
    """
    return SafeDensity.with_covariance(dim, cov_scale / dim, dof=dof)


@dataclasses.dataclass(frozen=True)
class PolicyState:
    """One stage's sampling policy: mixture of a weighted KDE over a support
    set and a safe density, with mixing weight lam on the safe component.

    lam = 1 is pure safe sampling and is the only state allowed to omit the
    KDE support (bandwidth may then be None as well).
    """

    lam: float
    bandwidth: Optional[float]
    support_positions: Optional[np.ndarray]
    support_weights: Optional[np.ndarray]
    safe: SafeDensity
    kernel: GaussianKernel = GAUSSIAN

    def __post_init__(self) -> None:
        if not (0.0 < self.lam <= 1.0):
            raise ValueError("lam must lie in (0, 1]")
        if self.support_positions is None or self.support_weights is None:
            if self.lam != 1.0:
                raise ValueError("a policy without KDE support must have lam == 1")
            object.__setattr__(self, "support_positions", None)
            object.__setattr__(self, "support_weights", None)
            return
        pos = np.atleast_2d(np.asarray(self.support_positions, dtype=float))
        wts = np.asarray(self.support_weights, dtype=float)
        if pos.shape[0] == 0:
            raise ValueError("support must be nonempty")
        if pos.shape[1] != self.safe.dim:
            raise ValueError("support dimension does not match safe density")
        if wts.shape != (pos.shape[0],):
            raise ValueError("support weights length must match positions")
        if np.any(wts < 0) or abs(wts.sum() - 1.0) > 1e-8:
            raise ValueError("support weights must be nonnegative and sum to 1")
        if self.bandwidth is None or not self.bandwidth > 0:
            raise ValueError("a policy with KDE support needs a positive bandwidth")
        object.__setattr__(self, "support_positions", pos)
        object.__setattr__(self, "support_weights", wts)

    @property
    def dim(self) -> int:
        return self.safe.dim

    @property
    def support_size(self) -> int:
        return 0 if self.support_positions is None else self.support_positions.shape[0]

    def eval_cost(self, n_points: int) -> int:
        """Kernel evaluations charged for scoring n_points under the policy."""
        if self.lam == 1.0 or self.support_positions is None:
            return 0
        return n_points * self.support_size

    def log_density(self, x: np.ndarray):
        """Log policy density, exact mixture in log domain.

        With lam == 1 this is exactly the safe density's value; the KDE
        branch is skipped entirely rather than multiplied by zero.
        """
        if self.lam == 1.0 or self.support_positions is None:
            return self.safe.log_density(x)
        log_kde = kde_log_density(x, self.support_positions,
                                  self.support_weights, self.bandwidth,
                                  kernel=self.kernel)
        log_safe = self.safe.log_density(x)
        return np.logaddexp(math.log1p(-self.lam) + log_kde,
                            math.log(self.lam) + log_safe)

    def sample(self, rng: np.random.Generator,
               size: Optional[int] = None) -> np.ndarray:
        """Draw from the mixture.

        Generator consumption order is fixed (component mask, then safe
        draws, then KDE draws) so runs are reproducible for a given seed.
        """
        n = 1 if size is None else int(size)
        take_safe = rng.random(n) < self.lam
        n_safe = int(take_safe.sum())
        out = np.empty((n, self.dim))
        if n_safe:
            out[take_safe] = self.safe.sample(rng, n_safe)
        n_kde = n - n_safe
        if n_kde:
            out[~take_safe] = kde_sample(self.support_positions,
                                         self.support_weights, self.bandwidth,
                                         rng, size=n_kde, kernel=self.kernel)
        return out[0] if size is None else out


def update_center(policy: PolicyState, cloud: ParticleCloud) -> PolicyState:
    """Recenter the safe component on the cloud's weighted mean.

    A degenerate cloud (all weights zero) leaves the policy unchanged with a
    warning instead of raising; mid-run that is a recoverable condition as
    long as the next stage's draws revive the weights.
    """
    try:
        mean = cloud.weighted_mean()
    except (DegenerateCloudError, ValueError) as exc:
        logger.warning("keeping previous safe center: %s", exc)
        return policy
    safe = dataclasses.replace(policy.safe, center=mean)
    return dataclasses.replace(policy, safe=safe)


@dataclasses.dataclass(frozen=True)
class Schedules:
    """Stage schedules for bandwidth, safe-mixture weight, and (optionally)
    bootstrap support size.

    Stages are numbered 0..total_stages-1; stage 0 always samples the pure
    safe density, so the schedule functions are defined for t in
    1..total_stages-1. With batch size m and warm-start count n0 the
    bandwidth decays like (1 + mt/n0)^(-1/(4+d)) from a base of 0.4/sqrt(d),
    and the safe weight like 0.25 * (1 + mt/n0)^(-1/(4+d)) once the burn-in
    has finished. When a subsample exponent delta is set, the KDE support at
    stage t is a bootstrap of size ell_t = 10 * floor((n0 + mt)^delta)
    (clamped to the cloud size), and both decays are driven by ell_t instead
    of mt -- with the safe weight using the squared exponent -2/(4+d).

    Burn-in: stages 1..burn_in_stages/2-1 use lam = 1, the rest of the
    burn-in uses lam = 0.5. lambda_const overrides the whole lam schedule
    with a fixed value. burn_in_stages < 0 disables burn-in handling (no
    weight regularization either).
    """

    total_stages: int
    batch_size: int
    dim: int
    n0: int = 10_000
    burn_in_stages: int = 20
    eta: float = 0.75
    delta: Optional[float] = None
    lambda_const: Optional[float] = None

    def __post_init__(self) -> None:
        if self.total_stages < 1:
            raise ValueError("need at least one stage")
        if self.batch_size < 1:
            raise ValueError("batch size must be positive")
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.n0 < 1:
            raise ValueError("warm-start count must be positive")
        if self.burn_in_stages >= self.total_stages:
            raise ValueError("burn-in must end before the last stage")
        if not (0.0 < self.eta <= 1.0):
            raise ValueError("eta must lie in (0, 1]")
        if self.delta is not None and not (0.0 < self.delta <= 0.5):
            raise ValueError("delta must lie in (0, 0.5]")
        if self.lambda_const is not None and not (0.0 < self.lambda_const <= 1.0):
            raise ValueError("lambda_const must lie in (0, 1]")

    @property
    def subsampling(self) -> bool:
        return self.delta is not None

    def _check_stage(self, t: int) -> None:
        if not (1 <= t <= self.total_stages - 1):
            raise ValueError(
                f"stage {t} outside schedule range 1..{self.total_stages - 1}")

    def _growth(self, t: int) -> float:
        """The (1 + budget/n0) growth factor driving both decays."""
        budget = self.subsample_size(t) if self.subsampling else self.batch_size * t
        return 1.0 + budget / self.n0

    def bandwidth(self, t: int) -> float:
        self._check_stage(t)
        base = 0.4 / math.sqrt(self.dim)
        return base * self._growth(t) ** (-1.0 / (4.0 + self.dim))

    def lam(self, t: int) -> float:
        self._check_stage(t)
        if self.lambda_const is not None:
            return self.lambda_const
        if 0 <= t < self.burn_in_stages:
            return 1.0 if t < self.burn_in_stages // 2 else 0.5
        power = -2.0 if self.subsampling else -1.0
        return 0.25 * self._growth(t) ** (power / (4.0 + self.dim))

    def subsample_size(self, t: int) -> int:
        self._check_stage(t)
        if self.delta is None:
            raise ValueError("schedule has no subsample exponent")
        raw = 10 * math.floor((self.n0 + self.batch_size * t) ** self.delta)
        return min(raw, self.batch_size * t)
