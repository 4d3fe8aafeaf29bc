"""Adaptive importance sampling drivers.

Both drivers run the same staged loop: draw a batch from the current policy,
weight it by target/policy, fold the batch into the particle cloud, and
rebuild the policy for the next stage around the cloud's weighted KDE. They
differ only in the KDE support: the standard driver keeps every particle,
the subsampling driver bootstraps a small weight-proportional support whose
size follows the schedule, trading a little variance for a large drop in
kernel evaluations.

Early stages regularize the stored log-weights by a factor eta < 1, which
flattens the weight distribution while the policy is still far from the
target; the burn-in length and eta come from the schedule.
"""

from __future__ import annotations

import dataclasses
import math
import time
from typing import Optional, Tuple

import numpy as np

from .cloud import ParticleCloud
from .kde import GAUSSIAN, GaussianKernel
from .policy import PolicyState, SafeDensity, Schedules, default_safe_density
from .resample import bootstrap_kde_support
from .targets import Target

__all__ = ["RunResult", "StageRecord", "run_standard_sais",
           "run_subsampling_sais"]


@dataclasses.dataclass(frozen=True)
class StageRecord:
    """Per-stage trace: the policy parameters used for the stage's draws and
    the cloud state after the batch was folded in. op_count is cumulative."""

    stage: int
    lam: float
    bandwidth: Optional[float]
    support_size: int
    center: np.ndarray
    ess: float
    op_count: int


@dataclasses.dataclass(frozen=True)
class RunResult:
    cloud: ParticleCloud
    stage_records: Tuple[StageRecord, ...]
    estimate_trace: np.ndarray
    op_count: int
    wall_time_ns: int
    burn_in_particles: int
    final_ess: float

    @property
    def final_estimate(self) -> np.ndarray:
        return self.estimate_trace[-1]


def run_standard_sais(target: Target, schedules: Schedules,
                      safe: Optional[SafeDensity] = None,
                      mu_start: Optional[np.ndarray] = None,
                      rng: Optional[np.random.Generator] = None,
                      *, adapt_center: bool = True,
                      kernel: GaussianKernel = GAUSSIAN) -> RunResult:
    """Staged adaptive importance sampling with full-cloud KDE support."""
    if schedules.subsampling:
        raise ValueError("schedule carries a subsample exponent; "
                         "use run_subsampling_sais")
    return _run(target, schedules, safe, mu_start, rng, adapt_center, kernel)


def run_subsampling_sais(target: Target, schedules: Schedules,
                         safe: Optional[SafeDensity] = None,
                         mu_start: Optional[np.ndarray] = None,
                         rng: Optional[np.random.Generator] = None,
                         *, adapt_center: bool = True,
                         kernel: GaussianKernel = GAUSSIAN) -> RunResult:
    """Staged adaptive importance sampling with bootstrapped KDE support."""
    if not schedules.subsampling:
        raise ValueError("schedule has no subsample exponent; "
                         "use run_standard_sais")
    return _run(target, schedules, safe, mu_start, rng, adapt_center, kernel)


def _score_batch(target: Target, batch: np.ndarray) -> np.ndarray:
    logf = np.asarray(target.log_density_unnorm(batch), dtype=float)
    bad = np.isnan(logf) | (logf == np.inf)
    if np.any(bad):
        where = batch[np.argmax(bad)]
        raise ValueError(
            f"target log-density returned NaN or +inf at {where!r}")
    return logf


def _run(target, schedules, safe, mu_start, rng, adapt_center, kernel):
    if schedules.dim != target.dim:
        raise ValueError("schedule dimension does not match target")
    if safe is None:
        safe = default_safe_density(target.dim)
    if safe.dim != target.dim:
        raise ValueError("safe density dimension does not match target")
    if rng is None:
        rng = np.random.default_rng()
    mu0 = (np.zeros(target.dim) if mu_start is None
           else np.asarray(mu_start, dtype=float))
    if mu0.shape != (target.dim,) or not np.all(np.isfinite(mu0)):
        raise ValueError("mu_start must be a finite vector of target dimension")

    m = schedules.batch_size
    total = schedules.total_stages
    burn = schedules.burn_in_stages
    cloud = ParticleCloud(target.dim)
    policy = PolicyState(lam=1.0, bandwidth=None, support_positions=None,
                         support_weights=None,
                         safe=dataclasses.replace(safe, center=mu0),
                         kernel=kernel)
    trace = np.empty((total, target.dim))
    records = []
    op_count = 0
    started = time.perf_counter_ns()

    for t in range(total):
        batch = policy.sample(rng, m)
        log_q = np.asarray(policy.log_density(batch), dtype=float)
        op_count += policy.eval_cost(m)
        log_w = _score_batch(target, batch) - log_q
        if 0 <= t <= burn:
            log_w = schedules.eta * log_w
        cloud.extend(batch, log_w)
        estimate = cloud.weighted_mean()
        trace[t] = estimate
        ess = cloud.effective_sample_size()
        records.append(StageRecord(stage=t, lam=policy.lam,
                                   bandwidth=policy.bandwidth,
                                   support_size=policy.support_size,
                                   center=policy.safe.center.copy(),
                                   ess=ess, op_count=op_count))
        if t == total - 1:
            break
        step = t + 1
        center = estimate if adapt_center else mu0
        if schedules.subsampling:
            ell = schedules.subsample_size(step)
            positions, weights = bootstrap_kde_support(cloud, ell, rng)
            op_count += ell * max(1, math.ceil(math.log2(len(cloud))))
        else:
            positions = cloud.positions
            weights = cloud.normalized_weights()
        policy = PolicyState(lam=schedules.lam(step),
                             bandwidth=schedules.bandwidth(step),
                             support_positions=positions,
                             support_weights=weights,
                             safe=dataclasses.replace(safe, center=np.asarray(center, dtype=float)),
                             kernel=kernel)

    wall = time.perf_counter_ns() - started
    burn_particles = m * (min(burn, total - 1) + 1) if burn >= 0 else 0
    return RunResult(cloud=cloud, stage_records=tuple(records),
                     estimate_trace=trace, op_count=op_count,
                     wall_time_ns=wall, burn_in_particles=burn_particles,
                     final_ess=cloud.effective_sample_size())
