"""Fast end-to-end sanity checks, runnable from the CLI on any install.

Each check is small enough to finish in well under a second; together they
exercise the weight bookkeeping, the KDE fast path, the resampler, the
schedules, the mixture policy, and one miniature adaptive run.
"""

from __future__ import annotations

import math
from typing import Callable, List, Tuple

import numpy as np

from .cloud import ParticleCloud
from .kde import GAUSSIAN, kde_log_density
from .policy import PolicyState, Schedules, default_safe_density
from .resample import bisect_right_counting, multinomial_draw, search_cost
from .algorithms import run_standard_sais
from .targets import gaussian_mixture_target

__all__ = ["run_selftest"]


def _cloud_normalization() -> None:
    rng = np.random.default_rng(11)
    cloud = ParticleCloud(3)
    cloud.extend(rng.standard_normal((500, 3)),
                 rng.standard_normal(500) * 30.0 + 1e4)
    w = cloud.normalized_weights()
    assert abs(w.sum() - 1.0) < 1e-12, f"weights sum to {w.sum()!r}"
    assert np.all(w >= 0)
    ess = cloud.effective_sample_size()
    assert 1.0 <= ess <= 500.0, f"ESS {ess} outside [1, n]"


def _kde_matches_direct() -> None:
    rng = np.random.default_rng(12)
    centers = rng.standard_normal((40, 2))
    weights = rng.random(40)
    weights /= weights.sum()
    x = rng.standard_normal((7, 2))
    h = 0.3
    fast = kde_log_density(x, centers, weights, h)
    diff = (x[:, None, :] - centers[None, :, :]) / h
    direct = GAUSSIAN.log_k(diff) + np.log(weights)[None, :] - 2 * math.log(h)
    expected = np.logaddexp.reduce(direct, axis=1)
    assert np.allclose(fast, expected, atol=1e-10), "KDE fast path mismatch"


def _kde_integrates() -> None:
    rng = np.random.default_rng(13)
    centers = rng.standard_normal((30, 1))
    weights = rng.random(30)
    weights /= weights.sum()
    grid = np.linspace(-12, 12, 4001)[:, None]
    vals = np.exp(kde_log_density(grid, centers, weights, 0.4))
    mass = np.trapezoid(vals, dx=grid[1, 0] - grid[0, 0])
    assert abs(mass - 1.0) < 1e-4, f"KDE mass {mass}"


def _search_agrees() -> None:
    rng = np.random.default_rng(14)
    cum = np.cumsum(rng.random(257))
    for u in rng.random(200) * cum[-1]:
        idx, comps = bisect_right_counting(cum, u)
        assert idx == np.searchsorted(cum, u, side="right")
        assert comps <= search_cost(len(cum)), "search exceeded its bound"


def _resampler_hits_weights() -> None:
    rng = np.random.default_rng(15)
    cloud = ParticleCloud(1)
    cloud.extend(np.arange(4.0)[:, None],
                 np.log(np.array([0.1, 0.2, 0.3, 0.4])))
    idx = multinomial_draw(cloud, 20_000, rng)
    freq = np.bincount(idx, minlength=4) / 20_000
    assert np.all(np.abs(freq - [0.1, 0.2, 0.3, 0.4]) < 0.02), freq


def _schedules_monotone() -> None:
    sched = Schedules(total_stages=60, batch_size=500, dim=3)
    hs = [sched.bandwidth(t) for t in range(1, 60)]
    lams = [sched.lam(t) for t in range(sched.burn_in_stages, 60)]
    assert all(h > 0 for h in hs)
    assert all(a >= b for a, b in zip(hs, hs[1:])), "bandwidth not decaying"
    assert all(a >= b for a, b in zip(lams, lams[1:])), "lam not decaying"


def _policy_mixture() -> None:
    rng = np.random.default_rng(16)
    safe = default_safe_density(2)
    support = rng.standard_normal((25, 2))
    weights = np.full(25, 1.0 / 25)
    pure = PolicyState(lam=1.0, bandwidth=None, support_positions=None,
                       support_weights=None, safe=safe)
    x = np.array([0.3, -0.5])
    assert pure.log_density(x) == safe.log_density(x)
    mixed = PolicyState(lam=0.5, bandwidth=0.3, support_positions=support,
                        support_weights=weights, safe=safe)
    expected = np.logaddexp(
        math.log(0.5) + kde_log_density(x, support, weights, 0.3),
        math.log(0.5) + safe.log_density(x))
    assert abs(mixed.log_density(x) - expected) < 1e-12


def _tiny_run() -> None:
    target = gaussian_mixture_target(2)
    sched = Schedules(total_stages=6, batch_size=200, dim=2, n0=400,
                      burn_in_stages=2)
    result = run_standard_sais(target, sched,
                               rng=np.random.default_rng(17))
    assert result.estimate_trace.shape == (6, 2)
    assert np.all(np.isfinite(result.estimate_trace))
    assert result.op_count > 0
    ops = [r.op_count for r in result.stage_records]
    assert ops == sorted(ops), "op counts must be cumulative"
    assert 1.0 <= result.final_ess <= 1200.0


_CHECKS: List[Tuple[str, Callable[[], None]]] = [
    ("cloud weight normalization under extreme offsets", _cloud_normalization),
    ("KDE fast path matches direct log-sum-exp", _kde_matches_direct),
    ("KDE integrates to one", _kde_integrates),
    ("binary search agrees with searchsorted within cost bound", _search_agrees),
    ("multinomial resampler matches weights", _resampler_hits_weights),
    ("schedules decay monotonically", _schedules_monotone),
    ("mixture policy density composes correctly", _policy_mixture),
    ("miniature adaptive run is sane", _tiny_run),
]


def run_selftest(verbose: bool = True) -> int:
    """Run all checks; returns the number of failures."""
    failures = 0
    for name, check in _CHECKS:
        try:
            check()
        except Exception as exc:  # noqa: BLE001 -- reported, not raised
            failures += 1
            if verbose:
                print(f"FAIL - {name}: {exc}")
        else:
            if verbose:
                print(f"ok   - {name}")
    if verbose:
        total = len(_CHECKS)
        print(f"{total - failures}/{total} checks passed")
    return failures
