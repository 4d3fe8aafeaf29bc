"""Markov chain Monte Carlo baselines.

Both samplers return the full chain (rejections appear as repeated states)
so downstream estimates can choose their own burn-in. Proposal noise and
acceptance uniforms are pre-drawn in fixed blocks, which pins the generator
consumption order and keeps runs reproducible for a given seed.
"""

from __future__ import annotations

import math
from typing import Optional, Union

import numpy as np

from .targets import Target

__all__ = ["RunningCovariance", "run_amh", "run_rwmh"]


class RunningCovariance:
    """Streaming mean and covariance (Welford update, n-1 denominator)."""

    def __init__(self, dim: int) -> None:
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = dim
        self.count = 0
        self._mean = np.zeros(dim)
        self._m2 = np.zeros((dim, dim))

    def update(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError("sample has wrong dimension")
        self.count += 1
        delta = x - self._mean
        self._mean += delta / self.count
        self._m2 += np.outer(delta, x - self._mean)

    @property
    def mean(self) -> np.ndarray:
        return self._mean.copy()

    def covariance(self) -> np.ndarray:
        if self.count < 2:
            raise ValueError("need at least two samples for a covariance")
        return self._m2 / (self.count - 1)


def _start_value(target: Target, x0: np.ndarray) -> float:
    logf = float(target.log_density_unnorm(x0))
    if not math.isfinite(logf):
        raise ValueError("chain start has zero or invalid target density")
    return logf


def _proposal_sd(target: Target,
                 proposal_var: Union[float, np.ndarray, None]) -> np.ndarray:
    if proposal_var is None:
        proposal_var = 0.4 / target.dim
    var = np.broadcast_to(np.asarray(proposal_var, dtype=float),
                          (target.dim,)).copy()
    if np.any(var <= 0) or not np.all(np.isfinite(var)):
        raise ValueError("proposal variance must be positive and finite")
    return np.sqrt(var)


def run_rwmh(target: Target, n_steps: int, x0: np.ndarray,
             rng: np.random.Generator,
             proposal_var: Union[float, np.ndarray, None] = None
             ) -> np.ndarray:
    """Random-walk Metropolis with fixed diagonal Gaussian proposal.

    proposal_var is the per-coordinate proposal variance (scalar or length-d
    vector); the default 0.4/d matches the spread of the synthetic targets.
    Returns the chain after the start point, shape (n_steps, d).
    """
    if n_steps < 1:
        raise ValueError("need at least one step")
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (target.dim,):
        raise ValueError("x0 must be a vector of target dimension")
    logf_x = _start_value(target, x)
    sd = _proposal_sd(target, proposal_var)
    noise = rng.standard_normal((n_steps, target.dim))
    with np.errstate(divide="ignore"):
        log_u = np.log(rng.random(n_steps))
    chain = np.empty((n_steps, target.dim))
    for i in range(n_steps):
        y = x + sd * noise[i]
        logf_y = float(target.log_density_unnorm(y))
        if logf_y - logf_x > log_u[i]:
            x = y
            logf_x = logf_y
        chain[i] = x
    return chain


def run_amh(target: Target, n_steps: int, x0: np.ndarray,
            rng: np.random.Generator, adapt_start: int = 10_000,
            jump_scale: Optional[float] = None, ridge: float = 1e-6,
            proposal_var: Union[float, np.ndarray, None] = None
            ) -> np.ndarray:
    """Adaptive Metropolis: after adapt_start steps the proposal covariance
    becomes jump_scale * (running chain covariance) + ridge * I.

    The running covariance starts at the start point and is updated with
    every chain state, accepted or not. jump_scale defaults to the classic
    2.38^2 / d; before adaptation kicks in the proposal is the same fixed
    diagonal one the random-walk baseline uses.
    """
    if n_steps < 1:
        raise ValueError("need at least one step")
    if adapt_start < 2:
        raise ValueError("adaptation cannot start before two samples exist")
    x = np.asarray(x0, dtype=float).copy()
    d = target.dim
    if x.shape != (d,):
        raise ValueError("x0 must be a vector of target dimension")
    logf_x = _start_value(target, x)
    sd = _proposal_sd(target, proposal_var)
    if jump_scale is None:
        jump_scale = 2.38 ** 2 / d
    running = RunningCovariance(d)
    running.update(x)
    noise = rng.standard_normal((n_steps, d))
    with np.errstate(divide="ignore"):
        log_u = np.log(rng.random(n_steps))
    chain = np.empty((n_steps, d))
    eye = np.eye(d)
    chol = None
    for i in range(n_steps):
        if i >= adapt_start:
            chol = np.linalg.cholesky(
                jump_scale * running.covariance() + ridge * eye)
            y = x + chol @ noise[i]
        else:
            y = x + sd * noise[i]
        logf_y = float(target.log_density_unnorm(y))
        if logf_y - logf_x > log_u[i]:
            x = y
            logf_x = logf_y
        chain[i] = x
        running.update(x)
    return chain
