"""Benchmark harness: config-driven replicated runs, CSV results, summaries.

A benchmark is a grid of (method, budget, replicate) cells over one target.
Every cell gets a seed derived deterministically from the base seed and its
grid position, so results are reproducible cell-by-cell regardless of
execution order or worker count, and any single cell can be re-run in
isolation for debugging.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import json
import math
import time
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .algorithms import RunResult, run_standard_sais, run_subsampling_sais
from .baselines import run_amh, run_rwmh
from .diagnostics import mse_metric
from .policy import Schedules, default_safe_density
from .targets import Target, cold_start_target, gaussian_mixture_target
from .util import mix_seed

__all__ = ["CSV_HEADER", "SUMMARY_HEADER", "CellResult", "ConfigError",
           "ExperimentConfig", "SummaryRow", "cell_seed", "read_csv",
           "read_summary", "run_cell", "run_experiment", "summarize",
           "write_csv", "write_summary"]


class ConfigError(ValueError):
    """Invalid benchmark configuration."""


TARGETS = {
    "gaussian-mixture": gaussian_mixture_target,
    "cold-start": cold_start_target,
}

#: subsample exponent per method; None means full-support KDE
SAIS_METHODS: Dict[str, Optional[float]] = {
    "sais": None,
    "sais-sub2": 0.5,
    "sais-sub4": 0.25,
}

MCMC_METHODS = ("mh", "amh")

RNG_FAMILIES = {
    "pcg64": np.random.PCG64,
    "philox": np.random.Philox,
}

CSV_HEADER = ["method", "target", "d", "budget", "replicate", "seed",
              "sq_error", "wall_time_ns", "op_count", "ess_final", "error"]

SUMMARY_HEADER = ["method", "target", "d", "budget", "n_used",
                  "median_log10_sq_error", "median_op_count",
                  "median_wall_time_ns"]


@dataclasses.dataclass
class ExperimentConfig:
    """One benchmark grid. See configs/ for ready-to-run examples."""

    target: str
    dim: int
    methods: List[str]
    budgets: List[int]
    replicates: int = 50
    base_seed: int = 0
    rng: str = "pcg64"
    mu_start: Optional[List[float]] = None
    schedules: Dict[str, float] = dataclasses.field(default_factory=dict)
    safe: Dict[str, float] = dataclasses.field(default_factory=dict)
    amh: Dict[str, float] = dataclasses.field(default_factory=dict)
    #: chain states discarded before the MCMC point estimate; defaults to
    #: the adaptation start so both baselines discard the same prefix
    mcmc_burn_in: Optional[int] = None
    exclude_burn_in: bool = False

    _SCHEDULE_KEYS = {"batch_size", "n0", "burn_in_stages", "eta",
                      "lambda_const"}
    _SAFE_KEYS = {"dof", "cov_scale"}
    _AMH_KEYS = {"adapt_start", "ridge", "jump_scale"}

    @classmethod
    def from_json(cls, source: Union[str, dict]) -> "ExperimentConfig":
        """Build from a JSON file path or an already-parsed dict."""
        if isinstance(source, dict):
            raw = dict(source)
        else:
            try:
                with open(source, "r", encoding="utf-8") as fh:
                    raw = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {source!r}: {exc}") from exc
            if not isinstance(raw, dict):
                raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"target", "dim", "methods", "budgets"} - set(raw)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        config = cls(**raw)
        config.validate()
        return config

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self) -> None:
        if self.target not in TARGETS:
            raise ConfigError(f"unknown target {self.target!r}; "
                              f"choose from {sorted(TARGETS)}")
        if not (isinstance(self.dim, int) and self.dim >= 1):
            raise ConfigError("dim must be a positive integer")
        if not self.methods:
            raise ConfigError("at least one method is required")
        for name in self.methods:
            if name not in SAIS_METHODS and name not in MCMC_METHODS:
                raise ConfigError(
                    f"unknown method {name!r}; choose from "
                    f"{sorted(SAIS_METHODS) + list(MCMC_METHODS)}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("duplicate method names")
        if not self.budgets:
            raise ConfigError("at least one budget is required")
        for b in self.budgets:
            if not (isinstance(b, int) and b >= 1):
                raise ConfigError("budgets must be positive integers")
        if self.replicates < 1:
            raise ConfigError("replicates must be positive")
        if self.rng not in RNG_FAMILIES:
            raise ConfigError(f"unknown rng family {self.rng!r}; "
                              f"choose from {sorted(RNG_FAMILIES)}")
        if self.mu_start is not None and len(self.mu_start) != self.dim:
            raise ConfigError("mu_start length must equal dim")
        for name, keys in (("schedules", self._SCHEDULE_KEYS),
                           ("safe", self._SAFE_KEYS),
                           ("amh", self._AMH_KEYS)):
            extra = set(getattr(self, name)) - keys
            if extra:
                raise ConfigError(f"unknown {name} keys: {sorted(extra)}")
        if self.mcmc_burn_in is not None and self.mcmc_burn_in < 0:
            raise ConfigError("mcmc_burn_in must be nonnegative")
        uses_sais = any(m in SAIS_METHODS for m in self.methods)
        uses_mcmc = any(m in MCMC_METHODS for m in self.methods)
        if uses_sais:
            m = int(self.schedules.get("batch_size", 1000))
            burn = int(self.schedules.get("burn_in_stages", 20))
            for b in self.budgets:
                if b % m:
                    raise ConfigError(
                        f"budget {b} is not a multiple of batch size {m}")
                if b // m <= max(burn, 0):
                    raise ConfigError(
                        f"budget {b} gives {b // m} stages, not past the "
                        f"{burn}-stage burn-in")
        if uses_mcmc:
            discard = self.effective_mcmc_burn_in()
            for b in self.budgets:
                if b <= discard:
                    raise ConfigError(
                        f"budget {b} does not exceed the MCMC burn-in "
                        f"{discard}")

    def effective_mcmc_burn_in(self) -> int:
        if self.mcmc_burn_in is not None:
            return self.mcmc_burn_in
        return int(self.amh.get("adapt_start", 10_000))


@dataclasses.dataclass(frozen=True)
class CellResult:
    method: str
    target: str
    d: int
    budget: int
    replicate: int
    seed: int
    sq_error: float
    wall_time_ns: int
    op_count: int
    ess_final: float
    error: str = ""


@dataclasses.dataclass(frozen=True)
class SummaryRow:
    method: str
    target: str
    d: int
    budget: int
    n_used: int
    median_log10_sq_error: float
    median_op_count: int
    median_wall_time_ns: int


def cell_seed(base_seed: int, method_index: int, budget_index: int,
              replicate: int) -> int:
    """Deterministic 64-bit seed for one grid cell."""
    return mix_seed(base_seed, method_index, budget_index, replicate)


def _build_target(config: ExperimentConfig) -> Target:
    return TARGETS[config.target](config.dim)


def _make_schedules(config: ExperimentConfig, budget: int,
                    delta: Optional[float]) -> Schedules:
    sched = config.schedules
    m = int(sched.get("batch_size", 1000))
    return Schedules(total_stages=budget // m, batch_size=m, dim=config.dim,
                     n0=int(sched.get("n0", 10_000)),
                     burn_in_stages=int(sched.get("burn_in_stages", 20)),
                     eta=float(sched.get("eta", 0.75)),
                     delta=delta,
                     lambda_const=sched.get("lambda_const"))


def _sais_estimate(result: RunResult, exclude_burn_in: bool) -> np.ndarray:
    if not exclude_burn_in or result.burn_in_particles == 0:
        return result.final_estimate
    skip = result.burn_in_particles
    log_w = result.cloud.log_weights[skip:]
    positions = result.cloud.positions[skip:]
    if log_w.size == 0:
        return result.final_estimate
    shifted = np.exp(log_w - log_w.max())
    return (shifted @ positions) / shifted.sum()


def run_cell(config: ExperimentConfig, method: str, budget: int,
             replicate: int, seed: int) -> CellResult:
    """Run one (method, budget, replicate) cell. Exceptions are captured in
    the result's error field rather than raised."""
    target = _build_target(config)
    base = dict(method=method, target=config.target, d=config.dim,
                budget=budget, replicate=replicate, seed=seed)
    try:
        rng = np.random.Generator(RNG_FAMILIES[config.rng](seed))
        mu_start = (np.zeros(config.dim) if config.mu_start is None
                    else np.asarray(config.mu_start, dtype=float))
        if method in SAIS_METHODS:
            schedules = _make_schedules(config, budget, SAIS_METHODS[method])
            safe = default_safe_density(
                config.dim,
                cov_scale=float(config.safe.get("cov_scale", 5.0)),
                dof=float(config.safe.get("dof", 3.0)))
            runner = (run_subsampling_sais if schedules.subsampling
                      else run_standard_sais)
            result = runner(target, schedules, safe, mu_start, rng)
            estimate = _sais_estimate(result, config.exclude_burn_in)
            return CellResult(**base,
                              sq_error=mse_metric(estimate, target),
                              wall_time_ns=result.wall_time_ns,
                              op_count=result.op_count,
                              ess_final=result.final_ess)
        started = time.perf_counter_ns()
        if method == "mh":
            chain = run_rwmh(target, budget, mu_start, rng)
        else:
            amh = config.amh
            chain = run_amh(target, budget, mu_start, rng,
                            adapt_start=int(amh.get("adapt_start", 10_000)),
                            jump_scale=amh.get("jump_scale"),
                            ridge=float(amh.get("ridge", 1e-6)))
        wall = time.perf_counter_ns() - started
        estimate = chain[config.effective_mcmc_burn_in():].mean(axis=0)
        return CellResult(**base, sq_error=mse_metric(estimate, target),
                          wall_time_ns=wall, op_count=budget,
                          ess_final=math.nan)
    except Exception as exc:  # noqa: BLE001 -- cell isolation is the point
        return CellResult(**base, sq_error=math.nan, wall_time_ns=0,
                          op_count=0, ess_final=math.nan, error=str(exc))


def _cell_args(config: ExperimentConfig):
    for mi, method in enumerate(config.methods):
        for bi, budget in enumerate(config.budgets):
            for rep in range(config.replicates):
                yield (method, budget, rep,
                       cell_seed(config.base_seed, mi, bi, rep))


def _run_cell_packed(packed) -> CellResult:
    config_dict, method, budget, rep, seed = packed
    return run_cell(ExperimentConfig(**config_dict), method, budget, rep, seed)


def run_experiment(config: ExperimentConfig, jobs: int = 1,
                   out_path: Optional[str] = None,
                   progress: Optional[callable] = None) -> List[CellResult]:
    """Run the whole grid; returns results in grid order.

    jobs > 1 distributes cells over worker processes. progress, if given,
    is called with each finished CellResult (completion order).
    """
    config.validate()
    args = list(_cell_args(config))
    if jobs <= 1:
        rows = []
        for method, budget, rep, seed in args:
            row = run_cell(config, method, budget, rep, seed)
            if progress is not None:
                progress(row)
            rows.append(row)
    else:
        packed = [(config.to_dict(), *a) for a in args]
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_cell_packed, p) for p in packed]
            for fut in concurrent.futures.as_completed(futures):
                if progress is not None:
                    progress(fut.result())
            rows = [f.result() for f in futures]
    if out_path is not None:
        write_csv(rows, out_path)
    return rows


def _format(value) -> str:
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def write_csv(rows: Sequence[CellResult], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([_format(getattr(row, name))
                             for name in CSV_HEADER])


def read_csv(path: str) -> List[CellResult]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(CSV_HEADER):
                raise ValueError(f"{path} line {lineno}: expected "
                                 f"{len(CSV_HEADER)} fields, got {len(record)}")
            try:
                rows.append(CellResult(
                    method=record[0], target=record[1], d=int(record[2]),
                    budget=int(record[3]), replicate=int(record[4]),
                    seed=int(record[5]),
                    sq_error=float(record[6]) if record[6] else math.nan,
                    wall_time_ns=int(record[7]), op_count=int(record[8]),
                    ess_final=float(record[9]) if record[9] else math.nan,
                    error=record[10]))
            except ValueError as exc:
                raise ValueError(f"{path} line {lineno}: {exc}") from exc
    return rows


def summarize(rows: Sequence[CellResult]) -> List[SummaryRow]:
    """Per-(method, target, d, budget) medians over non-failed replicates."""
    groups: Dict[tuple, List[CellResult]] = {}
    for row in rows:
        groups.setdefault((row.method, row.target, row.d, row.budget),
                          []).append(row)
    out = []
    for key in sorted(groups):
        used = [r for r in groups[key]
                if not r.error and not math.isnan(r.sq_error)]
        if not used:
            continue
        with np.errstate(divide="ignore"):
            logs = np.log10([r.sq_error for r in used])
        out.append(SummaryRow(
            method=key[0], target=key[1], d=key[2], budget=key[3],
            n_used=len(used),
            median_log10_sq_error=float(np.median(logs)),
            median_op_count=int(np.median([r.op_count for r in used])),
            median_wall_time_ns=int(np.median([r.wall_time_ns for r in used]))))
    return out


def write_summary(rows: Sequence[SummaryRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        for row in rows:
            writer.writerow([_format(getattr(row, name))
                             for name in SUMMARY_HEADER])


def read_summary(path: str) -> List[SummaryRow]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SUMMARY_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(SUMMARY_HEADER):
                raise ValueError(f"{path} line {lineno}: expected "
                                 f"{len(SUMMARY_HEADER)} fields")
            try:
                rows.append(SummaryRow(
                    method=record[0], target=record[1], d=int(record[2]),
                    budget=int(record[3]), n_used=int(record[4]),
                    median_log10_sq_error=float(record[5]),
                    median_op_count=int(record[6]),
                    median_wall_time_ns=int(record[7])))
            except ValueError as exc:
                raise ValueError(f"{path} line {lineno}: {exc}") from exc
    return rows
