"""
Disorder-averaged measurement campaigns.

Two protocols are supported:
    fixed-starts   a fixed number of restarts per disorder realization
    fixed-budget   restarts until a per-realization flip budget is spent

Both report the mean relaxation time tau (mean flips per completed run)
and H_N, the disorder average of the best energy per spin found on each
realization. Scaling exponents come from a least-squares fit of
log10(tau) against log10(N).

Seeds are derived with numpy's SeedSequence from the master seed and the
coordinates of each realization and restart, so every cell can be re-run
on its own and results do not depend on the number of workers.
"""

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from multiprocessing import Pool
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats as scipy_stats

from .dynamics import LambdaParam, default_max_flips, random_config, run_trajectory
from .errors import InvalidArgumentError
from .sk_model import SEED_MAX, CouplingMatrix, generate_couplings

logger = logging.getLogger(__name__)

InstanceSource = Callable[[int, int], CouplingMatrix]

# Spawn-key domains for derive_seed
_INSTANCE_DOMAIN = 0
_TRAJECTORY_DOMAIN = 1


# ============================================================
# DOMAIN TYPES
# ============================================================

class Protocol(str, Enum):
    FIXED_STARTS = "fixed-starts"
    FIXED_BUDGET = "fixed-budget"


@dataclass
class ExperimentConfig:
    """Everything that determines the numbers a campaign produces."""

    protocol: Protocol = Protocol.FIXED_STARTS
    sizes: List[int] = field(default_factory=lambda: [25, 50, 100])
    lambdas: List[float] = field(default_factory=lambda: [1.0, 10.0, 100.0])
    nreal: int = 50
    starts_per_realization: Union[int, str] = "N"
    flip_budget: Optional[int] = None
    master_seed: int = 0
    exclude_sizes_from_fit: List[int] = field(default_factory=list)
    max_flips: Optional[int] = None
    budget_seconds: Optional[float] = None

    def __post_init__(self):
        self.protocol = Protocol(self.protocol)

    def validate(self) -> "ExperimentConfig":
        """Check invariants; raises InvalidArgumentError naming the field."""
        if not self.sizes:
            raise InvalidArgumentError("sizes: must not be empty")
        if any(n < 1 for n in self.sizes):
            raise InvalidArgumentError(f"sizes: every size must be >= 1, got {self.sizes}")
        if not self.lambdas:
            raise InvalidArgumentError("lambdas: must not be empty")
        for lam in self.lambdas:
            if not (math.isfinite(lam) and lam > 0):
                raise InvalidArgumentError(f"lambdas: lambda must be positive and finite, got {lam}")
        if self.nreal < 1:
            raise InvalidArgumentError(f"nreal: must be >= 1, got {self.nreal}")
        if isinstance(self.starts_per_realization, str):
            if self.starts_per_realization != "N":
                raise InvalidArgumentError(
                    f"starts_per_realization: must be a positive integer or 'N', got {self.starts_per_realization!r}"
                )
        elif self.starts_per_realization < 1:
            raise InvalidArgumentError(f"starts_per_realization: must be >= 1, got {self.starts_per_realization}")
        if self.protocol is Protocol.FIXED_BUDGET:
            if self.flip_budget is None and self.budget_seconds is None:
                raise InvalidArgumentError("flip_budget: required by the fixed-budget protocol")
            if self.flip_budget is not None and self.flip_budget < 1:
                raise InvalidArgumentError(f"flip_budget: must be >= 1, got {self.flip_budget}")
            if self.budget_seconds is not None and self.budget_seconds <= 0:
                raise InvalidArgumentError(f"budget_seconds: must be positive, got {self.budget_seconds}")
        if any(n < 1 for n in self.exclude_sizes_from_fit):
            raise InvalidArgumentError("exclude_sizes_from_fit: every size must be >= 1")
        if self.max_flips is not None and self.max_flips < 1:
            raise InvalidArgumentError(f"max_flips: must be >= 1, got {self.max_flips}")
        if not 0 <= self.master_seed < SEED_MAX:
            raise InvalidArgumentError(f"master_seed: must be a 64-bit unsigned integer, got {self.master_seed}")
        return self

    def starts_for(self, n: int) -> int:
        return n if self.starts_per_realization == "N" else int(self.starts_per_realization)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["protocol"] = self.protocol.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        starts = data.get("starts_per_realization", "N")
        return cls(
            protocol=Protocol(data.get("protocol", Protocol.FIXED_STARTS.value)),
            sizes=[_as_int(n, "sizes") for n in data.get("sizes", [25, 50, 100])],
            lambdas=[float(lam) for lam in data.get("lambdas", [1.0, 10.0, 100.0])],
            nreal=_as_int(data.get("nreal", 50), "nreal"),
            starts_per_realization=starts if isinstance(starts, str) else _as_int(starts, "starts_per_realization"),
            flip_budget=_as_int(data["flip_budget"], "flip_budget") if data.get("flip_budget") is not None else None,
            master_seed=_as_int(data.get("master_seed", 0), "master_seed"),
            exclude_sizes_from_fit=[_as_int(n, "exclude_sizes_from_fit") for n in data.get("exclude_sizes_from_fit", [])],
            max_flips=_as_int(data["max_flips"], "max_flips") if data.get("max_flips") is not None else None,
            budget_seconds=float(data["budget_seconds"]) if data.get("budget_seconds") is not None else None,
        )


@dataclass
class EnergyStats:
    """Aggregated measurements for one (protocol, n, lambda) cell."""

    protocol: Protocol
    n: int
    lam: float
    nreal: int
    starts_or_budget: int
    runs: int
    tau: float
    tau_stderr: float
    h_n: Optional[float]
    h_n_stderr: Optional[float]
    truncated_runs: int = 0
    flagged_realizations: int = 0
    total_flips: int = 0

    def to_row(self) -> dict:
        """The output columns, in order."""
        return {
            "protocol": Protocol(self.protocol).value,
            "n": self.n,
            "lambda": self.lam,
            "nreal": self.nreal,
            "starts_or_budget": self.starts_or_budget,
            "runs": self.runs,
            "tau": self.tau,
            "tau_stderr": self.tau_stderr,
            "h_n": self.h_n,
            "h_n_stderr": self.h_n_stderr,
        }

    def to_dict(self) -> dict:
        data = self.to_row()
        data.update(
            truncated_runs=self.truncated_runs,
            flagged_realizations=self.flagged_realizations,
            total_flips=self.total_flips,
        )
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "EnergyStats":
        return cls(
            protocol=Protocol(data["protocol"]),
            n=int(data["n"]),
            lam=float(data["lambda"]),
            nreal=int(data["nreal"]),
            starts_or_budget=int(data["starts_or_budget"]),
            runs=int(data["runs"]),
            tau=_float_or_nan(data.get("tau")),
            tau_stderr=_float_or_nan(data.get("tau_stderr")),
            h_n=_optional_float(data.get("h_n")),
            h_n_stderr=_optional_float(data.get("h_n_stderr")),
            truncated_runs=int(data.get("truncated_runs", 0)),
            flagged_realizations=int(data.get("flagged_realizations", 0)),
            total_flips=int(data.get("total_flips", 0)),
        )


@dataclass
class ScalingFit:
    """tau ~ prefactor * N^exponent fitted on log-log axes."""

    lam: float
    exponent: float
    prefactor: float
    r_squared: float
    sizes_used: List[int]
    sizes_excluded: List[int]

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "exponent": self.exponent,
            "prefactor": self.prefactor,
            "r_squared": self.r_squared,
            "sizes_used": list(self.sizes_used),
            "sizes_excluded": list(self.sizes_excluded),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScalingFit":
        return cls(
            lam=float(data["lambda"]),
            exponent=float(data["exponent"]),
            prefactor=float(data["prefactor"]),
            r_squared=float(data["r_squared"]),
            sizes_used=[int(n) for n in data.get("sizes_used", [])],
            sizes_excluded=[int(n) for n in data.get("sizes_excluded", [])],
        )


@dataclass
class CampaignResult:
    config: ExperimentConfig
    stats: List[EnergyStats] = field(default_factory=list)
    fits: List[ScalingFit] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "cells": [s.to_dict() for s in self.stats],
            "fits": [f.to_dict() for f in self.fits],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CampaignResult":
        return cls(
            config=ExperimentConfig.from_dict(data["config"]),
            stats=[EnergyStats.from_dict(c) for c in data.get("cells", [])],
            fits=[ScalingFit.from_dict(f) for f in data.get("fits", [])],
            warnings=list(data.get("warnings", [])),
        )


@dataclass
class RealizationOutcome:
    """What one disorder realization contributes to a cell."""

    index: int
    flips: List[int]
    best_energy_per_spin: Optional[float]
    truncated: int = 0
    discarded: int = 0
    total_flips: int = 0

    @property
    def flagged(self) -> bool:
        return self.best_energy_per_spin is None


# ============================================================
# SEEDS
# ============================================================

def derive_seed(master_seed: int, *coords: int) -> int:
    """
    64-bit seed for the stream at `coords` below `master_seed`.
    Independent of the order in which coordinates are visited.
    """
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(int(c) for c in coords))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def instance_seed(master_seed: int, n: int, realization: int) -> int:
    """Every lambda of a campaign sees the same disorder realizations."""
    return derive_seed(master_seed, _INSTANCE_DOMAIN, n, realization)


def trajectory_seed(master_seed: int, n: int, lambda_index: int, realization: int, start: int) -> int:
    return derive_seed(master_seed, _TRAJECTORY_DOMAIN, n, lambda_index, realization, start)


# ============================================================
# REALIZATION WORKERS
# ============================================================

def _fixed_starts_realization(args: tuple) -> RealizationOutcome:
    n, lam, lambda_index, r, starts, master_seed, max_flips, instance_source = args
    J = (instance_source or generate_couplings)(n, instance_seed(master_seed, n, r))

    flips: List[int] = []
    best = math.inf
    truncated = 0
    for k in range(starts):
        seed = trajectory_seed(master_seed, n, lambda_index, r, k)
        rng = np.random.default_rng(seed)
        record = run_trajectory(J, random_config(n, rng), lam, rng, max_flips=max_flips, start_seed=seed)
        flips.append(record.flips)
        best = min(best, record.final_energy_per_spin)
        truncated += not record.converged

    return RealizationOutcome(
        index=r,
        flips=flips,
        best_energy_per_spin=best,
        truncated=truncated,
        total_flips=sum(flips),
    )


def _fixed_budget_realization(args: tuple) -> RealizationOutcome:
    n, lam, lambda_index, r, budget, budget_seconds, master_seed, max_flips, instance_source = args
    J = (instance_source or generate_couplings)(n, instance_seed(master_seed, n, r))
    cap = max_flips or default_max_flips(n)
    deadline = time.perf_counter() + budget_seconds if budget_seconds is not None else None

    flips: List[int] = []
    best: Optional[float] = None
    truncated = discarded = used = 0
    k = 0
    while _budget_left(budget, used, deadline):
        remaining = budget - used if budget is not None else cap
        limit = min(cap, remaining)

        seed = trajectory_seed(master_seed, n, lambda_index, r, k)
        rng = np.random.default_rng(seed)
        record = run_trajectory(J, random_config(n, rng), lam, rng, max_flips=limit, start_seed=seed)
        # an already-stable start still costs one unit so the loop advances
        used += max(record.flips, 1)
        k += 1

        out_of_time = deadline is not None and time.perf_counter() >= deadline
        exhausted = budget is not None and used >= budget
        cut_by_budget = budget is not None and (limit < cap or exhausted)

        # a descent only completes with budget to spare
        if record.converged and not out_of_time and not exhausted:
            flips.append(record.flips)
            if best is None or record.final_energy_per_spin < best:
                best = record.final_energy_per_spin
        elif out_of_time or cut_by_budget:
            discarded += 1
        else:
            flips.append(record.flips)
            truncated += 1

    return RealizationOutcome(
        index=r,
        flips=flips,
        best_energy_per_spin=best,
        truncated=truncated,
        discarded=discarded,
        total_flips=used,
    )


def _budget_left(budget: Optional[int], used: int, deadline: Optional[float]) -> bool:
    """Both budgets apply when both are set; whichever runs out first ends the realization."""
    if budget is not None and used >= budget:
        return False
    return deadline is None or time.perf_counter() < deadline


def _map_realizations(worker, tasks: List[tuple], workers: int) -> List[RealizationOutcome]:
    if workers <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    with Pool(processes=min(workers, len(tasks))) as pool:
        return pool.map(worker, tasks)


# ============================================================
# AGGREGATION
# ============================================================

def _aggregate(
    protocol: Protocol,
    n: int,
    lam: float,
    starts_or_budget: int,
    outcomes: List[RealizationOutcome],
) -> EnergyStats:
    outcomes = sorted(outcomes, key=lambda o: o.index)
    flips = np.array([t for o in outcomes for t in o.flips], dtype=np.float64)
    minima = np.array([o.best_energy_per_spin for o in outcomes if not o.flagged], dtype=np.float64)

    runs = int(flips.size)
    tau = float(np.mean(flips)) if runs else math.nan
    tau_stderr = _stderr(flips) if runs else math.nan

    stats = EnergyStats(
        protocol=protocol,
        n=n,
        lam=lam,
        nreal=len(outcomes),
        starts_or_budget=starts_or_budget,
        runs=runs,
        tau=tau,
        tau_stderr=tau_stderr,
        h_n=float(np.mean(minima)) if minima.size else None,
        h_n_stderr=_stderr(minima) if minima.size else None,
        truncated_runs=sum(o.truncated for o in outcomes),
        flagged_realizations=sum(o.flagged for o in outcomes),
        total_flips=sum(o.total_flips for o in outcomes),
    )
    logger.info(
        f"{protocol.value} n={n} lambda={lam:g}: runs={runs} tau={tau:.3f} "
        f"H_N={'undefined' if stats.h_n is None else f'{stats.h_n:.6f}'}"
    )
    return stats


def _stderr(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(values.size))


def _check_counts(**counts: Optional[int]):
    for name, value in counts.items():
        if value is not None and value < 1:
            raise InvalidArgumentError(f"{name} must be >= 1, got {value}")


# ============================================================
# PROTOCOLS
# ============================================================

def protocol_fixed_starts(
    n: int,
    lam: Union[LambdaParam, float],
    starts: int,
    nreal: int,
    seed: int,
    instance_source: Optional[InstanceSource] = None,
    lambda_index: int = 0,
    max_flips: Optional[int] = None,
    workers: int = 1,
) -> EnergyStats:
    """
    `starts` independent descents from uniform random configurations on each
    of `nreal` realizations. tau averages over all starts*nreal runs; H_N
    averages the per-realization minimum over realizations.
    """
    lam = LambdaParam.of(lam)
    _check_counts(n=n, starts=starts, nreal=nreal, max_flips=max_flips)

    tasks = [
        (n, lam.value, lambda_index, r, starts, seed, max_flips, instance_source)
        for r in range(nreal)
    ]
    outcomes = _map_realizations(_fixed_starts_realization, tasks, workers)
    return _aggregate(Protocol.FIXED_STARTS, n, lam.value, starts, outcomes)


def protocol_fixed_budget(
    n: int,
    lam: Union[LambdaParam, float],
    flip_budget: Optional[int],
    nreal: int,
    seed: int,
    instance_source: Optional[InstanceSource] = None,
    lambda_index: int = 0,
    max_flips: Optional[int] = None,
    workers: int = 1,
    budget_seconds: Optional[float] = None,
) -> EnergyStats:
    """
    Restart from fresh random configurations until `flip_budget` flips have
    been spent on a realization. Only completed descents enter the
    per-realization minimum, and a descent completes only if it reaches a
    stable configuration with budget left over. A descent cut short or
    ending on the last budgeted flip is dropped, but its flips still count
    as spent. Realizations where nothing completed are flagged and left
    out of H_N.

    `budget_seconds` adds a wall-clock budget per realization, alone or
    together with `flip_budget`. That mode is not reproducible and is
    meant for exploration only.
    """
    lam = LambdaParam.of(lam)
    if flip_budget is None and budget_seconds is None:
        raise InvalidArgumentError("flip_budget must be set")
    _check_counts(n=n, flip_budget=flip_budget, nreal=nreal, max_flips=max_flips)

    tasks = [
        (n, lam.value, lambda_index, r, flip_budget, budget_seconds, seed, max_flips, instance_source)
        for r in range(nreal)
    ]
    outcomes = _map_realizations(_fixed_budget_realization, tasks, workers)

    flagged = [o.index for o in outcomes if o.flagged]
    if flagged:
        logger.warning(
            f"n={n} lambda={lam.value:g}: {len(flagged)}/{nreal} realizations completed no descent "
            f"within the budget"
        )
    return _aggregate(Protocol.FIXED_BUDGET, n, lam.value, flip_budget or 0, outcomes)


# ============================================================
# SCALING FITS
# ============================================================

def fit_scaling(
    points: Sequence[Tuple[int, float]],
    exclude: Sequence[int] = (),
    lam: float = math.nan,
) -> ScalingFit:
    """Ordinary least squares of log10(tau) on log10(N)."""
    excluded = sorted({int(n) for n, _ in points if n in set(exclude)})
    kept = [(int(n), float(tau)) for n, tau in points if n not in set(exclude)]

    if len(kept) < 3:
        raise InvalidArgumentError(f"a scaling fit needs at least 3 points, got {len(kept)}")
    if any(not tau > 0 for _, tau in kept):
        raise InvalidArgumentError("every tau must be positive for a log-log fit")
    if any(n < 1 for n, _ in kept):
        raise InvalidArgumentError("every size must be >= 1 for a log-log fit")
    if len({n for n, _ in kept}) < 2:
        raise InvalidArgumentError("a scaling fit needs at least 2 distinct sizes")

    x = np.log10([n for n, _ in kept])
    y = np.log10([tau for _, tau in kept])
    result = scipy_stats.linregress(x, y)

    r_squared = float(result.rvalue) ** 2
    return ScalingFit(
        lam=lam,
        exponent=float(result.slope),
        prefactor=float(10.0 ** result.intercept),
        r_squared=min(max(r_squared, 0.0), 1.0),
        sizes_used=sorted({n for n, _ in kept}),
        sizes_excluded=excluded,
    )


def fit_all(stats: Sequence[EnergyStats], exclude: Sequence[int] = ()) -> Tuple[List[ScalingFit], List[str]]:
    """One fit per lambda; lambdas without enough points are reported, not fitted."""
    fits: List[ScalingFit] = []
    warnings: List[str] = []
    by_lambda: Dict[float, List[Tuple[int, float]]] = {}
    for s in stats:
        by_lambda.setdefault(s.lam, []).append((s.n, s.tau))

    for lam, points in by_lambda.items():
        try:
            fits.append(fit_scaling(points, exclude, lam=lam))
        except InvalidArgumentError as e:
            message = f"fit for lambda={lam:g} skipped: {e}"
            logger.warning(message)
            warnings.append(message)
    return fits, warnings


# ============================================================
# CAMPAIGN
# ============================================================

def run_campaign(config: ExperimentConfig, workers: int = 1) -> CampaignResult:
    """
    Run the configured protocol over the sizes x lambdas grid. Cell failures
    are recorded as warnings and the campaign continues.
    """
    config.validate()
    result = CampaignResult(config=config)
    logger.info(
        f"Campaign {config.protocol.value}: sizes={config.sizes} lambdas={config.lambdas} "
        f"nreal={config.nreal} seed={config.master_seed}"
    )

    for n in config.sizes:
        for lambda_index, lam in enumerate(config.lambdas):
            try:
                if config.protocol is Protocol.FIXED_STARTS:
                    cell = protocol_fixed_starts(
                        n, lam, config.starts_for(n), config.nreal, config.master_seed,
                        lambda_index=lambda_index, max_flips=config.max_flips, workers=workers,
                    )
                else:
                    cell = protocol_fixed_budget(
                        n, lam, config.flip_budget, config.nreal, config.master_seed,
                        lambda_index=lambda_index, max_flips=config.max_flips, workers=workers,
                        budget_seconds=config.budget_seconds,
                    )
            except Exception as e:
                message = f"cell (n={n}, lambda={lam:g}) failed: {e}"
                logger.error(message)
                result.warnings.append(message)
                continue

            result.stats.append(cell)
            result.warnings.extend(_cell_warnings(cell))

    if config.protocol is Protocol.FIXED_STARTS:
        fits, fit_warnings = fit_all(result.stats, config.exclude_sizes_from_fit)
        result.fits = fits
        result.warnings.extend(fit_warnings)
    if config.budget_seconds is not None:
        result.warnings.append("wall-clock budget in use: results are not reproducible")

    logger.info(f"Campaign finished: {len(result.stats)} cells, {len(result.fits)} fits")
    return result


def _cell_warnings(cell: EnergyStats) -> List[str]:
    warnings = []
    if cell.truncated_runs:
        warnings.append(
            f"n={cell.n} lambda={cell.lam:g}: {cell.truncated_runs} runs hit the flip cap before converging"
        )
    if cell.flagged_realizations:
        warnings.append(
            f"n={cell.n} lambda={cell.lam:g}: {cell.flagged_realizations} realizations flagged "
            f"(budget expired before any descent completed)"
        )
    return warnings


# ============================================================
# ANALYSIS HELPERS
# ============================================================

def relative_spread(stats: Sequence[EnergyStats], n: int) -> float:
    """(max - min) / |mean| of H_N across lambdas at one size."""
    values = [s.h_n for s in stats if s.n == n and s.h_n is not None]
    if len(values) < 2:
        raise InvalidArgumentError(f"need H_N for at least two lambdas at n={n}")
    mean = float(np.mean(values))
    if mean == 0.0:
        raise InvalidArgumentError(f"mean H_N is zero at n={n}; relative spread is undefined")
    return (max(values) - min(values)) / abs(mean)


def best_lambda_by_size(stats: Sequence[EnergyStats]) -> Dict[int, float]:
    """Lambda reaching the lowest H_N at each size."""
    best: Dict[int, EnergyStats] = {}
    for s in stats:
        if s.h_n is None:
            continue
        if s.n not in best or s.h_n < best[s.n].h_n:
            best[s.n] = s
    return {n: s.lam for n, s in sorted(best.items())}


def _optional_float(value) -> Optional[float]:
    if value is None or value == "":
        return None
    return float(value)


def _float_or_nan(value) -> float:
    parsed = _optional_float(value)
    return math.nan if parsed is None else parsed


def _as_int(value, name: str) -> int:
    """Integer config value; integral floats pass, anything else is rejected."""
    if isinstance(value, bool):
        raise InvalidArgumentError(f"{name}: expected an integer, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise InvalidArgumentError(f"{name}: expected an integer, got {value!r}")
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, str):
        try:
            return int(value)
        except ValueError:
            pass
    raise InvalidArgumentError(f"{name}: expected an integer, got {value!r}")
