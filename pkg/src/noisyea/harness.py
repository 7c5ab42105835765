"""Experiment configuration, deterministic sweeps, statistics and CSV output.

Each run's random stream is derived from (base_seed, cell, run_index)
with a strong 64-bit mixer, where the cell identifier is computed from
the cell's content (noise parameter bits and lambda), not its position.
Results are therefore bit-identical for a fixed base seed regardless of
thread count, execution order, or which other cells are in the sweep.
"""
from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import fastsim
from .core import MASK64, ProblemInstance, RandomSource, mix64
from .engine import AlgorithmConfig, StoppingRule
from .noise import NoiseKind, NoiseModel

ALL_METRICS = frozenset(
    {
        "mean_generations",
        "std_generations",
        "success_rate",
        "mean_best_fitness",
        "std_best_fitness",
        "mean_evaluations",
    }
)

CSV_HEADER = (
    "param_log2,lambda,runs,mean_gens,std_gens,"
    "success_rate,mean_best,std_best,mean_evals"
)

_CHUNK = 2048


class BudgetExceededError(ValueError):
    pass


@dataclass(frozen=True)
class SweepCell:
    """One grid point: the swept noise parameter value and lambda.

    param is p for one-bit/asymmetric noise and q for bit-wise noise;
    it is ignored for noise-free sweeps.
    """

    param: float
    lam: int


@dataclass(frozen=True)
class ExperimentConfig:
    instance: ProblemInstance
    algorithm: AlgorithmConfig  # template; lambda and noise parameter come per cell
    sweep: tuple[SweepCell, ...]
    runs_per_cell: int
    stop: StoppingRule
    base_seed: int
    metrics: frozenset = field(default_factory=lambda: ALL_METRICS)
    max_budget: float = 1e11

    def __post_init__(self):
        if self.runs_per_cell < 1:
            raise ValueError("runs_per_cell must be >= 1")
        if not self.sweep:
            raise ValueError("sweep must contain at least one cell")
        seen = set()
        for cell in self.sweep:
            key = (cell.param, cell.lam)
            if key in seen:
                raise ValueError(f"duplicate sweep cell {key}")
            seen.add(key)
            if cell.lam < 1:
                raise ValueError("lambda must be >= 1")
        if not self.metrics:
            raise ValueError("metric set must not be empty")
        unknown = set(self.metrics) - ALL_METRICS
        if unknown:
            raise ValueError(f"unknown metrics: {sorted(unknown)}")
        for cell in self.sweep:
            cell_config(self, cell)  # validates the per-cell noise model

    def estimated_generation_steps(self) -> float:
        return len(self.sweep) * self.runs_per_cell * float(self.stop.max_generations)


@dataclass(frozen=True)
class CellSummary:
    param: float
    lam: int
    runs: int
    mean_gens: float
    std_gens: float
    success_rate: float
    mean_best: float
    std_best: float
    mean_evals: float


class MedianEstimate(NamedTuple):
    median: int
    censored: bool


def cell_config(cfg: ExperimentConfig, cell: SweepCell) -> AlgorithmConfig:
    """Algorithm configuration of one cell: template with param and lambda set."""
    noise = cfg.algorithm.noise
    if noise.kind is NoiseKind.NONE:
        model = noise
    elif noise.kind is NoiseKind.BIT_WISE:
        model = replace(noise, q=cell.param)
    else:
        model = replace(noise, p=cell.param)
    model.check_compatible(cfg.instance.n)
    return replace(cfg.algorithm, lam=cell.lam, noise=model)


def _cell_key(cell: SweepCell) -> int:
    bits = struct.unpack("<Q", struct.pack("<d", cell.param))[0]
    return mix64(bits, cell.lam)


def run_seed(base_seed: int, cell: SweepCell, run_index: int) -> int:
    return mix64(base_seed & MASK64, _cell_key(cell), run_index)


def default_thread_count() -> int:
    env = os.environ.get("NOISYEA_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return os.cpu_count() or 1


def run_sweep(cfg: ExperimentConfig, threads: int | None = None) -> list[CellSummary]:
    """Execute all cells and aggregate the per-cell statistics.

    Work is split into fixed-size chunks dispatched to a thread pool
    (the kernels release the GIL); per-run seeding makes the outcome
    independent of the schedule.
    """
    est = cfg.estimated_generation_steps()
    if est > cfg.max_budget:
        raise BudgetExceededError(
            f"estimated {est:.3g} generation-steps exceed budget {cfg.max_budget:.3g}; "
            "raise max_budget to override"
        )
    if threads is None:
        threads = default_thread_count()
    runs = cfg.runs_per_cell
    cells = list(cfg.sweep)
    results = [
        (
            np.empty(runs, np.uint8),
            np.empty(runs, np.int64),
            np.empty(runs, np.int64),
        )
        for _ in cells
    ]
    tasks = []
    for ci, cell in enumerate(cells):
        for lo in range(0, runs, _CHUNK):
            tasks.append((ci, lo, min(lo + _CHUNK, runs)))

    def work(task):
        ci, lo, hi = task
        cell = cells[ci]
        seeds = np.array(
            [run_seed(cfg.base_seed, cell, r) for r in range(lo, hi)],
            dtype=np.uint64,
        )
        succ, gens, best = fastsim.run_many(
            cfg.instance, cell_config(cfg, cell), cfg.stop, seeds
        )
        s_all, g_all, b_all = results[ci]
        s_all[lo:hi] = succ
        g_all[lo:hi] = gens
        b_all[lo:hi] = best

    if threads <= 1:
        for task in tasks:
            work(task)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, tasks))

    scale = cfg.instance.scale
    summaries = []
    for ci, cell in enumerate(cells):
        succ, gens, best = results[ci]
        summaries.append(_summarize(cell, runs, succ, gens, best, scale))
    return summaries


def _summarize(cell, runs, succ, gens, best_scaled, scale) -> CellSummary:
    gens_f = gens.astype(np.float64)
    best_f = best_scaled.astype(np.float64) / scale
    evals = 1.0 + (cell.lam + 1) * gens_f
    return CellSummary(
        param=cell.param,
        lam=cell.lam,
        runs=runs,
        mean_gens=float(gens_f.mean()),
        std_gens=float(gens_f.std()),  # population std (ddof=0)
        success_rate=float(succ.mean()),
        mean_best=float(best_f.mean()),
        std_best=float(best_f.std()),
        mean_evals=float(evals.mean()),
    )


def uniform_sampling_baseline(
    instance: ProblemInstance, samples: int, rng: RandomSource
) -> int | Fraction:
    """Best true fitness among ``samples`` uniform random points."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    best = fastsim.uniform_best(instance, samples, rng.u64())
    return instance.fitness_from_scaled(best)


def baseline_mean(
    instance: ProblemInstance, samples: int, reps: int, base_seed: int
) -> float:
    """Mean over repetitions of the uniform-sampling best fitness."""
    total = 0.0
    scale = instance.scale
    for rep in range(reps):
        seed = mix64(base_seed, 0x0BA5E11E, rep)
        total += fastsim.uniform_best(instance, samples, seed) / scale
    return total / reps


def estimate_median_time(
    instance: ProblemInstance,
    algorithm: AlgorithmConfig,
    runs: int,
    rng: RandomSource,
    safety_cap: int = 10_000_000,
) -> MedianEstimate:
    """Empirical median generations over uncapped runs.

    Runs are bounded by a hard safety cap; if any run hits it the
    median is reported as censored.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    seeds = np.array([rng.u64() for _ in range(runs)], dtype=np.uint64)
    succ, gens, _ = fastsim.run_many(
        instance, algorithm, StoppingRule(safety_cap), seeds
    )
    median = int(np.quantile(gens, 0.5, method="inverted_cdf"))
    return MedianEstimate(median, bool((succ == 0).any()))


def format_csv(summaries: list[CellSummary]) -> str:
    """Fixed-schema per-cell table as one string.

    Columns: param_log2, lambda, runs, mean_gens, std_gens,
    success_rate, mean_best, std_best, mean_evals. Floats carry six
    significant digits, rows are sorted by (param, lambda) ascending,
    lines end with LF.
    """
    if not summaries:
        raise ValueError("refusing to write an empty summary table")
    rows = sorted(summaries, key=lambda c: (c.param, c.lam))
    lines = [CSV_HEADER]
    for c in rows:
        plog = math.log2(c.param) if c.param > 0 else -math.inf
        lines.append(
            f"{plog:.6g},{c.lam},{c.runs},{c.mean_gens:.6g},{c.std_gens:.6g},"
            f"{c.success_rate:.6g},{c.mean_best:.6g},{c.std_best:.6g},"
            f"{c.mean_evals:.6g}"
        )
    return "\n".join(lines) + "\n"


def emit_csv(summaries: list[CellSummary], path: str) -> None:
    """Write :func:`format_csv` output to ``path`` (LF line endings)."""
    text = format_csv(summaries)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"failed writing summary CSV to {path}: {exc}") from exc
