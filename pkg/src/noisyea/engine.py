"""Generation loop of the (1+lambda) EA / (1+lambda) RLS under prior noise.

Reference implementation kept deliberately close to the algorithm
definition; large sweeps dispatch to the compiled kernels in
``fastsim`` instead.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core import (
    BitString,
    MutationOperator,
    ProblemInstance,
    RandomSource,
    mutate,
)
from .noise import NoiseModel, apply_noise


@dataclass(frozen=True)
class AlgorithmConfig:
    """Offspring count, mutation operator and noise model of one algorithm.

    lam=1 with STANDARD_BIT mutation is the (1+1) EA; ONE_BIT mutation
    gives the (1+lambda) RLS.
    """

    lam: int
    mutation: MutationOperator
    noise: NoiseModel

    def __post_init__(self):
        if self.lam < 1:
            raise ValueError(f"offspring count must be >= 1, got {self.lam}")


@dataclass(frozen=True)
class StoppingRule:
    max_generations: int

    def __post_init__(self):
        if self.max_generations < 1:
            raise ValueError("generation cap must be >= 1")


@dataclass
class RunRecord:
    """Outcome of a single run.

    generations counts completed generations when the optimum was first
    sampled (0 if the initial point is optimal); on failure it equals
    the cap. evaluations = 1 + (lam+1) * generations: the initial
    evaluation plus, per generation, lam offspring and one fresh parent
    re-evaluation.
    """

    success: bool
    generations: int
    evaluations: int
    best_true_fitness: int | Fraction
    final_parent: BitString


def initialize(instance: ProblemInstance, rng: RandomSource) -> BitString:
    """Uniform random point of {0,1}^n."""
    n = instance.n
    word = 0
    for base in range(0, n, 64):
        width = min(64, n - base)
        word |= (rng.u64() & ((1 << width) - 1)) << base
    return BitString(n, word)


def generation_step(
    parent: BitString,
    cfg: AlgorithmConfig,
    instance: ProblemInstance,
    rng: RandomSource,
) -> tuple[BitString, bool, int | Fraction]:
    """One generation: lam offspring, noisy selection, noisy acceptance.

    Returns (new_parent, sampled_optimum, best_offspring_true_fitness).
    sampled_optimum reports whether any offspring *is* the optimum,
    regardless of how noise evaluated it and of the acceptance outcome.
    Among offspring, ties in noisy fitness are broken uniformly; the
    best offspring replaces the parent iff its noisy fitness is at
    least the parent's freshly drawn noisy fitness.
    """
    opt_scaled = instance.optimum_scaled
    chosen = parent
    best_noisy = None
    ties = 0
    best_true = None
    sampled_optimum = False
    for _ in range(cfg.lam):
        y = mutate(parent, cfg.mutation, rng)
        true_y = instance.scaled_fitness(y)
        if true_y == opt_scaled:
            sampled_optimum = True
        if best_true is None or true_y > best_true:
            best_true = true_y
        noisy_y = instance.scaled_fitness(apply_noise(y, cfg.noise, rng))
        if best_noisy is None or noisy_y > best_noisy:
            best_noisy = noisy_y
            chosen = y
            ties = 1
        elif noisy_y == best_noisy:
            ties += 1
            if rng.below(ties) == 0:
                chosen = y
    noisy_parent = instance.scaled_fitness(apply_noise(parent, cfg.noise, rng))
    new_parent = chosen if best_noisy >= noisy_parent else parent
    return new_parent, sampled_optimum, instance.fitness_from_scaled(best_true)


def run(
    instance: ProblemInstance,
    cfg: AlgorithmConfig,
    stop: StoppingRule,
    rng: RandomSource,
) -> RunRecord:
    """Run until the optimum is sampled or the generation cap is hit."""
    cfg.noise.check_compatible(instance.n)
    x = initialize(instance, rng)
    best = instance.fitness_from_scaled(instance.scaled_fitness(x))
    opt = instance.fitness_from_scaled(instance.optimum_scaled)
    if best == opt:
        return RunRecord(True, 0, 1, best, x)
    per_gen = cfg.lam + 1
    for gen in range(1, stop.max_generations + 1):
        x, sampled, best_off = generation_step(x, cfg, instance, rng)
        if best_off > best:
            best = best_off
        if sampled:
            return RunRecord(True, gen, 1 + per_gen * gen, best, x)
    cap = stop.max_generations
    return RunRecord(False, cap, 1 + per_gen * cap, best, x)
