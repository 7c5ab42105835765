"""Exact finite-Markov-chain analysis of (1+1)-style runs on small n.

States are bit strings read as integers (first position at the least
significant bit), so the state space is {0, ..., 2^n - 1} with the
optimum at 2^n - 1. Transition probabilities decompose into the
mutation kernel times the probability that the offspring's noisy
fitness beats the parent's freshly drawn noisy fitness; the acceptance
factor is computed exactly by summing over the joint noise outcomes of
parent and offspring.

Expected optimisation times use the sampling-absorbed chain: a run ends
the moment the optimum appears as an offspring, whether or not noise
then causes its rejection, matching the detection rule of the engine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import BitString, MutationOperator, ProblemInstance, ProblemKind
from .engine import AlgorithmConfig
from .noise import NoiseKind, NoiseModel

MAX_N_ONEBIT = 8
MAX_N_BITWISE = 6


@dataclass(frozen=True)
class TransitionMatrix:
    """Dense row-stochastic parent-state chain of one configuration."""

    instance: ProblemInstance
    cfg: AlgorithmConfig
    matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.instance.n


@dataclass(frozen=True)
class HittingTimeResult:
    """Expected generations until the optimum is first sampled.

    States that reach the optimum with probability < 1 have infinite
    expected time and are marked unreachable.
    """

    expected_time_by_state: np.ndarray
    expected_time_uniform_start: float
    worst_case_state: int
    reachable: np.ndarray
    residual: float


@dataclass(frozen=True)
class MedianResult:
    median_by_state: np.ndarray
    worst_case_median: float


def _check_dimensions(instance: ProblemInstance, model: NoiseModel) -> None:
    model.check_compatible(instance.n)
    limit = MAX_N_BITWISE if model.kind is NoiseKind.BIT_WISE else MAX_N_ONEBIT
    if instance.n > limit:
        raise ValueError(
            f"oracle limited to n <= {limit} for {model.kind.value} noise, "
            f"got n={instance.n}"
        )


def _scaled_fitness_vector(instance: ProblemInstance) -> np.ndarray:
    n = instance.n
    out = np.empty(1 << n, dtype=np.int64)
    for s in range(1 << n):
        out[s] = instance.scaled_fitness(BitString(n, s))
    return out


def _hamming_matrix(n: int) -> np.ndarray:
    states = np.arange(1 << n, dtype=np.uint32)
    return np.bitwise_count(states[:, None] ^ states[None, :]).astype(np.int64)


def _mutation_matrix(instance: ProblemInstance, op: MutationOperator) -> np.ndarray:
    n = instance.n
    d = _hamming_matrix(n)
    if op is MutationOperator.ONE_BIT:
        return np.where(d == 1, 1.0 / n, 0.0)
    return (1.0 / n) ** d * (1.0 - 1.0 / n) ** (n - d)


def _noisy_value_distribution(instance: ProblemInstance, model: NoiseModel):
    """Per-state distribution of the noisy fitness value.

    Returns (values, D) with values the ascending distinct scaled
    fitness levels and D[s, k] = P(fitness(noise(s)) = values[k]).
    """
    n = instance.n
    N = 1 << n
    fit = _scaled_fitness_vector(instance)
    values, inverse = np.unique(fit, return_inverse=True)
    m = values.size
    D = np.zeros((N, m))
    p = model.p
    if model.kind is NoiseKind.NONE or p == 0.0:
        D[np.arange(N), inverse] = 1.0
        return values, D
    if model.kind is NoiseKind.BIT_WISE:
        r = model.q / n
        d = _hamming_matrix(n)
        K = p * r**d * (1.0 - r) ** (n - d)
        K[np.diag_indices(N)] += 1.0 - p
        onehot = np.zeros((N, m))
        onehot[np.arange(N), inverse] = 1.0
        return values, K @ onehot
    if model.kind is NoiseKind.ONE_BIT:
        for s in range(N):
            D[s, inverse[s]] += 1.0 - p
            for j in range(n):
                D[s, inverse[s ^ (1 << j)]] += p / n
        return values, D
    # asymmetric one-bit
    full = N - 1
    for s in range(N):
        D[s, inverse[s]] += 1.0 - p
        if s == 0 or s == full:
            for j in range(n):
                D[s, inverse[s ^ (1 << j)]] += p / n
            continue
        ones = bin(s).count("1")
        zeros = n - ones
        for j in range(n):
            if (s >> j) & 1:
                D[s, inverse[s ^ (1 << j)]] += p / (2 * ones)
            else:
                D[s, inverse[s ^ (1 << j)]] += p / (2 * zeros)
    return values, D


def _acceptance_matrix(instance: ProblemInstance, model: NoiseModel) -> np.ndarray:
    """ACC[x, y] = P(fitness(noise(y)) >= fitness(noise(x))), exact in doubles."""
    values, D = _noisy_value_distribution(instance, model)
    geq = np.triu(np.ones((values.size, values.size)))
    return np.clip(D @ geq @ D.T, 0.0, 1.0)


def _noisy_dist_point(instance: ProblemInstance, model: NoiseModel, x: BitString):
    """List of (scaled fitness, probability) for noise applied to x."""
    n = instance.n
    p = model.p
    fx = instance.scaled_fitness(x)
    if model.kind is NoiseKind.NONE or p == 0.0:
        return [(fx, 1.0)]
    acc: dict[int, float] = {}

    def add(f, pr):
        acc[f] = acc.get(f, 0.0) + pr

    if model.kind is NoiseKind.BIT_WISE:
        r = model.q / n
        add(fx, 1.0 - p)
        for s in range(1 << n):
            d = (s ^ x.word).bit_count()
            add(
                instance.scaled_fitness(BitString(n, s)),
                p * r**d * (1.0 - r) ** (n - d),
            )
        return sorted(acc.items())
    add(fx, 1.0 - p)
    if model.kind is NoiseKind.ONE_BIT:
        for j in range(n):
            add(instance.scaled_fitness(x.with_flip(j)), p / n)
        return sorted(acc.items())
    zeros = x.count_zeros()
    if zeros in (0, n):
        for j in range(n):
            add(instance.scaled_fitness(x.with_flip(j)), p / n)
        return sorted(acc.items())
    for j in range(n):
        share = p / (2 * zeros) if x.get(j) == 0 else p / (2 * (n - zeros))
        add(instance.scaled_fitness(x.with_flip(j)), share)
    return sorted(acc.items())


def acceptance_probability(
    x: BitString, y: BitString, model: NoiseModel, instance: ProblemInstance
) -> float:
    """Exact P(fitness(noise(y)) >= fitness(noise(x))) for parent x, offspring y.

    Sums the joint kernel of the two independent noise draws; compensated
    summation keeps the result exactly rounded.
    """
    if x.n != y.n or x.n != instance.n:
        raise ValueError("dimension mismatch")
    _check_dimensions(instance, model)
    dist_x = _noisy_dist_point(instance, model, x)
    dist_y = _noisy_dist_point(instance, model, y)
    terms = [
        px * py for fx, px in dist_x for fy, py in dist_y if fy >= fx
    ]
    return min(1.0, math.fsum(terms))


def acceptance_probability_exact(
    x: BitString, y: BitString, model: NoiseModel, instance: ProblemInstance
) -> Fraction:
    """Rational-arithmetic acceptance probability, for small-n cross-checks."""
    if instance.n > 4:
        raise ValueError("exact rational path supported for n <= 4 only")

    def dist(pt: BitString):
        n = instance.n
        p = Fraction(model.p)
        out: dict[int, Fraction] = {}

        def add(f, pr):
            out[f] = out.get(f, Fraction(0)) + pr

        if model.kind is NoiseKind.NONE or p == 0:
            return {instance.scaled_fitness(pt): Fraction(1)}
        add(instance.scaled_fitness(pt), 1 - p)
        if model.kind is NoiseKind.ONE_BIT:
            for j in range(n):
                add(instance.scaled_fitness(pt.with_flip(j)), p / n)
        elif model.kind is NoiseKind.BIT_WISE:
            r = Fraction(model.q) / n
            for s in range(1 << n):
                d = (s ^ pt.word).bit_count()
                add(
                    instance.scaled_fitness(BitString(n, s)),
                    p * r**d * (1 - r) ** (n - d),
                )
        else:
            zeros = pt.count_zeros()
            if zeros in (0, n):
                for j in range(n):
                    add(instance.scaled_fitness(pt.with_flip(j)), p / n)
            else:
                for j in range(n):
                    share = (
                        p / (2 * zeros) if pt.get(j) == 0 else p / (2 * (n - zeros))
                    )
                    add(instance.scaled_fitness(pt.with_flip(j)), share)
        return out

    dist_x = dist(x)
    dist_y = dist(y)
    total = Fraction(0)
    for fx, px in dist_x.items():
        for fy, py in dist_y.items():
            if fy >= fx:
                total += px * py
    return total


def build_transition_matrix(
    instance: ProblemInstance, cfg: AlgorithmConfig
) -> TransitionMatrix:
    """Parent-state chain P(x -> y) = mut(x, y) * acc(x, y), diagonal remainder."""
    if cfg.lam != 1:
        raise ValueError("oracle supports lambda = 1 only")
    _check_dimensions(instance, cfg.noise)
    mut = _mutation_matrix(instance, cfg.mutation)
    acc = _acceptance_matrix(instance, cfg.noise)
    P = mut * acc
    np.fill_diagonal(P, 0.0)
    diag = 1.0 - P.sum(axis=1)
    if diag.min() < -1e-10:
        raise RuntimeError(f"negative diagonal remainder: {diag.min()}")
    np.fill_diagonal(P, np.maximum(diag, 0.0))
    return TransitionMatrix(instance, cfg, P)


def _absorbed_system(instance: ProblemInstance, cfg: AlgorithmConfig):
    """Substochastic chain over non-optimal states, absorbed at sampling.

    Returns (transient state ids, Q, s) with s the per-generation
    probability of sampling the optimum as offspring.
    """
    mut = _mutation_matrix(instance, cfg.mutation)
    acc = _acceptance_matrix(instance, cfg.noise)
    N = mut.shape[0]
    opt = N - 1
    transient = np.array([i for i in range(N) if i != opt])
    s = mut[transient, opt].copy()
    Q = (mut * acc)[np.ix_(transient, transient)]
    off_diag = Q.sum(axis=1) - np.diag(Q)
    diag = 1.0 - s - off_diag
    if diag.min() < -1e-10:
        raise RuntimeError(f"negative diagonal remainder: {diag.min()}")
    np.fill_diagonal(Q, np.maximum(diag, 0.0))
    return transient, Q, s


def _absorption_probabilities(Q: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Probability of ever being absorbed, per transient state.

    Graph reachability first identifies the states with any path to an
    absorbing transition; the linear system is solved on that subset
    (it is singular on the rest).
    """
    nt = s.size
    adj = Q > 0.0
    can = s > 0.0
    frontier = can.copy()
    while frontier.any():
        frontier = adj[:, frontier].any(axis=1) & ~can
        can |= frontier
    absorb = np.zeros(nt)
    if can.any():
        idx = np.flatnonzero(can)
        sub = Q[np.ix_(idx, idx)]
        absorb[idx] = np.linalg.solve(np.eye(idx.size) - sub, s[idx])
    return absorb


def expected_optimisation_time(
    instance: ProblemInstance, cfg: AlgorithmConfig
) -> HittingTimeResult:
    """Exact expected generations until the optimum is first sampled.

    Solves t = 1 + Q t on the states that reach absorption almost
    surely; all other states (possible for p = 0 on Hurdle, where local
    optima trap the chain) are flagged and reported as infinite.
    """
    if cfg.lam != 1:
        raise ValueError("oracle supports lambda = 1 only")
    _check_dimensions(instance, cfg.noise)
    transient, Q, s = _absorbed_system(instance, cfg)
    nt = transient.size
    absorb = _absorption_probabilities(Q, s)
    sure = absorb >= 1.0 - 1e-9
    times = np.full(nt, np.inf)
    residual = 0.0
    if sure.any():
        idx = np.flatnonzero(sure)
        A = np.eye(idx.size) - Q[np.ix_(idx, idx)]
        t = np.linalg.solve(A, np.ones(idx.size))
        residual = float(np.abs(A @ t - 1.0).max())
        if residual > 1e-8:
            raise RuntimeError(
                f"hitting-time solve residual {residual} exceeds 1e-8"
            )
        times[idx] = t
    N = 1 << instance.n
    by_state = np.zeros(N)
    by_state[transient] = times
    reachable = np.zeros(N, dtype=bool)
    reachable[N - 1] = True
    reachable[transient] = sure
    uniform = float(by_state.mean())
    worst = int(np.argmax(by_state))
    return HittingTimeResult(by_state, uniform, worst, reachable, residual)


def median_optimisation_time(
    instance: ProblemInstance, cfg: AlgorithmConfig, max_steps: int = 1_000_000
) -> MedianResult:
    """Smallest t with P(optimum sampled by generation t) >= 1/2, per start.

    Computed by iterating the absorbed-chain distribution; states whose
    total absorption probability is below 1/2 have infinite median.
    """
    if cfg.lam != 1:
        raise ValueError("oracle supports lambda = 1 only")
    _check_dimensions(instance, cfg.noise)
    transient, Q, s = _absorbed_system(instance, cfg)
    nt = transient.size
    absorb = _absorption_probabilities(Q, s)
    med = np.full(nt, np.inf)
    pending = absorb >= 0.5
    cum = np.zeros(nt)
    U = np.eye(nt)
    t = 0
    while pending.any():
        t += 1
        if t > max_steps:
            raise RuntimeError(f"median iteration exceeded {max_steps} steps")
        cum += U @ s
        done = pending & (cum >= 0.5)
        med[done] = t
        pending &= ~done
        U = U @ Q
    N = 1 << instance.n
    by_state = np.zeros(N)
    by_state[transient] = med
    return MedianResult(by_state, float(by_state.max()))


def stationary_distribution(tm: TransitionMatrix) -> np.ndarray:
    """Stationary vector of the unmodified parent chain.

    Requires an ergodic chain, i.e. effective noise strength > 0.
    """
    if tm.cfg.noise.p_effective() <= 0.0:
        raise ValueError("stationary distribution requires noise (ergodic chain)")
    P = tm.matrix
    N = P.shape[0]
    A = P.T - np.eye(N)
    A[-1, :] = 1.0
    b = np.zeros(N)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    if pi.min() < -1e-10:
        raise RuntimeError(f"negative stationary mass: {pi.min()}")
    pi = np.maximum(pi, 0.0)
    pi /= pi.sum()
    err = float(np.abs(pi @ P - pi).sum())
    if err > 1e-10:
        raise RuntimeError(f"stationary residual {err} exceeds 1e-10")
    return pi


def check_lemma1_monotonicity(
    tm: TransitionMatrix, tol: float = 1e-10
) -> list[tuple[int, int]]:
    """All state pairs violating P(x -> y) >= P(y -> x) for LO(x) < LO(y).

    Under the noise hypotheses (p <= 1/2 for the one-bit models, per-bit
    rate <= 1/2 for bit-wise) the list is expected to be empty.
    """
    instance = tm.instance
    if instance.kind is not ProblemKind.LEADING_ONES:
        raise ValueError("monotonicity check applies to LeadingOnes only")
    model = tm.cfg.noise
    if model.kind in (NoiseKind.ONE_BIT, NoiseKind.ASYM_ONE_BIT) and model.p > 0.5:
        raise ValueError("hypotheses require p <= 1/2 for one-bit noise models")
    if model.kind is NoiseKind.BIT_WISE and model.q / instance.n > 0.5:
        raise ValueError("hypotheses require q/n <= 1/2 for bit-wise noise")
    lo = np.array(
        [BitString(instance.n, s).leading_ones() for s in range(1 << instance.n)]
    )
    P = tm.matrix
    violations = []
    for x in range(P.shape[0]):
        for y in range(P.shape[0]):
            if lo[x] < lo[y] and P[x, y] < P[y, x] - tol:
                violations.append((x, y))
    return violations


def export_matrix_csv(tm: TransitionMatrix, path: str) -> None:
    """Dump nonzero transitions as ``state_from,state_to,prob`` rows."""
    with open(path, "w", newline="") as fh:
        fh.write("state_from,state_to,prob\n")
        P = tm.matrix
        for x in range(P.shape[0]):
            for y in range(P.shape[1]):
                if P[x, y] > 0.0:
                    fh.write(f"{x},{y},{P[x, y]!r}\n")
