"""Compiled run kernels for large sweeps.

Same semantics as ``engine`` (one kernel implements the generation
body; single runs, batches and one-step counting all share it), but
operating on flip-position lists with incrementally maintained fitness
summaries so paper-scale sweeps stay in the nanosecond-per-generation
regime. Randomness is an inline splitmix64 stream seeded per run; the
Python-side ``RandomSource`` implements the identical stream, which the
test suite checks bit-for-bit.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .core import MASK64, BitString, MutationOperator, ProblemKind, ProblemInstance
from .engine import AlgorithmConfig, RunRecord, StoppingRule
from .noise import NoiseKind

KIND_ONEMAX = 0
KIND_LEADINGONES = 1
KIND_HURDLE = 2
MUT_STANDARD = 0
MUT_ONEBIT = 1
NOISE_NONE = 0
NOISE_ONEBIT = 1
NOISE_BITWISE = 2
NOISE_ASYM = 3

_KIND_CODE = {
    ProblemKind.ONEMAX: KIND_ONEMAX,
    ProblemKind.LEADING_ONES: KIND_LEADINGONES,
    ProblemKind.HURDLE: KIND_HURDLE,
}
_MUT_CODE = {
    MutationOperator.STANDARD_BIT: MUT_STANDARD,
    MutationOperator.ONE_BIT: MUT_ONEBIT,
}
_NOISE_CODE = {
    NoiseKind.NONE: NOISE_NONE,
    NoiseKind.ONE_BIT: NOISE_ONEBIT,
    NoiseKind.BIT_WISE: NOISE_BITWISE,
    NoiseKind.ASYM_ONE_BIT: NOISE_ASYM,
}

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.1102230246251565e-16  # 2**-53


@njit(cache=True, nogil=True, inline="always")
def _next_u64(st):
    st[0] = st[0] + _GAMMA
    z = st[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True, nogil=True, inline="always")
def _unit(st):
    return (_next_u64(st) >> _S11) * _INV53


@njit(cache=True, nogil=True, inline="always")
def _below(st, n):
    j = int(_unit(st) * n)
    if j >= n:
        j = n - 1
    return j


@njit(cache=True, nogil=True, inline="always")
def _scaled(kind, w, n, leading, zeros):
    if kind == KIND_LEADINGONES:
        return leading
    if kind == KIND_ONEMAX:
        return n - zeros
    return -(((zeros + w - 1) // w) * w + zeros % w)


@njit(cache=True, nogil=True)
def _z_delta(x, flips, m):
    # change in zero count when flipping the listed positions of x
    d = 0
    for t in range(m):
        if x[flips[t]] == 1:
            d += 1
        else:
            d -= 1
    return d


@njit(cache=True, nogil=True)
def _lo_with_flips(x, n, lx, flips, m):
    # leading ones of (x xor flips), flips sorted ascending, lx = LO(x)
    if m == 0:
        return lx
    if flips[0] < lx:
        return flips[0]
    if flips[0] > lx:
        return lx
    # the first zero was flipped to one; continue scanning
    v = lx + 1
    k = 1
    while v < n:
        b = x[v]
        if k < m and flips[k] == v:
            b ^= 1
            k += 1
        if b == 0:
            return v
        v += 1
    return n


@njit(cache=True, nogil=True)
def _xor_merge(a, na, b, nb, out):
    # symmetric difference of two sorted duplicate-free position lists
    i = 0
    j = 0
    k = 0
    while i < na and j < nb:
        if a[i] == b[j]:
            i += 1
            j += 1
        elif a[i] < b[j]:
            out[k] = a[i]
            k += 1
            i += 1
        else:
            out[k] = b[j]
            k += 1
            j += 1
    while i < na:
        out[k] = a[i]
        k += 1
        i += 1
    while j < nb:
        out[k] = b[j]
        k += 1
        j += 1
    return k


@njit(cache=True, nogil=True)
def _noise_flips(x, n, mflips, mf, zy, noise_kind, p, qn, st, out):
    """Flip positions of one noise application to y = x xor mflips[:mf].

    Returns the number of positions written to out (sorted ascending).
    zy is the zero count of y, needed by the asymmetric model.
    """
    if noise_kind == NOISE_NONE:
        return 0
    if _unit(st) >= p:
        return 0
    if noise_kind == NOISE_ONEBIT:
        out[0] = _below(st, n)
        return 1
    if noise_kind == NOISE_BITWISE:
        if qn <= 0.0:
            return 0
        if qn >= 1.0:
            for i in range(n):
                out[i] = i
            return n
        log1m = math.log(1.0 - qn)
        c = 0
        i = int(math.log(1.0 - _unit(st)) / log1m)
        while i < n:
            out[c] = i
            c += 1
            i += 1 + int(math.log(1.0 - _unit(st)) / log1m)
        return c
    # asymmetric one-bit
    if zy == 0 or zy == n:
        out[0] = _below(st, n)
        return 1
    want = 0 if _unit(st) < 0.5 else 1
    while True:
        j = _below(st, n)
        b = x[j]
        for t in range(mf):
            if mflips[t] == j:
                b ^= 1
                break
        if b == want:
            out[0] = j
            return 1


@njit(cache=True, nogil=True)
def _generation(
    kind, w, n, lam, mut_kind, noise_kind, p, qn, log1m_mut,
    st, x, lx, zx, mflips, nflips, merged, sel,
):
    """One generation of the (1+lam) algorithm on parent x.

    Mutates x in place on acceptance and returns
    (lx, zx, sampled_optimum, best_offspring_true_scaled).
    """
    best_noisy = np.int64(-(2**62))
    best_true = np.int64(-(2**62))
    ties = 0
    nsel = 0
    sel_dz = 0
    sampled = False
    for _ in range(lam):
        # mutation flip positions, sorted
        mf = 0
        if mut_kind == MUT_ONEBIT:
            mflips[0] = _below(st, n)
            mf = 1
        elif n == 1:
            mflips[0] = 0
            mf = 1
        else:
            i = int(math.log(1.0 - _unit(st)) / log1m_mut)
            while i < n:
                mflips[mf] = i
                mf += 1
                i += 1 + int(math.log(1.0 - _unit(st)) / log1m_mut)
        dz = _z_delta(x, mflips, mf)
        zy = zx + dz
        ly = 0
        if kind == KIND_LEADINGONES:
            ly = _lo_with_flips(x, n, lx, mflips, mf)
        ty = _scaled(kind, w, n, ly, zy)
        if zy == 0:
            sampled = True
        if ty > best_true:
            best_true = ty
        nn = _noise_flips(x, n, mflips, mf, zy, noise_kind, p, qn, st, nflips)
        if nn == 0:
            fy = ty
        else:
            nm = _xor_merge(mflips, mf, nflips, nn, merged)
            zp = zx + _z_delta(x, merged, nm)
            lp = 0
            if kind == KIND_LEADINGONES:
                lp = _lo_with_flips(x, n, lx, merged, nm)
            fy = _scaled(kind, w, n, lp, zp)
        if fy > best_noisy:
            best_noisy = fy
            ties = 1
            nsel = mf
            sel_dz = dz
            for t in range(mf):
                sel[t] = mflips[t]
        elif fy == best_noisy:
            ties += 1
            if _below(st, ties) == 0:
                nsel = mf
                sel_dz = dz
                for t in range(mf):
                    sel[t] = mflips[t]
    # fresh noisy evaluation of the parent
    nn = _noise_flips(x, n, mflips, 0, zx, noise_kind, p, qn, st, nflips)
    if nn == 0:
        fx = _scaled(kind, w, n, lx, zx)
    else:
        zp = zx + _z_delta(x, nflips, nn)
        lp = 0
        if kind == KIND_LEADINGONES:
            lp = _lo_with_flips(x, n, lx, nflips, nn)
        fx = _scaled(kind, w, n, lp, zp)
    if best_noisy >= fx:
        for t in range(nsel):
            x[sel[t]] ^= 1
        zx += sel_dz
        lx = 0
        while lx < n and x[lx] == 1:
            lx += 1
    return lx, zx, sampled, best_true


@njit(cache=True, nogil=True)
def _run_kernel(kind, w, n, lam, mut_kind, noise_kind, p, qn, max_gens, seed, x):
    st = np.empty(1, np.uint64)
    st[0] = seed
    zx = 0
    for i in range(n):
        if _unit(st) < 0.5:
            x[i] = 1
        else:
            x[i] = 0
            zx += 1
    lx = 0
    while lx < n and x[lx] == 1:
        lx += 1
    opt = _scaled(kind, w, n, n, 0)
    best = np.int64(_scaled(kind, w, n, lx, zx))
    if zx == 0:
        return True, np.int64(0), best
    log1m_mut = 0.0
    if n > 1:
        log1m_mut = math.log(1.0 - 1.0 / n)
    mflips = np.empty(n, np.int64)
    nflips = np.empty(n, np.int64)
    merged = np.empty(n, np.int64)
    sel = np.empty(n, np.int64)
    for gen in range(1, max_gens + 1):
        lx, zx, sampled, bt = _generation(
            kind, w, n, lam, mut_kind, noise_kind, p, qn, log1m_mut,
            st, x, lx, zx, mflips, nflips, merged, sel,
        )
        if bt > best:
            best = bt
        if sampled:
            return True, np.int64(gen), np.int64(opt)
    return False, np.int64(max_gens), best


@njit(cache=True, nogil=True)
def _run_batch(
    kind, w, n, lam, mut_kind, noise_kind, p, qn, max_gens,
    seeds, succ_out, gens_out, best_out,
):
    x = np.empty(n, np.uint8)
    for r in range(seeds.size):
        s, g, b = _run_kernel(
            kind, w, n, lam, mut_kind, noise_kind, p, qn, max_gens, seeds[r], x
        )
        succ_out[r] = 1 if s else 0
        gens_out[r] = g
        best_out[r] = b


@njit(cache=True, nogil=True)
def _one_step_counts(
    kind, w, n, lam, mut_kind, noise_kind, p, qn,
    x0, steps, seed, counts_all, counts_nosample,
):
    """Independent single generations from x0; counts over next parents.

    counts_all[s] counts every outcome with next parent s;
    counts_nosample only those where no offspring was the optimum.
    Returns the number of steps in which the optimum was sampled.
    """
    st = np.empty(1, np.uint64)
    st[0] = seed
    x = np.empty(n, np.uint8)
    mflips = np.empty(n, np.int64)
    nflips = np.empty(n, np.int64)
    merged = np.empty(n, np.int64)
    sel = np.empty(n, np.int64)
    zx0 = 0
    for i in range(n):
        if x0[i] == 0:
            zx0 += 1
    lx0 = 0
    while lx0 < n and x0[lx0] == 1:
        lx0 += 1
    log1m_mut = 0.0
    if n > 1:
        log1m_mut = math.log(1.0 - 1.0 / n)
    sampled_count = 0
    for _ in range(steps):
        for i in range(n):
            x[i] = x0[i]
        _, _, sampled, _ = _generation(
            kind, w, n, lam, mut_kind, noise_kind, p, qn, log1m_mut,
            st, x, lx0, zx0, mflips, nflips, merged, sel,
        )
        idx = 0
        for i in range(n):
            if x[i]:
                idx |= 1 << i
        counts_all[idx] += 1
        if sampled:
            sampled_count += 1
        else:
            counts_nosample[idx] += 1
    return sampled_count


@njit(cache=True, nogil=True)
def _baseline_best(kind, w, n, samples, seed):
    st = np.empty(1, np.uint64)
    st[0] = seed
    best = np.int64(-(2**62))
    for _ in range(samples):
        if kind == KIND_LEADINGONES:
            # only the prefix up to the first zero matters
            f = 0
            while f < n and _unit(st) < 0.5:
                f += 1
        else:
            z = 0
            for _i in range(n):
                if _unit(st) >= 0.5:
                    z += 1
            f = _scaled(kind, w, n, 0, z)
        if f > best:
            best = np.int64(f)
    return best


@njit(cache=True, nogil=True)
def _stream_u64(seed, out):
    st = np.empty(1, np.uint64)
    st[0] = seed
    for i in range(out.size):
        out[i] = _next_u64(st)


def _codes(instance: ProblemInstance, cfg: AlgorithmConfig):
    cfg.noise.check_compatible(instance.n)
    kind = _KIND_CODE[instance.kind]
    w = instance.w if instance.w is not None else 1
    mut = _MUT_CODE[cfg.mutation]
    nz = _NOISE_CODE[cfg.noise.kind]
    qn = cfg.noise.q / instance.n if cfg.noise.kind is NoiseKind.BIT_WISE else 0.0
    return kind, w, mut, nz, cfg.noise.p, qn


def run_one(
    instance: ProblemInstance,
    cfg: AlgorithmConfig,
    stop: StoppingRule,
    seed: int,
) -> RunRecord:
    """Compiled counterpart of ``engine.run`` for a single seeded run."""
    kind, w, mut, nz, p, qn = _codes(instance, cfg)
    x = np.empty(instance.n, np.uint8)
    success, gens, best = _run_kernel(
        kind, w, instance.n, cfg.lam, mut, nz, p, qn,
        stop.max_generations, np.uint64(seed & MASK64), x,
    )
    word = 0
    for i in range(instance.n):
        if x[i]:
            word |= 1 << i
    return RunRecord(
        bool(success),
        int(gens),
        1 + (cfg.lam + 1) * int(gens),
        instance.fitness_from_scaled(int(best)),
        BitString(instance.n, word),
    )


def run_many(
    instance: ProblemInstance,
    cfg: AlgorithmConfig,
    stop: StoppingRule,
    seeds: np.ndarray,
):
    """Batch of independent runs, one per seed.

    Returns (success uint8, generations int64, best_true_scaled int64)
    arrays aligned with ``seeds``.
    """
    kind, w, mut, nz, p, qn = _codes(instance, cfg)
    seeds = np.ascontiguousarray(seeds, dtype=np.uint64)
    succ = np.empty(seeds.size, np.uint8)
    gens = np.empty(seeds.size, np.int64)
    best = np.empty(seeds.size, np.int64)
    _run_batch(
        kind, w, instance.n, cfg.lam, mut, nz, p, qn,
        stop.max_generations, seeds, succ, gens, best,
    )
    return succ, gens, best


def one_step_distribution(
    instance: ProblemInstance,
    cfg: AlgorithmConfig,
    start: BitString,
    steps: int,
    seed: int,
):
    """Empirical one-generation outcome counts from a fixed parent.

    Returns (counts_all, counts_without_optimum_sample, sampled_count);
    state indices read the bit string as an integer, first position at
    the least significant bit.
    """
    if start.n != instance.n:
        raise ValueError("dimension mismatch")
    kind, w, mut, nz, p, qn = _codes(instance, cfg)
    x0 = np.array([start.get(i) for i in range(start.n)], dtype=np.uint8)
    counts_all = np.zeros(1 << instance.n, np.int64)
    counts_ns = np.zeros(1 << instance.n, np.int64)
    sampled = _one_step_counts(
        kind, w, instance.n, cfg.lam, mut, nz, p, qn,
        x0, steps, np.uint64(seed & MASK64), counts_all, counts_ns,
    )
    return counts_all, counts_ns, int(sampled)


def uniform_best(instance: ProblemInstance, samples: int, seed: int) -> int:
    """Best scaled true fitness among uniform random samples."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    kind = _KIND_CODE[instance.kind]
    w = instance.w if instance.w is not None else 1
    return int(
        _baseline_best(kind, w, instance.n, samples, np.uint64(seed & MASK64))
    )


def stream_u64(seed: int, count: int) -> np.ndarray:
    """The raw kernel random stream; test hook for RandomSource parity."""
    out = np.empty(count, np.uint64)
    _stream_u64(np.uint64(seed & MASK64), out)
    return out
