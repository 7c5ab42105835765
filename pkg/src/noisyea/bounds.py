"""Closed-form runtime bounds and the numeric inequality checks behind them.

Quantities like 2M(1-p)^(-M) overflow double precision well inside the
parameter ranges of interest, so every formula is evaluated in log
space and reported both as a raw value (inf on overflow) and as a
natural log.
"""
from __future__ import annotations

import math
from typing import NamedTuple


class RestartBound(NamedTuple):
    """2M(1-p)^(-M) together with its exponential relaxation 2M e^(pM/(1-p))."""

    waiting_time: float
    relaxed: float
    log_waiting_time: float
    log_relaxed: float


class PowerBound(NamedTuple):
    value: float
    log_value: float


class Eq1Values(NamedTuple):
    half_min: float  # (1/2) min(p*ell, 1)
    ratio: float  # p*ell / (1 + p*ell)
    exact: float  # 1 - (1-p)^ell
    upper_min: float  # min(p*ell, 1)
    holds: bool


def restart_bound(M: float, p: float) -> RestartBound:
    """Expected-time bound from restarting arguments.

    A process with failure probability p per step and failure-free
    worst-case median time M finds the target in expected time at most
    2M(1-p)^(-M), which is itself at most 2M e^(pM/(1-p)).
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"requires 0 <= p < 1, got p={p}")
    if M < 1:
        raise ValueError(f"requires M >= 1, got M={M}")
    log_tight = math.log(2.0 * M) - M * math.log1p(-p)
    log_loose = math.log(2.0 * M) + p * M / (1.0 - p)
    return RestartBound(
        _safe_exp(log_tight), _safe_exp(log_loose), log_tight, log_loose
    )


def noisy_restart_bound(M: float, p: float, nu: int) -> PowerBound:
    """2M(1-p)^(-nu*M) for an algorithm evaluating up to nu points per iteration.

    Reduces to the first component of :func:`restart_bound` at nu=1.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"requires 0 <= p < 1, got p={p}")
    if M < 1:
        raise ValueError(f"requires M >= 1, got M={M}")
    if nu < 1:
        raise ValueError(f"requires nu >= 1, got nu={nu}")
    log_value = math.log(2.0 * M) - nu * M * math.log1p(-p)
    return PowerBound(_safe_exp(log_value), log_value)


def eq1_check(p: float, ell: int, tol: float = 1e-12) -> Eq1Values:
    """The chain (1/2)min(pl,1) <= pl/(1+pl) <= 1-(1-p)^l <= min(pl,1).

    Valid for all 0 <= p <= 1 and natural l; ``holds`` reports whether
    the chain is satisfied within tol.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"requires 0 <= p <= 1, got p={p}")
    if ell < 1:
        raise ValueError(f"requires ell >= 1, got ell={ell}")
    pl = p * ell
    half_min = 0.5 * min(pl, 1.0)
    ratio = pl / (1.0 + pl)
    if p >= 1.0:
        exact = 1.0
    else:
        exact = -math.expm1(ell * math.log1p(-p))
    upper = min(pl, 1.0)
    holds = (
        half_min <= ratio + tol and ratio <= exact + tol and exact <= upper + tol
    )
    return Eq1Values(half_min, ratio, exact, upper, holds)


def clone_noise_probability(p: float, n: int, lam: int) -> float:
    """p * (1 - (1-1/n)^n (1-p))^lam.

    Probability that the parent and every mutation-clone among lam
    offspring are all affected by noise, for any noise model with
    per-point occurrence probability p.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"requires 0 <= p <= 1, got p={p}")
    if n < 1 or lam < 1:
        raise ValueError("requires n >= 1 and lam >= 1")
    clone = (1.0 - 1.0 / n) ** n
    return p * (1.0 - clone * (1.0 - p)) ** lam


def mixing_bound(t: int, n: int) -> float:
    """Upper bound (1/2)(1 + (1-2/n)^t) on P(bit = 1) after t rate-1/n flips.

    Tight for the worst start x0 = 1, where it is the exact probability.
    """
    if n < 3:
        raise ValueError(f"requires n >= 3, got n={n}")
    if t < 0:
        raise ValueError(f"requires t >= 0, got t={t}")
    return 0.5 * (1.0 + (1.0 - 2.0 / n) ** t)


def _safe_exp(log_value: float) -> float:
    try:
        return math.exp(log_value)
    except OverflowError:
        return math.inf
