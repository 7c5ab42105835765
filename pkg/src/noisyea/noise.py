"""Prior noise models: sampling operations and their exact kernels.

All models perturb the search point *before* evaluation; the algorithm
sees the fitness of the perturbed point while the point itself is kept.
Every application draws fresh randomness (no caching).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .core import BitString, RandomSource


class NoiseKind(enum.Enum):
    NONE = "none"
    ONE_BIT = "onebit"
    BIT_WISE = "bitwise"
    ASYM_ONE_BIT = "asym"


@dataclass(frozen=True)
class NoiseModel:
    """Tagged union of the supported prior-noise models.

    p is the trigger probability. For BIT_WISE, q parameterises the
    per-bit flip probability q/n; q > 1 is allowed, but q/n must stay
    at or below 1/2 unless ``allow_heavy_bitwise`` is set (beyond that
    point the noisy copy is closer to the complement of x than to x).
    The q/n bound depends on n and is therefore checked against each
    dimension via :meth:`check_compatible`.
    """

    kind: NoiseKind
    p: float = 0.0
    q: float = 0.0
    allow_heavy_bitwise: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"noise probability must be in [0,1], got {self.p}")
        if self.kind is NoiseKind.BIT_WISE:
            if self.q < 0.0:
                raise ValueError(f"bit-wise q must be nonnegative, got {self.q}")
        elif self.q:
            raise ValueError(f"{self.kind.value} noise takes no q parameter")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(NoiseKind.NONE)

    @classmethod
    def one_bit(cls, p: float) -> "NoiseModel":
        return cls(NoiseKind.ONE_BIT, p)

    @classmethod
    def bit_wise(cls, p: float, q: float, allow_heavy: bool = False) -> "NoiseModel":
        return cls(NoiseKind.BIT_WISE, p, q, allow_heavy)

    @classmethod
    def asymmetric(cls, p: float) -> "NoiseModel":
        return cls(NoiseKind.ASYM_ONE_BIT, p)

    def check_compatible(self, n: int) -> None:
        """Validate the n-dependent constraints for dimension n."""
        if self.kind is NoiseKind.BIT_WISE:
            if self.q > n:
                raise ValueError(
                    f"per-bit flip probability q/n = {self.q}/{n} exceeds 1"
                )
            if self.q > n / 2 and not self.allow_heavy_bitwise:
                raise ValueError(
                    f"bit-wise noise requires q/n <= 1/2 (q={self.q}, n={n}); "
                    "set allow_heavy_bitwise to lift"
                )

    def p_effective(self) -> float:
        """Effective noise strength: p, or p*min(q,1) for bit-wise noise."""
        if self.kind is NoiseKind.NONE:
            return 0.0
        if self.kind is NoiseKind.BIT_WISE:
            return self.p * min(self.q, 1.0)
        return self.p

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "p": self.p}
        if self.kind is NoiseKind.BIT_WISE:
            d["q"] = self.q
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        kind = NoiseKind(d["kind"])
        if kind is NoiseKind.NONE:
            return cls.none()
        if kind is NoiseKind.BIT_WISE:
            return cls.bit_wise(float(d["p"]), float(d["q"]),
                                bool(d.get("allow_heavy", False)))
        return cls(kind, float(d["p"]))


def apply_noise(x: BitString, model: NoiseModel, rng: RandomSource) -> BitString:
    """Draw one noisy copy of x; with probability 1-p this is x itself."""
    kind = model.kind
    if kind is NoiseKind.NONE:
        return x
    if rng.random() >= model.p:
        return x
    n = x.n
    if kind is NoiseKind.ONE_BIT:
        return x.with_flip(rng.below(n))
    if kind is NoiseKind.BIT_WISE:
        r = model.q / n
        if r <= 0.0:
            return x
        if r >= 1.0:
            return BitString(n, x.word ^ ((1 << n) - 1))
        log1m = math.log(1.0 - r)
        word = x.word
        i = int(math.log(1.0 - rng.random()) / log1m)
        while i < n:
            word ^= 1 << i
            i += 1 + int(math.log(1.0 - rng.random()) / log1m)
        return BitString(n, word)
    # asymmetric one-bit: uniform bit at the boundary, otherwise a fair
    # coin between a uniform 0-bit and a uniform 1-bit
    z = x.count_zeros()
    if z == 0 or z == n:
        return x.with_flip(rng.below(n))
    want = 0 if rng.random() < 0.5 else 1
    while True:
        j = rng.below(n)
        if x.get(j) == want:
            return x.with_flip(j)


def noise_kernel(x: BitString, y: BitString, model: NoiseModel) -> float:
    """Exact probability that one application of noise maps x to y."""
    if x.n != y.n:
        raise ValueError("dimension mismatch")
    n = x.n
    p = model.p
    kind = model.kind
    same = x.word == y.word
    if kind is NoiseKind.NONE:
        return 1.0 if same else 0.0
    if kind is NoiseKind.ONE_BIT:
        if same:
            return 1.0 - p
        return p / n if x.hamming(y) == 1 else 0.0
    if kind is NoiseKind.BIT_WISE:
        r = model.q / n
        d = x.hamming(y)
        prob = p * r**d * (1.0 - r) ** (n - d)
        return prob + (1.0 - p if same else 0.0)
    # asymmetric one-bit
    if same:
        return 1.0 - p
    if x.hamming(y) != 1:
        return 0.0
    z = x.count_zeros()
    if z == 0 or z == n:
        return p / n
    flipped_was_zero = y.word > x.word  # the flip turned a 0 into a 1
    return p / (2 * z) if flipped_was_zero else p / (2 * (n - z))


def prob_noise_occurs(model: NoiseModel, n: int) -> float:
    """P(noisy(x) != x) for any x away from the asymmetric boundary.

    p for one-bit and asymmetric noise, p*(1 - (1-q/n)^n) for bit-wise.
    """
    if model.kind is NoiseKind.NONE:
        return 0.0
    if model.kind is NoiseKind.BIT_WISE:
        r = model.q / n
        if r >= 1.0:
            return model.p
        return model.p * -math.expm1(n * math.log1p(-r))
    return model.p
