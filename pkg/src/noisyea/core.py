"""Search points, benchmark fitness functions and mutation operators."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _finalize(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def mix64(*words: int) -> int:
    """Avalanche-mix any number of integer keys into one 64-bit value.

    Used to derive statistically independent stream seeds from
    (base_seed, cell, run) style tuples; every input word affects
    every output bit.
    """
    h = 0
    for w in words:
        h = _finalize((h + _GAMMA + (w & MASK64)) & MASK64)
    return h


class RandomSource:
    """Deterministic 64-bit counter-based generator (splitmix64).

    The stream is a pure function of the seed, so identical seeds give
    bit-identical draws on every platform, and derived sources created
    with :meth:`spawn` are independent of draw order in the parent.
    Not thread-safe; confine one source to one run.
    """

    __slots__ = ("seed", "_state")

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self._state = self.seed

    def u64(self) -> int:
        self._state = (self._state + _GAMMA) & MASK64
        return _finalize(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.u64() >> 11) * 1.1102230246251565e-16  # 2**-53

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        j = int(self.random() * n)
        return n - 1 if j >= n else j

    def spawn(self, *keys: int) -> "RandomSource":
        """Child source whose stream depends only on (self.seed, keys)."""
        return RandomSource(mix64(self.seed, *keys))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed:#018x})"


class BitString:
    """Immutable bit vector of fixed length n.

    Bits are packed into a single Python integer with position i
    (0-based, i.e. the (i+1)-th character of the string form) stored at
    bit i of ``word``. The packed integer doubles as the state index
    used by the exact oracle.
    """

    __slots__ = ("n", "word")

    def __init__(self, n: int, word: int):
        if n < 1:
            raise ValueError(f"dimension must be positive, got {n}")
        if word < 0 or word >> n:
            raise ValueError(f"word {word:#x} out of range for n={n}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "word", word)

    def __setattr__(self, name, value):
        raise AttributeError("BitString is immutable")

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls(n, 0)

    @classmethod
    def ones(cls, n: int) -> "BitString":
        return cls(n, (1 << n) - 1)

    @classmethod
    def from_str(cls, s: str) -> "BitString":
        """Parse e.g. "1101"; the leftmost character is position 1."""
        if not s or any(c not in "01" for c in s):
            raise ValueError(f"not a bit string: {s!r}")
        word = 0
        for i, c in enumerate(s):
            if c == "1":
                word |= 1 << i
        return cls(len(s), word)

    def to_str(self) -> str:
        return "".join("1" if (self.word >> i) & 1 else "0" for i in range(self.n))

    def get(self, i: int) -> int:
        return (self.word >> i) & 1

    def count_ones(self) -> int:
        return self.word.bit_count()

    def count_zeros(self) -> int:
        return self.n - self.word.bit_count()

    def leading_ones(self) -> int:
        """Length of the all-ones prefix."""
        t = ~self.word & ((1 << self.n) - 1)
        if t == 0:
            return self.n
        return (t & -t).bit_length() - 1

    def with_flip(self, i: int) -> "BitString":
        return BitString(self.n, self.word ^ (1 << i))

    def with_flips(self, positions) -> "BitString":
        word = self.word
        for i in positions:
            word ^= 1 << i
        return BitString(self.n, word)

    def hamming(self, other: "BitString") -> int:
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return (self.word ^ other.word).bit_count()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitString)
            and other.n == self.n
            and other.word == self.word
        )

    def __hash__(self) -> int:
        return hash((self.n, self.word))

    def __repr__(self) -> str:
        return f"BitString('{self.to_str()}')"


class ProblemKind(enum.Enum):
    ONEMAX = "onemax"
    LEADING_ONES = "leadingones"
    HURDLE = "hurdle"


class MutationOperator(enum.Enum):
    STANDARD_BIT = "standard"  # each bit independently with probability 1/n
    ONE_BIT = "onebit"  # exactly one uniformly chosen bit


def eval_onemax(x: BitString) -> int:
    """Number of one-bits."""
    return x.count_ones()


def eval_leadingones(x: BitString) -> int:
    """Length of the longest all-ones prefix."""
    return x.leading_ones()


def eval_hurdle(x: BitString, w: int) -> Fraction:
    """Hurdle fitness -ceil(z/w) - (z mod w)/w over the zero count z.

    Returned as an exact rational so that fitness comparisons are never
    subject to float rounding; the unique maximum 0 is attained at the
    all-ones string.
    """
    if w < 2 or w > x.n:
        raise ValueError(f"hurdle width must satisfy 2 <= w <= n, got w={w} n={x.n}")
    z = x.count_zeros()
    return Fraction(-(((z + w - 1) // w) * w + z % w), w)


@dataclass(frozen=True)
class ProblemInstance:
    """A benchmark fitness function together with its dimension.

    Fitness values of one instance are totally ordered; internally an
    exact integer scale is used (values multiplied by w for Hurdle) so
    the engine and oracle never compare floats.
    """

    kind: ProblemKind
    n: int
    w: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be positive, got {self.n}")
        if self.kind is ProblemKind.HURDLE:
            if self.w is None:
                raise ValueError("hurdle instance requires a width w")
            if not 2 <= self.w <= self.n:
                raise ValueError(
                    f"hurdle width must satisfy 2 <= w <= n, got w={self.w} n={self.n}"
                )
        elif self.w is not None:
            raise ValueError(f"{self.kind.value} takes no width parameter")

    @property
    def scale(self) -> int:
        """Denominator of the exact integer fitness scale."""
        return self.w if self.kind is ProblemKind.HURDLE else 1

    @property
    def optimum(self) -> BitString:
        return BitString.ones(self.n)

    @property
    def optimum_scaled(self) -> int:
        return self.scaled_from_counts(self.n, 0)

    def scaled_from_counts(self, leading: int, zeros: int) -> int:
        """Scaled fitness from (leading-ones, zero-count) summary values."""
        if self.kind is ProblemKind.LEADING_ONES:
            return leading
        if self.kind is ProblemKind.ONEMAX:
            return self.n - zeros
        w = self.w
        return -(((zeros + w - 1) // w) * w + zeros % w)

    def scaled_fitness(self, x: BitString) -> int:
        if x.n != self.n:
            raise ValueError(f"dimension mismatch: instance n={self.n}, point n={x.n}")
        return self.scaled_from_counts(x.leading_ones(), x.count_zeros())

    def fitness_from_scaled(self, scaled: int) -> int | Fraction:
        if self.kind is ProblemKind.HURDLE:
            return Fraction(scaled, self.w)
        return scaled


def evaluate(instance: ProblemInstance, x: BitString) -> int | Fraction:
    """Dispatch to the instance's fitness function.

    Returns an int for OneMax/LeadingOnes and an exact Fraction for
    Hurdle (value scaled_fitness / w).
    """
    if x.n != instance.n:
        raise ValueError(f"dimension mismatch: instance n={instance.n}, point n={x.n}")
    if instance.kind is ProblemKind.ONEMAX:
        return eval_onemax(x)
    if instance.kind is ProblemKind.LEADING_ONES:
        return eval_leadingones(x)
    return eval_hurdle(x, instance.w)


def mutate(x: BitString, op: MutationOperator, rng: RandomSource) -> BitString:
    """One application of the mutation operator; the input is unchanged."""
    n = x.n
    if op is MutationOperator.ONE_BIT:
        return x.with_flip(rng.below(n))
    if n == 1:
        return x.with_flip(0)  # rate 1/n = 1
    # geometric gaps between flipped positions, rate 1/n per bit
    log1m = math.log(1.0 - 1.0 / n)
    word = x.word
    i = int(math.log(1.0 - rng.random()) / log1m)
    while i < n:
        word ^= 1 << i
        i += 1 + int(math.log(1.0 - rng.random()) / log1m)
    return BitString(n, word)


def mutation_kernel(x: BitString, y: BitString, op: MutationOperator) -> float:
    """Exact probability that one mutation of x produces y.

    StandardBit: (1/n)^d (1-1/n)^(n-d) with d the Hamming distance;
    OneBit: 1/n iff d = 1.
    """
    if x.n != y.n:
        raise ValueError("dimension mismatch")
    n = x.n
    d = x.hamming(y)
    if op is MutationOperator.ONE_BIT:
        return 1.0 / n if d == 1 else 0.0
    return (1.0 / n) ** d * (1.0 - 1.0 / n) ** (n - d)
