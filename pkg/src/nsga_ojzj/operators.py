"""Parent selection, mutation and uniform crossover.

Batch functions work on index arrays / (m, n) bool genome matrices and are
what the generation loop uses. The single-individual functions are the same
code applied to a batch of one.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .genome import BitString, Individual, RandomSource


class SelectionScheme(str, enum.Enum):
    FAIR = "fair"
    UNIFORM = "uniform"
    INDEPENDENT_TOURNAMENTS = "tournament"
    TWO_PERMUTATION = "two-perm"


class MutationKind(str, enum.Enum):
    ONE_BIT = "one-bit"
    BITWISE = "bitwise"
    HEAVY_TAILED = "heavy-tailed"


@dataclass(frozen=True)
class MutationOperator:
    kind: MutationKind
    beta: float = 1.5

    def __post_init__(self):
        object.__setattr__(self, "kind", MutationKind(self.kind))
        if self.kind is MutationKind.HEAVY_TAILED and not self.beta > 1:
            raise ValueError(f"heavy-tailed mutation needs beta > 1, got {self.beta}")


@dataclass(frozen=True)
class HeavyTailedDistribution:
    """Power law Pr[alpha] = alpha**-beta / C on [1..floor(n/2)]."""

    n: int
    beta: float
    cutoff: int = field(init=False)
    normalizer: float = field(init=False)
    probabilities: np.ndarray = field(init=False, repr=False)
    cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"heavy-tailed mutation needs n >= 2, got {self.n}")
        if not self.beta > 1:
            raise ValueError(f"beta must be > 1, got {self.beta}")
        cutoff = self.n // 2
        weights = np.arange(1, cutoff + 1, dtype=float) ** -self.beta
        c = math.fsum(weights)
        probs = weights / c
        cdf = np.cumsum(probs)
        cdf[-1] = 1.0
        object.__setattr__(self, "cutoff", cutoff)
        object.__setattr__(self, "normalizer", c)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "cdf", cdf)

    def pmf(self, alpha: int) -> float:
        if 1 <= alpha <= self.cutoff:
            return float(self.probabilities[alpha - 1])
        return 0.0

    def sample(self, rng: RandomSource, size: int | None = None):
        u = rng.gen.random(size)
        return np.searchsorted(self.cdf, u, side="right") + 1


@lru_cache(maxsize=64)
def heavy_tailed_distribution(n: int, beta: float) -> HeavyTailedDistribution:
    return HeavyTailedDistribution(n, beta)


def hamming_step_probabilities(dist: HeavyTailedDistribution) -> np.ndarray:
    """Exact Pr[H(x, mut(x)) = j] for j = 0..n, mixing Bin(n, alpha/n) over alpha."""
    n = dist.n
    out = np.zeros(n + 1)
    for alpha in range(1, dist.cutoff + 1):
        p = alpha / n
        binom = np.array([math.comb(n, j) * p**j * (1 - p) ** (n - j) for j in range(n + 1)])
        out += dist.pmf(alpha) * binom
    return out


# --- selection -------------------------------------------------------------


def fair_indices(N: int) -> np.ndarray:
    return np.arange(N)


def uniform_indices(N: int, rng: RandomSource) -> np.ndarray:
    if N < 1:
        raise ValueError("population must be non-empty")
    return rng.gen.integers(0, N, size=N)


def tournament_winners(
    a: np.ndarray, b: np.ndarray, rank: np.ndarray, crowding: np.ndarray, rng: RandomSource
) -> np.ndarray:
    """Vectorized binary tournaments between index arrays ``a`` and ``b``.

    Lower rank wins; then larger crowding distance; then a fair coin.
    """
    ra, rb = rank[a], rank[b]
    ca, cb = crowding[a], crowding[b]
    coin = rng.gen.random(a.size) < 0.5
    a_wins = (ra < rb) | ((ra == rb) & ((ca > cb) | ((ca == cb) & coin)))
    return np.where(a_wins, a, b)


def independent_tournament_indices(
    rank: np.ndarray, crowding: np.ndarray, rng: RandomSource
) -> np.ndarray:
    N = rank.size
    if N < 2:
        raise ValueError(f"tournaments need at least 2 individuals, got {N}")
    a = rng.gen.integers(0, N, size=N)
    b = rng.gen.integers(0, N - 1, size=N)
    b = b + (b >= a)
    return tournament_winners(a, b, rank, crowding, rng)


def two_permutation_indices(rank: np.ndarray, crowding: np.ndarray, rng: RandomSource) -> np.ndarray:
    N = rank.size
    if N < 2 or N % 2:
        raise ValueError(f"two-permutation tournaments need an even N >= 2, got {N}")
    pairs = np.concatenate([rng.gen.permutation(N), rng.gen.permutation(N)]).reshape(-1, 2)
    return tournament_winners(pairs[:, 0], pairs[:, 1], rank, crowding, rng)


def select_indices(
    scheme: SelectionScheme, rank: np.ndarray | None, crowding: np.ndarray | None, N: int, rng: RandomSource
) -> np.ndarray:
    scheme = SelectionScheme(scheme)
    if scheme is SelectionScheme.FAIR:
        return fair_indices(N)
    if scheme is SelectionScheme.UNIFORM:
        return uniform_indices(N, rng)
    if rank is None or crowding is None:
        raise ValueError("tournament selection needs rank and crowding distance")
    if scheme is SelectionScheme.INDEPENDENT_TOURNAMENTS:
        return independent_tournament_indices(rank, crowding, rng)
    return two_permutation_indices(rank, crowding, rng)


def _ranking_arrays(population: list[Individual]) -> tuple[np.ndarray, np.ndarray]:
    if any(ind.rank is None or ind.crowding is None for ind in population):
        raise ValueError("tournament contestants need rank and crowding distance")
    rank = np.array([ind.rank for ind in population], dtype=np.int64)
    crowding = np.array([ind.crowding for ind in population], dtype=float)
    return rank, crowding


def select_fair(population: list[Individual]) -> list[Individual]:
    return list(population)


def select_uniform(population: list[Individual], rng: RandomSource) -> list[Individual]:
    return [population[i] for i in uniform_indices(len(population), rng)]


def binary_tournament(a: Individual, b: Individual, rng: RandomSource) -> Individual:
    rank, crowding = _ranking_arrays([a, b])
    w = tournament_winners(np.array([0]), np.array([1]), rank, crowding, rng)[0]
    return a if w == 0 else b


def select_independent_tournaments(population: list[Individual], rng: RandomSource) -> list[Individual]:
    rank, crowding = _ranking_arrays(population)
    return [population[i] for i in independent_tournament_indices(rank, crowding, rng)]


def select_two_permutation(population: list[Individual], rng: RandomSource) -> list[Individual]:
    rank, crowding = _ranking_arrays(population)
    return [population[i] for i in two_permutation_indices(rank, crowding, rng)]


# --- mutation --------------------------------------------------------------


def one_bit_batch(genomes: np.ndarray, rng: RandomSource) -> np.ndarray:
    m, n = genomes.shape
    out = genomes.copy()
    pos = rng.gen.integers(0, n, size=m)
    out[np.arange(m), pos] ^= True
    return out


def bitwise_batch(genomes: np.ndarray, rng: RandomSource) -> np.ndarray:
    n = genomes.shape[1]
    return genomes ^ (rng.gen.random(genomes.shape) < 1.0 / n)


def heavy_tailed_batch(genomes: np.ndarray, dist: HeavyTailedDistribution, rng: RandomSource) -> np.ndarray:
    m, n = genomes.shape
    if n != dist.n:
        raise ValueError(f"genome length {n} != distribution n={dist.n}")
    alpha = dist.sample(rng, m)
    return genomes ^ (rng.gen.random((m, n)) < (alpha / n)[:, None])


def mutate_batch(genomes: np.ndarray, op: MutationOperator, rng: RandomSource) -> np.ndarray:
    if op.kind is MutationKind.BITWISE:
        return bitwise_batch(genomes, rng)
    if op.kind is MutationKind.HEAVY_TAILED:
        return heavy_tailed_batch(genomes, heavy_tailed_distribution(genomes.shape[1], op.beta), rng)
    return one_bit_batch(genomes, rng)


def mutate_one_bit(x: BitString, rng: RandomSource) -> BitString:
    return BitString(one_bit_batch(x.bits[None, :], rng)[0])


def mutate_bitwise(x: BitString, rng: RandomSource) -> BitString:
    return BitString(bitwise_batch(x.bits[None, :], rng)[0])


def sample_alpha(dist: HeavyTailedDistribution, rng: RandomSource) -> int:
    return int(dist.sample(rng))


def mutate_heavy_tailed(x: BitString, dist: HeavyTailedDistribution, rng: RandomSource) -> BitString:
    return BitString(heavy_tailed_batch(x.bits[None, :], dist, rng)[0])


# --- crossover -------------------------------------------------------------


def uniform_crossover_batch(
    first: np.ndarray, second: np.ndarray, rng: RandomSource
) -> tuple[np.ndarray, np.ndarray]:
    """Two-offspring uniform crossover applied row-wise."""
    if first.shape != second.shape:
        raise ValueError(f"parent shapes differ: {first.shape} vs {second.shape}")
    from_first = rng.gen.random(first.shape) < 0.5
    child1 = np.where(from_first, first, second)
    child2 = np.where(from_first, second, first)
    return child1, child2


def uniform_crossover(p1: BitString, p2: BitString, rng: RandomSource) -> tuple[BitString, BitString]:
    if p1.n != p2.n:
        raise ValueError(f"parent lengths differ: {p1.n} vs {p2.n}")
    c1, c2 = uniform_crossover_batch(p1.bits[None, :], p2.bits[None, :], rng)
    return BitString(c1[0]), BitString(c2[0])
