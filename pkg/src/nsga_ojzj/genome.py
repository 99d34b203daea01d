"""Bit-string genomes, seeded randomness and the Individual container."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One round of the SplitMix64 finalizer on a 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, *keys: int) -> int:
    """Mix a master seed with integer keys (grid index, repetition, ...).

    Each key is folded in as ``h = splitmix64(h ^ splitmix64(key))`` starting
    from ``h = splitmix64(master_seed)``. The result is a 64-bit unsigned int.
    """
    h = splitmix64(master_seed & _MASK64)
    for key in keys:
        h = splitmix64(h ^ splitmix64(key & _MASK64))
    return h


class RandomSource:
    """Single-owner random stream.

    Backed by numpy's PCG64 bit generator seeded with the 64-bit ``seed``;
    equal seeds give equal draw sequences. Every stochastic routine in the
    package takes one of these explicitly.
    """

    def __init__(self, seed: int):
        if seed < 0 or seed > _MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.gen = np.random.Generator(np.random.PCG64(self.seed))

    @classmethod
    def for_run(cls, master_seed: int, *keys: int) -> "RandomSource":
        return cls(derive_seed(master_seed, *keys))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed})"


class BitString:
    """Immutable fixed-length bit string; index 0 is the leftmost character."""

    __slots__ = ("_bits",)

    def __init__(self, bits: Iterable[int] | np.ndarray):
        arr = np.array(bits, dtype=bool).reshape(-1)
        if arr.size == 0:
            raise ValueError("bit string must have length >= 1")
        arr.flags.writeable = False
        self._bits = arr

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls([c == "1" for c in text])

    @classmethod
    def ones(cls, n: int) -> "BitString":
        return cls(np.ones(n, dtype=bool))

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls(np.zeros(n, dtype=bool))

    @property
    def bits(self) -> np.ndarray:
        """Read-only boolean view."""
        return self._bits

    @property
    def n(self) -> int:
        return self._bits.size

    def __len__(self) -> int:
        return self._bits.size

    def __getitem__(self, i: int) -> int:
        return int(self._bits[i])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self) -> int:
        return hash((self.n, np.packbits(self._bits).tobytes()))

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self._bits)

    def __repr__(self) -> str:
        return f"BitString('{self}')"


def random_bitstring(n: int, rng: RandomSource) -> BitString:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return BitString(rng.gen.random(n) < 0.5)


def ones_count(x: BitString) -> int:
    return int(np.count_nonzero(x.bits))


def zeros_count(x: BitString) -> int:
    return x.n - ones_count(x)


def flip_bits(x: BitString, positions: Iterable[int]) -> BitString:
    """Return a copy of ``x`` with the given positions flipped."""
    pos = np.fromiter(positions, dtype=np.int64)
    if pos.size and (pos.min() < 0 or pos.max() >= x.n):
        raise IndexError(f"flip positions out of range for n={x.n}: {sorted(pos.tolist())}")
    bits = x.bits.copy()
    bits[np.unique(pos)] ^= True
    return BitString(bits)


@dataclass(frozen=True)
class Individual:
    """Genome plus cached objective pair; rank/crowding set during survival selection.

    ``crowding`` is a float where ``math.inf`` stands for infinite distance.
    """

    genome: BitString
    objectives: tuple[int, int]
    rank: Optional[int] = None
    crowding: Optional[float] = None

    def with_ranking(self, rank: int, crowding: float) -> "Individual":
        return replace(self, rank=rank, crowding=crowding)


@dataclass
class Population:
    """Struct-of-arrays view of a population used inside the generation loop.

    ``genomes`` is an (m, n) bool matrix, ``objectives`` an (m, 2) int64
    matrix. ``rank`` (1-based) and ``crowding`` are None until assigned.
    """

    genomes: np.ndarray
    objectives: np.ndarray
    rank: Optional[np.ndarray] = None
    crowding: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.genomes.shape[0]

    def take(self, idx: np.ndarray) -> "Population":
        return Population(
            self.genomes[idx],
            self.objectives[idx],
            None if self.rank is None else self.rank[idx],
            None if self.crowding is None else self.crowding[idx],
        )

    @classmethod
    def from_individuals(cls, individuals: list[Individual]) -> "Population":
        genomes = np.stack([ind.genome.bits for ind in individuals])
        objectives = np.array([ind.objectives for ind in individuals], dtype=np.int64).reshape(-1, 2)
        rank = crowding = None
        if all(ind.rank is not None for ind in individuals):
            rank = np.array([ind.rank for ind in individuals], dtype=np.int64)
        if all(ind.crowding is not None for ind in individuals):
            crowding = np.array([ind.crowding for ind in individuals], dtype=float)
        return cls(genomes, objectives, rank, crowding)

    def to_individuals(self) -> list[Individual]:
        out = []
        for i in range(len(self)):
            out.append(
                Individual(
                    BitString(self.genomes[i]),
                    (int(self.objectives[i, 0]), int(self.objectives[i, 1])),
                    None if self.rank is None else int(self.rank[i]),
                    None if self.crowding is None else float(self.crowding[i]),
                )
            )
        return out
