"""OneJumpZeroJump objective, its exact Pareto front, dominance and run stages."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .genome import BitString, Individual, ones_count

log = logging.getLogger(__name__)

ObjectivePair = tuple[int, int]


@dataclass(frozen=True)
class OjzjProblem:
    """OneJumpZeroJump with string length ``n`` and jump size ``k``.

    Requires 1 <= k <= n/4. ``k == 1`` is accepted (it degenerates to
    OneMinMax) but logged.
    """

    n: int
    k: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.k < 1 or 4 * self.k > self.n:
            raise ValueError(f"jump size must satisfy 1 <= k <= n/4, got n={self.n}, k={self.k}")
        if self.k == 1:
            log.warning("k=1 reduces OneJumpZeroJump to OneMinMax")

    @property
    def front_size(self) -> int:
        return self.n - 2 * self.k + 3

    @property
    def front_sum(self) -> int:
        return self.n + 2 * self.k

    @cached_property
    def front(self) -> "FrontSpec":
        return front_spec(self)

    def evaluate(self, x: BitString) -> ObjectivePair:
        return evaluate(self, x)


@dataclass(frozen=True)
class FrontSpec:
    all_points: frozenset
    inner: frozenset
    outer: frozenset


class Stage(enum.IntEnum):
    STAGE1 = 1
    STAGE2 = 2
    STAGE3 = 3
    DONE = 4


def _objectives_from_ones(n: int, k: int, ones: np.ndarray) -> np.ndarray:
    ones = np.asarray(ones, dtype=np.int64)
    zeros = n - ones
    f1 = np.where((ones <= n - k) | (ones == n), k + ones, n - ones)
    f2 = np.where((zeros <= n - k) | (zeros == n), k + zeros, n - zeros)
    return np.stack([f1, f2], axis=-1)


def evaluate_batch(problem: OjzjProblem, genomes: np.ndarray) -> np.ndarray:
    """Objective matrix (m, 2) for an (m, n) bool genome matrix."""
    if genomes.shape[-1] != problem.n:
        raise ValueError(f"genome length {genomes.shape[-1]} != n={problem.n}")
    return _objectives_from_ones(problem.n, problem.k, genomes.sum(axis=-1))


def evaluate(problem: OjzjProblem, x: BitString) -> ObjectivePair:
    if x.n != problem.n:
        raise ValueError(f"genome length {x.n} != n={problem.n}")
    f1, f2 = _objectives_from_ones(problem.n, problem.k, ones_count(x))
    return int(f1), int(f2)


def front_spec(problem: OjzjProblem) -> FrontSpec:
    n, k = problem.n, problem.k
    inner = frozenset((a, 2 * k + n - a) for a in range(2 * k, n + 1))
    outer = frozenset({(k, n + k), (n + k, k)})
    return FrontSpec(inner | outer, inner, outer)


def strictly_dominates(u: Sequence[int], v: Sequence[int]) -> bool:
    """Maximization: u >= v componentwise with at least one strict inequality."""
    return u[0] >= v[0] and u[1] >= v[1] and (u[0] > v[0] or u[1] > v[1])


def in_inner_pareto_set(problem: OjzjProblem, x: BitString) -> bool:
    if x.n != problem.n:
        raise ValueError(f"genome length {x.n} != n={problem.n}")
    return problem.k <= ones_count(x) <= problem.n - problem.k


def in_outer_pareto_set(problem: OjzjProblem, x: BitString) -> bool:
    if x.n != problem.n:
        raise ValueError(f"genome length {x.n} != n={problem.n}")
    return ones_count(x) in (0, problem.n)


def in_pareto_set(problem: OjzjProblem, x: BitString) -> bool:
    return in_inner_pareto_set(problem, x) or in_outer_pareto_set(problem, x)


def covered_first_objectives(problem: OjzjProblem, objectives: np.ndarray) -> np.ndarray:
    """Sorted distinct f1 values of the front points present in ``objectives``.

    A front point is determined by its f1 value, so this is the covered part
    of the front in compact form.
    """
    f1 = objectives[:, 0]
    on_front = objectives.sum(axis=1) == problem.front_sum
    return np.unique(f1[on_front])


def _stage_from_covered(problem: OjzjProblem, covered_f1: np.ndarray, any_inner: bool) -> Stage:
    n, k = problem.n, problem.k
    if not any_inner:
        return Stage.STAGE1
    n_inner = np.count_nonzero((covered_f1 >= 2 * k) & (covered_f1 <= n))
    if n_inner < n - 2 * k + 1:
        return Stage.STAGE2
    if covered_f1.size < problem.front_size:
        return Stage.STAGE3
    return Stage.DONE


def stage_of_arrays(problem: OjzjProblem, genomes: np.ndarray, objectives: np.ndarray) -> tuple[Stage, int]:
    """(stage, coverage count) of a population given as arrays."""
    ones = genomes.sum(axis=1)
    any_inner = bool(np.any((ones >= problem.k) & (ones <= problem.n - problem.k)))
    covered = covered_first_objectives(problem, objectives)
    return _stage_from_covered(problem, covered, any_inner), int(covered.size)


def classify_stage(problem: OjzjProblem, population: list[Individual]) -> Stage:
    if not population:
        raise ValueError("population must be non-empty")
    any_inner = any(in_inner_pareto_set(problem, ind.genome) for ind in population)
    objectives = np.array([ind.objectives for ind in population], dtype=np.int64)
    return _stage_from_covered(problem, covered_first_objectives(problem, objectives), any_inner)


def coverage_count(front: FrontSpec, population: Iterable[Individual]) -> int:
    return len(front.all_points & {tuple(ind.objectives) for ind in population})
