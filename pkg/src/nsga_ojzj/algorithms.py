"""NSGA-II and GSEMO on OneJumpZeroJump with evaluation counting and stage tracking."""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, TextIO

import numpy as np

from .genome import Individual, Population, RandomSource
from .objectives import OjzjProblem, Stage, evaluate_batch, stage_of_arrays
from .operators import (
    MutationKind,
    MutationOperator,
    SelectionScheme,
    heavy_tailed_distribution,
    mutate_batch,
    select_indices,
    uniform_crossover_batch,
)
from .ranking import RankedPopulation, crowding_by_front, rank_objectives, select_survivors

DEFAULT_CAP_FACTOR = 100 * 10


CROWDING_TIES = ("index", "random")


class Algorithm(str, enum.Enum):
    NSGA2 = "nsga2"
    GSEMO = "gsemo"


@dataclass(frozen=True)
class AlgorithmConfig:
    problem: OjzjProblem
    algorithm: Algorithm = Algorithm.NSGA2
    population_size: int = 4
    selection: SelectionScheme = SelectionScheme.INDEPENDENT_TOURNAMENTS
    mutation: MutationOperator = MutationOperator(MutationKind.BITWISE)
    crossover_probability: float = 0.0
    max_evaluations: Optional[int] = None
    assert_lemma1: bool = False
    record_stages: bool = True
    # Resample initial individuals until all lie in the inner Pareto set.
    init_inner_only: bool = False
    # Tie order inside the crowding-distance sorts: "index" or "random"
    # (independent per objective, drawn from the run's RandomSource).
    crowding_ties: str = "index"

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        object.__setattr__(self, "selection", SelectionScheme(self.selection))
        if self.crowding_ties not in CROWDING_TIES:
            raise ValueError(f"crowding_ties must be one of {CROWDING_TIES}, got {self.crowding_ties!r}")
        if not 0.0 <= self.crossover_probability <= 1.0:
            raise ValueError(f"crossover probability must lie in [0, 1], got {self.crossover_probability}")
        if self.max_evaluations is not None and self.max_evaluations < 1:
            raise ValueError(f"max_evaluations must be positive, got {self.max_evaluations}")
        if self.algorithm is Algorithm.GSEMO:
            if self.crossover_probability > 0:
                raise ValueError("crossover is only supported for NSGA-II")
            return
        N = self.population_size
        if N < 1:
            raise ValueError(f"population size must be positive, got {N}")
        if self.selection is SelectionScheme.INDEPENDENT_TOURNAMENTS and N < 2:
            raise ValueError("independent tournaments need N >= 2")
        if N % 2 and (self.selection is SelectionScheme.TWO_PERMUTATION or self.crossover_probability > 0):
            raise ValueError(f"two-permutation tournaments and crossover need an even N, got {N}")

    @property
    def lemma1_applies(self) -> bool:
        return self.population_size >= 4 * self.problem.front_size

    @property
    def evaluation_cap(self) -> int:
        if self.max_evaluations is not None:
            return self.max_evaluations
        n, k = self.problem.n, self.problem.k
        size = self.population_size if self.algorithm is Algorithm.NSGA2 else self.problem.front_size
        return DEFAULT_CAP_FACTOR * size * n**k


@dataclass
class RunRecord:
    seed: int
    covered: bool = False
    evaluations: int = 0
    evaluations_to_cover: Optional[int] = None
    stage1_end: Optional[int] = None
    stage2_end: Optional[int] = None
    stage3_end: Optional[int] = None
    generations: int = 0
    lemma1_violations: int = 0
    crowding_bound_violations: int = 0
    stage_regressions: int = 0

    @property
    def did_not_finish(self) -> bool:
        return not self.covered


@dataclass
class GenerationInfo:
    generation: int
    stage: Stage
    coverage: int
    evaluations: int
    population: Population = field(repr=False)


Observer = Callable[[GenerationInfo], None]


def trace_writer(stream: TextIO) -> Observer:
    """Observer writing one JSON line per generation."""

    def write(info: GenerationInfo) -> None:
        stream.write(
            json.dumps(
                {
                    "generation": info.generation,
                    "stage": info.stage.name,
                    "coverage": info.coverage,
                    "evaluations": info.evaluations,
                }
            )
            + "\n"
        )

    return write


class _StageTracker:
    def __init__(self, record: RunRecord):
        self.record = record
        self.stage: Optional[Stage] = None

    def update(self, stage: Stage, evaluations: int) -> None:
        prev = self.stage
        if prev is not None and stage < prev:
            self.record.stage_regressions += 1
        start = Stage.STAGE1 if prev is None else prev
        for s in range(start, stage):
            attr = f"stage{s}_end"
            if getattr(self.record, attr) is None:
                setattr(self.record, attr, evaluations)
        self.stage = stage


def _objective_keys(objectives: np.ndarray, base: int) -> np.ndarray:
    return objectives[:, 0] * base + objectives[:, 1]


def lemma1_violations_arrays(
    combined_objectives: np.ndarray, combined_ranks: np.ndarray, next_objectives: np.ndarray
) -> int:
    """Number of distinct rank-1 objective values of the combined population
    that are absent from the next parent population."""
    base = int(max(combined_objectives.max(), next_objectives.max())) + 1
    rank1 = np.unique(_objective_keys(combined_objectives[combined_ranks == 1], base))
    kept = _objective_keys(next_objectives, base)
    return int(np.count_nonzero(~np.isin(rank1, kept)))


def crowding_bound_violations_arrays(
    objectives: np.ndarray, ranks: np.ndarray, crowding: np.ndarray, limit: int = 4
) -> int:
    """Rank-1 objective values held by more than ``limit`` individuals of positive crowding."""
    mask = (ranks == 1) & (crowding > 0)
    if not mask.any():
        return 0
    base = int(objectives.max()) + 1
    _, counts = np.unique(_objective_keys(objectives[mask], base), return_counts=True)
    return int(np.count_nonzero(counts > limit))


def check_lemma1(previous_combined: RankedPopulation, next_parents: list[Individual]) -> int:
    combined = Population.from_individuals(previous_combined.individuals)
    ranks = np.array([ind.rank for ind in previous_combined.individuals], dtype=np.int64)
    nxt = Population.from_individuals(next_parents)
    return lemma1_violations_arrays(combined.objectives, ranks, nxt.objectives)


def _initial_genomes(config: AlgorithmConfig, m: int, rng: RandomSource) -> np.ndarray:
    n, k = config.problem.n, config.problem.k
    genomes = rng.gen.random((m, n)) < 0.5
    if config.init_inner_only:
        while True:
            ones = genomes.sum(axis=1)
            bad = np.flatnonzero((ones < k) | (ones > n - k))
            if not bad.size:
                break
            genomes[bad] = rng.gen.random((bad.size, n)) < 0.5
    return genomes


def _variation(config: AlgorithmConfig, parents: np.ndarray, rng: RandomSource) -> np.ndarray:
    p_c = config.crossover_probability
    if p_c > 0:
        first, second = parents[0::2], parents[1::2]
        c1, c2 = uniform_crossover_batch(first, second, rng)
        do_cx = (rng.gen.random(first.shape[0]) < p_c)[:, None]
        parents = np.empty_like(parents)
        parents[0::2] = np.where(do_cx, c1, first)
        parents[1::2] = np.where(do_cx, c2, second)
    return mutate_batch(parents, config.mutation, rng)


def nsga2_run(config: AlgorithmConfig, rng: RandomSource, observer: Optional[Observer] = None) -> RunRecord:
    """One NSGA-II run until the parent population covers the Pareto front or the cap is hit."""
    if config.algorithm is not Algorithm.NSGA2:
        raise ValueError(f"nsga2_run got algorithm={config.algorithm.value}")
    problem = config.problem
    N = config.population_size
    cap = config.evaluation_cap
    instrument = config.assert_lemma1 and config.lemma1_applies
    tie_rng = rng if config.crowding_ties == "random" else None
    record = RunRecord(seed=rng.seed)
    tracker = _StageTracker(record)

    def checkpoint(pop: Population) -> bool:
        stage, coverage = stage_of_arrays(problem, pop.genomes, pop.objectives)
        if config.record_stages:
            tracker.update(stage, record.evaluations)
        if observer is not None:
            observer(GenerationInfo(record.generations, stage, coverage, record.evaluations, pop))
        if stage is Stage.DONE:
            record.covered = True
            record.evaluations_to_cover = record.evaluations
        return record.covered

    if N > cap:
        return record
    genomes = _initial_genomes(config, N, rng)
    objectives = evaluate_batch(problem, genomes)
    record.evaluations = N
    ranks = rank_objectives(objectives)
    pop = Population(genomes, objectives, ranks, crowding_by_front(objectives, ranks, tie_rng))
    if checkpoint(pop):
        return record

    while record.evaluations + N <= cap:
        idx = select_indices(config.selection, pop.rank, pop.crowding, N, rng)
        offspring = _variation(config, pop.genomes[idx], rng)
        off_obj = evaluate_batch(problem, offspring)
        record.evaluations += N

        all_genomes = np.concatenate([pop.genomes, offspring])
        all_obj = np.concatenate([pop.objectives, off_obj])
        ranks = rank_objectives(all_obj)
        crowd = crowding_by_front(all_obj, ranks, tie_rng)
        keep = select_survivors(ranks, crowd, N, rng)
        pop = Population(all_genomes[keep], all_obj[keep], ranks[keep], crowd[keep])
        record.generations += 1

        if instrument:
            record.lemma1_violations += lemma1_violations_arrays(all_obj, ranks, pop.objectives)
            record.crowding_bound_violations += crowding_bound_violations_arrays(all_obj, ranks, crowd)
        if checkpoint(pop):
            break
    return record


# --- GSEMO -----------------------------------------------------------------

_BLOCK = 4096


class _MaskStream:
    """Pre-drawn blocks of (flip mask, parent-choice uniform) for GSEMO.

    Flip masks are n-bit Python ints with bit i set when position i flips.
    """

    def __init__(self, n: int, op: MutationOperator, rng: RandomSource):
        self.n = n
        self.op = op
        self.rng = rng
        self.weights = 1 << np.arange(n, dtype=np.uint64)
        self.dist = heavy_tailed_distribution(n, op.beta) if op.kind is MutationKind.HEAVY_TAILED else None
        self._masks: list[int] = []
        self._choices: list[float] = []
        self._pos = _BLOCK

    def _refill(self) -> None:
        g = self.rng.gen
        n = self.n
        if self.op.kind is MutationKind.ONE_BIT:
            flips = np.zeros((_BLOCK, n), dtype=bool)
            flips[np.arange(_BLOCK), g.integers(0, n, size=_BLOCK)] = True
        elif self.op.kind is MutationKind.BITWISE:
            flips = g.random((_BLOCK, n)) < 1.0 / n
        else:
            alpha = self.dist.sample(self.rng, _BLOCK)
            flips = g.random((_BLOCK, n)) < (alpha / n)[:, None]
        masks = flips.astype(np.uint64) @ self.weights
        self._masks = [int(v) for v in masks]
        self._choices = g.random(_BLOCK).tolist()
        self._pos = 0

    def next(self) -> tuple[int, float]:
        if self._pos == _BLOCK:
            self._refill()
        i = self._pos
        self._pos += 1
        return self._masks[i], self._choices[i]


def _ojzj_value(n: int, k: int, ones: int) -> tuple[int, int]:
    zeros = n - ones
    f1 = k + ones if (ones <= n - k or ones == n) else n - ones
    f2 = k + zeros if (zeros <= n - k or zeros == n) else n - zeros
    return f1, f2


def gsemo_run(config: AlgorithmConfig, rng: RandomSource, observer: Optional[Observer] = None) -> RunRecord:
    """Global SEMO: archive with one individual per non-dominated objective value.

    The observer, if given, is called after initialization and after every
    archive change (not on rejected offspring).
    """
    if config.algorithm is not Algorithm.GSEMO:
        raise ValueError(f"gsemo_run got algorithm={config.algorithm.value}")
    if config.crossover_probability > 0:
        raise ValueError("crossover is only supported for NSGA-II")
    problem = config.problem
    n, k = problem.n, problem.k
    front_sum, front_size = problem.front_sum, problem.front_size
    cap = config.evaluation_cap
    record = RunRecord(seed=rng.seed)
    tracker = _StageTracker(record)
    stream = _MaskStream(n, config.mutation, rng)

    init = _initial_genomes(config, 1, rng)[0]
    x0 = int(init.astype(np.uint64) @ stream.weights)
    archive: list[tuple[int, int, int]] = [(x0, *_ojzj_value(n, k, x0.bit_count()))]
    record.evaluations = 1

    def checkpoint() -> bool:
        on_front = [f1 for _, f1, f2 in archive if f1 + f2 == front_sum]
        n_inner = sum(1 for f1 in on_front if 2 * k <= f1 <= n)
        if n_inner == 0:
            stage = Stage.STAGE1
        elif n_inner < n - 2 * k + 1:
            stage = Stage.STAGE2
        elif len(on_front) < front_size:
            stage = Stage.STAGE3
        else:
            stage = Stage.DONE
        if config.record_stages:
            tracker.update(stage, record.evaluations)
        if observer is not None:
            bits = np.array([[(x >> i) & 1 for i in range(n)] for x, _, _ in archive], dtype=bool)
            objs = np.array([[f1, f2] for _, f1, f2 in archive], dtype=np.int64)
            observer(GenerationInfo(record.generations, stage, len(on_front), record.evaluations, Population(bits, objs)))
        if stage is Stage.DONE:
            record.covered = True
            record.evaluations_to_cover = record.evaluations
        return record.covered

    if checkpoint():
        return record
    while record.evaluations < cap:
        mask, u = stream.next()
        parent = archive[int(u * len(archive))][0]
        child = parent ^ mask
        a, b = _ojzj_value(n, k, child.bit_count())
        record.evaluations += 1
        record.generations += 1
        rejected = False
        for _, c, d in archive:
            if c >= a and d >= b:
                rejected = True
                break
        if rejected:
            continue
        archive = [entry for entry in archive if not (a >= entry[1] and b >= entry[2])]
        archive.append((child, a, b))
        if checkpoint():
            break
    return record


def run(config: AlgorithmConfig, rng: RandomSource, observer: Optional[Observer] = None) -> RunRecord:
    if config.algorithm is Algorithm.GSEMO:
        return gsemo_run(config, rng, observer)
    return nsga2_run(config, rng, observer)


def record_as_dict(record: RunRecord) -> dict:
    return asdict(record)
