"""Non-dominated sorting, crowding distance and NSGA-II survivor selection.

The array kernels (``rank_objectives``, ``crowding_by_front``,
``select_survivors``) drive the generation loop; the list-of-Individual
functions are thin wrappers over them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .genome import Individual, Population, RandomSource


@dataclass
class RankedPopulation:
    individuals: list[Individual]
    fronts: list[list[int]]


def dominance_matrix(objectives: np.ndarray) -> np.ndarray:
    """``dom[i, j]`` is True iff row i strictly dominates row j (maximization)."""
    f1, f2 = objectives[:, 0], objectives[:, 1]
    ge = (f1[:, None] >= f1[None, :]) & (f2[:, None] >= f2[None, :])
    gt = (f1[:, None] > f1[None, :]) | (f2[:, None] > f2[None, :])
    return ge & gt


def _peel(dom: np.ndarray) -> np.ndarray:
    dominated_by = dom.sum(axis=0)
    ranks = np.zeros(dom.shape[0], dtype=np.int64)
    current = np.flatnonzero(dominated_by == 0)
    r = 1
    while current.size:
        ranks[current] = r
        dominated_by = dominated_by - dom[current].sum(axis=0)
        dominated_by[current] = -1
        current = np.flatnonzero(dominated_by == 0)
        r += 1
    return ranks


def rank_objectives(objectives: np.ndarray) -> np.ndarray:
    """1-based non-domination rank of every row of an (m, 2) objective matrix.

    Rank depends only on the objective value, so distinct values are ranked
    once and mapped back; equal values always share a rank.
    """
    lo = objectives.min(axis=0)
    shifted = objectives - lo
    base = int(shifted[:, 1].max()) + 1
    keys = shifted[:, 0] * base + shifted[:, 1]
    uniq, inverse = np.unique(keys, return_inverse=True)
    values = np.stack([uniq // base, uniq % base], axis=1)
    return _peel(dominance_matrix(values))[inverse.reshape(-1)]


def crowding_of_front(objectives: np.ndarray, rng: Optional[RandomSource] = None) -> np.ndarray:
    """Crowding distances for the members of one front (rows of ``objectives``).

    Ties in an objective are ordered by row index, or, when ``rng`` is given,
    by a fresh random order drawn independently for each objective. Boundary
    members of each sorted list get ``inf``; an objective with zero spread
    contributes 0 to interior members.
    """
    m = objectives.shape[0]
    dist = np.zeros(m, dtype=float)
    if m <= 2:
        dist[:] = math.inf
        return dist
    for j in range(objectives.shape[1]):
        if rng is None:
            order = np.argsort(objectives[:, j], kind="stable")
        else:
            order = np.lexsort((rng.gen.random(m), objectives[:, j]))
        vals = objectives[order, j]
        spread = vals[-1] - vals[0]
        if spread > 0:
            dist[order[1:-1]] += (vals[2:] - vals[:-2]) / spread
        dist[order[0]] = math.inf
        dist[order[-1]] = math.inf
    return dist


def crowding_by_front(
    objectives: np.ndarray, ranks: np.ndarray, rng: Optional[RandomSource] = None
) -> np.ndarray:
    """Crowding distance of every row, computed within its own rank."""
    crowd = np.empty(objectives.shape[0], dtype=float)
    for r in np.unique(ranks):
        members = np.flatnonzero(ranks == r)
        crowd[members] = crowding_of_front(objectives[members], rng)
    return crowd


def select_survivors(
    ranks: np.ndarray, crowding: np.ndarray, n_keep: int, rng: RandomSource
) -> np.ndarray:
    """Indices (ascending) of the ``n_keep`` survivors.

    Ranks below the critical rank are kept whole; the critical rank is cut by
    descending crowding distance with uniformly random tie-breaking. Crowding
    values are never recomputed during the cut.
    """
    m = ranks.shape[0]
    if m < n_keep:
        raise ValueError(f"cannot keep {n_keep} of {m} individuals")
    if m == n_keep:
        return np.arange(m)
    counts = np.bincount(ranks)
    cum = np.cumsum(counts)
    critical = int(np.searchsorted(cum, n_keep, side="right"))
    kept = np.flatnonzero(ranks < critical)
    need = n_keep - kept.size
    if need == 0:
        return kept
    pool = np.flatnonzero(ranks == critical)
    # Primary key: crowding descending; secondary: random permutation.
    tie = rng.gen.random(pool.size)
    order = np.lexsort((tie, -crowding[pool]))
    return np.sort(np.concatenate([kept, pool[order[:need]]]))


def rank_and_crowd(pop: Population) -> Population:
    pop.rank = rank_objectives(pop.objectives)
    pop.crowding = crowding_by_front(pop.objectives, pop.rank)
    return pop


def non_dominated_sort(population: list[Individual]) -> RankedPopulation:
    if not population:
        raise ValueError("population must be non-empty")
    objectives = np.array([ind.objectives for ind in population], dtype=np.int64)
    ranks = rank_objectives(objectives)
    individuals = [
        Individual(ind.genome, ind.objectives, int(r), ind.crowding)
        for ind, r in zip(population, ranks)
    ]
    fronts = [np.flatnonzero(ranks == r).tolist() for r in range(1, int(ranks.max()) + 1)]
    return RankedPopulation(individuals, fronts)


def crowding_distances(front: list[Individual]) -> list[float]:
    if not front:
        raise ValueError("front must be non-empty")
    ranks = {ind.rank for ind in front}
    if len(ranks) > 1:
        raise ValueError(f"front mixes ranks {sorted(r for r in ranks if r is not None)}")
    objectives = np.array([ind.objectives for ind in front], dtype=np.int64)
    return crowding_of_front(objectives).tolist()


def survivor_selection(combined: list[Individual], N: int, rng: RandomSource) -> list[Individual]:
    """Rank and crowd ``combined``, then keep N of them; survivors carry rank and crowding."""
    if len(combined) < N:
        raise ValueError(f"cannot select {N} survivors from {len(combined)} individuals")
    pop = rank_and_crowd(Population.from_individuals(combined))
    keep = select_survivors(pop.rank, pop.crowding, N, rng)
    return [
        combined[i].with_ranking(int(pop.rank[i]), float(pop.crowding[i])) for i in keep
    ]
