import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from nsga_ojzj.genome import BitString, Individual, RandomSource, ones_count
from nsga_ojzj.operators import (
    HeavyTailedDistribution,
    MutationOperator,
    SelectionScheme,
    binary_tournament,
    bitwise_batch,
    hamming_step_probabilities,
    heavy_tailed_batch,
    mutate_batch,
    mutate_bitwise,
    mutate_heavy_tailed,
    mutate_one_bit,
    sample_alpha,
    select_fair,
    select_independent_tournaments,
    select_indices,
    select_two_permutation,
    select_uniform,
    two_permutation_indices,
    uniform_crossover,
)

INF = math.inf


def labelled(i, rank=1, crowding=0.0):
    return Individual(BitString([i % 2]), (i, 0), rank, crowding)


def hamming(a, b):
    return int(np.count_nonzero(a.bits != b.bits))


# --- selection -------------------------------------------------------------


def test_fair_is_identity():
    pop = [labelled(i) for i in range(3)]
    assert select_fair(pop) == pop


def test_uniform_single():
    pop = [labelled(0)]
    assert select_uniform(pop, RandomSource(1)) == pop


def test_uniform_frequencies():
    rng = RandomSource(3)
    draws = np.concatenate([select_indices("uniform", None, None, 4, rng) for _ in range(25_000)])
    counts = np.bincount(draws, minlength=4)
    sd = math.sqrt(draws.size * 0.25 * 0.75)
    assert np.all(np.abs(counts - draws.size / 4) < 3 * sd)


def test_uniform_never_selected_fraction():
    rng = RandomSource(4)
    N, trials = 100, 10_000
    missed = [N - np.unique(select_indices("uniform", None, None, N, rng)).size for _ in range(trials)]
    expected = (1 - 1 / N) ** N
    assert np.mean(missed) / N == pytest.approx(expected, abs=0.003)
    assert 1 - expected >= 1 - 1 / math.e


def test_tournament_lower_rank_wins(rng):
    a, b = labelled(0, rank=1, crowding=0.0), labelled(1, rank=2, crowding=INF)
    assert all(binary_tournament(a, b, rng) is a for _ in range(50))
    assert all(binary_tournament(b, a, rng) is a for _ in range(50))


def test_tournament_infinite_crowding_wins(rng):
    a, b = labelled(0, crowding=INF), labelled(1, crowding=2.0)
    assert all(binary_tournament(a, b, rng) is a for _ in range(50))


def test_tournament_coin_flip():
    rng = RandomSource(8)
    a, b = labelled(0, crowding=1.0), labelled(1, crowding=1.0)
    trials = 10_000
    wins = sum(binary_tournament(a, b, rng) is a for _ in range(trials))
    assert abs(wins - trials / 2) < 3 * math.sqrt(trials / 4)


def test_tournament_needs_ranking(rng):
    with pytest.raises(ValueError):
        binary_tournament(Individual(BitString([0]), (0, 0)), labelled(1), rng)


def test_independent_tournaments_n2():
    rng = RandomSource(9)
    a, b = labelled(0, rank=1), labelled(1, rank=2)
    for _ in range(20):
        assert select_independent_tournaments([a, b], rng) == [a, a]


def test_independent_tournaments_participation():
    # a fixed individual takes part in a given tournament with probability 2/N
    rng = RandomSource(10)
    N = 10
    rank = np.full(N, 2)
    rank[0] = 1
    crowd = np.zeros(N)
    trials = 5000
    picks = np.array([np.count_nonzero(select_indices("tournament", rank, crowd, N, rng) == 0) for _ in range(trials)])
    p = 2 / N
    assert abs(picks.mean() - N * p) < 3 * math.sqrt(N * p * (1 - p) / trials)


def test_independent_tournaments_rejects_single():
    with pytest.raises(ValueError):
        select_independent_tournaments([labelled(0)], RandomSource(1))


def test_two_permutation_structure():
    rng = RandomSource(11)
    N = 8
    rank = np.arange(1, N + 1)  # strict order: the tournament winner is always the lower index
    crowd = np.zeros(N)
    for _ in range(200):
        out = two_permutation_indices(rank, crowd, rng)
        counts = Counter(out.tolist())
        assert len(out) == N
        assert counts[0] == 2  # best individual wins both of its tournaments
        assert N - 1 not in counts  # worst loses both


def test_two_permutation_contestant_counts():
    # replay the permutations drawn inside two_permutation_indices
    seed = 12
    N = 10
    g = np.random.Generator(np.random.PCG64(seed))
    pairs = np.concatenate([g.permutation(N), g.permutation(N)])
    assert np.all(np.bincount(pairs, minlength=N) == 2)
    rank = np.ones(N, dtype=int)
    out = two_permutation_indices(rank, np.zeros(N), RandomSource(seed))
    assert set(out.tolist()) <= set(pairs.tolist())


def test_two_permutation_best_selected_at_least_three_quarters():
    # unique minimal-rank infinite-crowding individual vs. equals elsewhere
    rng = RandomSource(13)
    N = 8
    rank = np.full(N, 1)
    crowd = np.full(N, INF)
    trials = 4000
    hits = sum(np.any(two_permutation_indices(rank, crowd, rng) == 0) for _ in range(trials))
    assert hits / trials > 0.75 - 3 * math.sqrt(0.75 * 0.25 / trials)


def test_two_permutation_rejects_odd():
    with pytest.raises(ValueError):
        select_two_permutation([labelled(i) for i in range(3)], RandomSource(1))


@settings(max_examples=40)
@given(st.sampled_from(list(SelectionScheme)), st.integers(1, 20).map(lambda h: 2 * h), st.integers(0, 2**32))
def test_every_scheme_returns_n_members(scheme, N, seed):
    rng = RandomSource(seed)
    rank = rng.gen.integers(1, 4, size=N)
    crowd = rng.gen.random(N)
    idx = select_indices(scheme, rank, crowd, N, rng)
    assert idx.shape == (N,)
    assert np.all((idx >= 0) & (idx < N))


# --- mutation --------------------------------------------------------------


def test_one_bit_n1():
    rng = RandomSource(1)
    assert all(str(mutate_one_bit(BitString([0]), rng)) == "1" for _ in range(20))


def test_one_bit_hamming_and_uniform_positions():
    rng = RandomSource(2)
    x = BitString([0] * 8)
    trials = 10_000
    pos = np.zeros(8)
    for _ in range(trials):
        y = mutate_one_bit(x, rng)
        assert hamming(x, y) == 1
        pos += y.bits
    sd = math.sqrt(trials / 8 * 7 / 8)
    assert np.all(np.abs(pos - trials / 8) < 3 * sd)


def test_bitwise_unchanged_probability_and_mean_distance():
    rng = RandomSource(3)
    n, trials = 20, 100_000
    x = np.zeros((trials, n), dtype=bool)
    flips = bitwise_batch(x, rng).sum(axis=1)
    p0 = (1 - 1 / n) ** n
    assert p0 == pytest.approx(0.358, abs=5e-4)
    assert abs(np.mean(flips == 0) - p0) < 3 * math.sqrt(p0 * (1 - p0) / trials)
    assert abs(flips.mean() - 1) < 3 * math.sqrt((1 - 1 / n) / trials)


def test_bitwise_specific_two_bit_flip():
    rng = RandomSource(4)
    n, k, trials = 8, 2, 1_000_000
    x = np.zeros((trials, n), dtype=bool)
    y = bitwise_batch(x, rng)
    target = np.zeros(n, dtype=bool)
    target[[1, 5]] = True
    hits = np.count_nonzero(np.all(y == target, axis=1))
    p = n**-k * (1 - 1 / n) ** (n - k)
    assert p >= 1 / (math.e * n**k)
    assert abs(hits / trials - p) < 3 * math.sqrt(p * (1 - p) / trials)


def test_single_mutations_leave_input(rng):
    x = BitString([1, 0, 1, 1, 0, 0, 1, 0])
    before = str(x)
    dist = HeavyTailedDistribution(8, 1.5)
    for y in (mutate_bitwise(x, rng), mutate_heavy_tailed(x, dist, rng), mutate_one_bit(x, rng)):
        assert y.n == 8
    assert str(x) == before


def test_alpha_n4_beta2():
    dist = HeavyTailedDistribution(4, 2.0)
    assert dist.normalizer == pytest.approx(1.25)
    assert dist.pmf(1) == pytest.approx(0.8)
    assert dist.pmf(2) == pytest.approx(0.2)
    assert dist.pmf(3) == 0.0


@pytest.mark.parametrize("n, beta", [(4, 2.0), (7, 1.5), (30, 1.5), (100, 1.1), (1000, 3.0)])
def test_distribution_normalized_and_c_bound(n, beta):
    dist = HeavyTailedDistribution(n, beta)
    assert dist.cutoff == n // 2
    assert math.fsum(dist.probabilities) == pytest.approx(1.0, abs=1e-12)
    assert dist.normalizer <= beta / (beta - 1)


def test_distribution_rejects_beta():
    with pytest.raises(ValueError):
        HeavyTailedDistribution(10, 1.0)
    with pytest.raises(ValueError):
        MutationOperator("heavy-tailed", 0.5)


def test_alpha_support(rng):
    dist = HeavyTailedDistribution(9, 1.5)
    draws = [sample_alpha(dist, rng) for _ in range(2000)]
    assert min(draws) >= 1 and max(draws) <= 4


def test_alpha_frequencies_n30():
    dist = HeavyTailedDistribution(30, 1.5)
    draws = dist.sample(RandomSource(5), 1_000_000)
    counts = np.bincount(draws, minlength=16)[1:]
    expected = np.array([a**-1.5 for a in range(1, 16)]) / sum(a**-1.5 for a in range(1, 16))
    sd = np.sqrt(1_000_000 * expected * (1 - expected))
    assert np.all(np.abs(counts - 1_000_000 * expected) < 3 * sd + 1)


def exact_hamming(n, beta):
    """Independent oracle: mix scipy binomial pmfs over the power-law weights."""
    alphas = np.arange(1, n // 2 + 1)
    w = alphas ** -beta
    w /= w.sum()
    j = np.arange(n + 1)
    return sum(wa * stats.binom.pmf(j, n, a / n) for a, wa in zip(alphas, w))


@pytest.mark.parametrize("n, beta", [(20, 1.5), (30, 1.5), (31, 2.5)])
def test_hamming_step_probabilities_match_oracle(n, beta):
    ours = hamming_step_probabilities(HeavyTailedDistribution(n, beta))
    np.testing.assert_allclose(ours, exact_hamming(n, beta), rtol=1e-10, atol=1e-15)
    assert ours.sum() == pytest.approx(1.0)


def test_heavy_tailed_hamming_frequencies():
    n, trials = 30, 400_000
    dist = HeavyTailedDistribution(n, 1.5)
    y = heavy_tailed_batch(np.zeros((trials, n), dtype=bool), dist, RandomSource(6))
    counts = np.bincount(y.sum(axis=1), minlength=n + 1)
    exact = exact_hamming(n, 1.5)
    for j in range(1, 9):
        sd = math.sqrt(trials * exact[j] * (1 - exact[j]))
        assert abs(counts[j] - trials * exact[j]) < 3.5 * sd
        # power-law lower bound shape: P_j * C * j^beta is bounded below
        if j >= 2:
            assert exact[j] >= 0.05 * j**-1.5 / dist.normalizer


def test_heavy_tailed_conditional_mean():
    # with alpha fixed at n/2 the expected number of flips is alpha
    n = 20
    dist = HeavyTailedDistribution(n, 1.5)
    g = RandomSource(7).gen
    flips = (g.random((50_000, n)) < (dist.cutoff / n)).sum(axis=1)
    assert flips.mean() == pytest.approx(dist.cutoff, abs=0.05)


def test_heavy_tailed_alpha_resampled_per_row():
    dist = HeavyTailedDistribution(40, 1.5)
    y = heavy_tailed_batch(np.zeros((20_000, 40), dtype=bool), dist, RandomSource(8))
    flips = y.sum(axis=1)
    exact = exact_hamming(40, 1.5)
    # a single shared alpha would put all rows on one binomial and miss both targets
    for observed, p in ((np.mean(flips == 1), exact[1]), (np.mean(flips >= 8), exact[8:].sum())):
        assert abs(observed - p) < 3.5 * math.sqrt(p * (1 - p) / flips.size)


def test_mutate_batch_dispatch(rng):
    x = np.zeros((5, 10), dtype=bool)
    assert np.all(mutate_batch(x, MutationOperator("one-bit"), rng).sum(axis=1) == 1)
    assert mutate_batch(x, MutationOperator("bitwise"), rng).shape == (5, 10)
    assert mutate_batch(x, MutationOperator("heavy-tailed", 1.5), rng).shape == (5, 10)


# --- crossover -------------------------------------------------------------


def test_crossover_identical_parents(rng):
    x = BitString([1, 0, 0, 1, 1])
    assert uniform_crossover(x, x, rng) == (x, x)


@given(st.integers(1, 30).flatmap(lambda n: st.tuples(
    st.lists(st.booleans(), min_size=n, max_size=n),
    st.lists(st.booleans(), min_size=n, max_size=n))), st.integers(0, 2**32))
def test_crossover_conservation(parents, seed):
    p1, p2 = BitString(parents[0]), BitString(parents[1])
    c1, c2 = uniform_crossover(p1, p2, RandomSource(seed))
    for i in range(p1.n):
        assert sorted((c1[i], c2[i])) == sorted((p1[i], p2[i]))
    assert ones_count(c1) + ones_count(c2) == ones_count(p1) + ones_count(p2)
    assert np.array_equal(c1.bits ^ c2.bits, p1.bits ^ p2.bits)


def test_crossover_inherits_half():
    rng = RandomSource(9)
    p1, p2 = BitString([1] * 40), BitString([0] * 40)
    ones = [ones_count(uniform_crossover(p1, p2, rng)[0]) for _ in range(5000)]
    assert np.mean(ones) == pytest.approx(20, abs=3 * math.sqrt(10 / 5000))


def test_crossover_length_mismatch(rng):
    with pytest.raises(ValueError):
        uniform_crossover(BitString([1, 0]), BitString([1]), rng)
