"""NSGA-II, GSEMO and the OneJumpZeroJump benchmark with a runtime-measurement harness."""

from .algorithms import AlgorithmConfig, RunRecord, check_lemma1, gsemo_run, nsga2_run
from .genome import BitString, Individual, RandomSource, flip_bits, ones_count, random_bitstring
from .harness import ExperimentSpec, run_experiment, summarize, theoretical_bound
from .objectives import (
    FrontSpec,
    OjzjProblem,
    Stage,
    classify_stage,
    coverage_count,
    evaluate,
    front_spec,
    in_inner_pareto_set,
    strictly_dominates,
)
from .operators import HeavyTailedDistribution, MutationOperator, SelectionScheme
from .ranking import crowding_distances, non_dominated_sort, survivor_selection

__version__ = "0.1.0"
