"""Experiment grids, repetitions, summary statistics, CSV output and bound reports."""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .algorithms import Algorithm, AlgorithmConfig, GenerationInfo, RunRecord, run
from .genome import RandomSource, derive_seed
from .operators import (
    MutationKind,
    MutationOperator,
    SelectionScheme,
    hamming_step_probabilities,
    heavy_tailed_distribution,
)

RUN_COLUMNS = [
    "grid_id", "algorithm", "n", "k", "N", "selection", "mutation", "beta", "crossover_prob",
    "repetition", "seed", "covered", "evaluations", "stage1_end", "stage2_end", "stage3_end",
    "generations",
]
SUMMARY_COLUMNS = [
    "grid_id", "algorithm", "n", "k", "N", "selection", "mutation", "beta", "crossover_prob",
    "repetitions", "covered", "dnf", "mean", "std", "min", "max", "bound",
]

E = math.e
BITWISE_K = {
    SelectionScheme.FAIR: 2 * E,
    SelectionScheme.UNIFORM: 2 * E**2 / (E - 1),
    SelectionScheme.INDEPENDENT_TOURNAMENTS: 2 * E**2 / (E - 1),
    SelectionScheme.TWO_PERMUTATION: 8 / 3 * E,
}
HEAVY_TAILED_K = {
    SelectionScheme.FAIR: 2.0,
    SelectionScheme.UNIFORM: 2 * E / (E - 1),
    SelectionScheme.INDEPENDENT_TOURNAMENTS: 2 * E / (E - 1),
    SelectionScheme.TWO_PERMUTATION: 8 / 3,
}


def theoretical_bound(
    n: int, k: int, N: int, selection: SelectionScheme | str, mutation: MutationOperator
) -> float:
    """Asymptotic leading term of the expected-evaluations upper bound.

    Bit-wise mutation: K * N * n**k. Heavy-tailed mutation:
    K * N * binom(n, k) / P_k, where P_k is the exact probability that one
    heavy-tailed mutation flips exactly k bits. The (1 + o(1)) factor is
    dropped.
    """
    selection = SelectionScheme(selection)
    if mutation.kind is MutationKind.BITWISE:
        return BITWISE_K[selection] * N * n**k
    if mutation.kind is MutationKind.HEAVY_TAILED:
        p_k = hamming_step_probabilities(heavy_tailed_distribution(n, mutation.beta))[k]
        return HEAVY_TAILED_K[selection] * N * math.comb(n, k) / p_k
    raise ValueError("one-bit mutation cannot cover the front; no runtime bound exists")


@dataclass
class ExperimentSpec:
    base: AlgorithmConfig
    repetitions: int = 50
    master_seed: int = 0
    # N = round(m * (n - 2k + 3)) for each multiplier m; None keeps base.population_size.
    pop_multipliers: Optional[list[float]] = None
    out_dir: Optional[Path] = None
    trace: Optional[Path] = None
    workers: int = 1

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.pop_multipliers is not None and any(m <= 0 for m in self.pop_multipliers):
            raise ValueError(f"population multipliers must be positive, got {self.pop_multipliers}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def grid(self) -> list[AlgorithmConfig]:
        """All grid points, validated; raises before any run starts."""
        if self.base.algorithm is Algorithm.GSEMO or not self.pop_multipliers:
            return [self.base]
        size = self.base.problem.front_size
        return [replace(self.base, population_size=round(m * size)) for m in self.pop_multipliers]


@dataclass
class SummaryRow:
    grid_id: int
    config: AlgorithmConfig
    repetitions: int
    covered: int
    dnf: int
    mean: Optional[float]
    std: Optional[float]
    min: Optional[int]
    max: Optional[int]
    bound: Optional[float] = None


@dataclass
class ExperimentResult:
    records: list[list[RunRecord]]
    summaries: list[SummaryRow]
    grid: list[AlgorithmConfig] = field(repr=False)


def summarize(records: Sequence[RunRecord], grid_id: int = 0, config: Optional[AlgorithmConfig] = None) -> SummaryRow:
    """Mean and corrected sample std over covered runs; DNF runs only counted."""
    if not records:
        raise ValueError("cannot summarize an empty list of runs")
    done = [r.evaluations_to_cover for r in records if r.covered]
    mean = statistics.fmean(done) if done else None
    std = statistics.stdev(done) if len(done) >= 2 else None
    return SummaryRow(
        grid_id=grid_id,
        config=config,
        repetitions=len(records),
        covered=len(done),
        dnf=len(records) - len(done),
        mean=mean,
        std=std,
        min=min(done) if done else None,
        max=max(done) if done else None,
    )


def bound_for(config: AlgorithmConfig) -> Optional[float]:
    if (
        config.algorithm is not Algorithm.NSGA2
        or config.crossover_probability > 0
        or config.mutation.kind is MutationKind.ONE_BIT
    ):
        return None
    p = config.problem
    return theoretical_bound(p.n, p.k, config.population_size, config.selection, config.mutation)


def _config_fields(config: AlgorithmConfig) -> dict:
    nsga = config.algorithm is Algorithm.NSGA2
    heavy = config.mutation.kind is MutationKind.HEAVY_TAILED
    return {
        "algorithm": config.algorithm.value,
        "n": config.problem.n,
        "k": config.problem.k,
        "N": config.population_size if nsga else "",
        "selection": config.selection.value if nsga else "",
        "mutation": config.mutation.kind.value,
        "beta": repr(float(config.mutation.beta)) if heavy else "",
        "crossover_prob": repr(float(config.crossover_probability)),
    }


def _opt(value) -> str:
    return "" if value is None else str(value)


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.1f}"


def _one_run(task: tuple[AlgorithmConfig, int, bool, int, int]) -> tuple[RunRecord, list[str]]:
    config, seed, want_trace, grid_id, rep = task
    lines: list[str] = []
    observer = None
    if want_trace:

        def observer(info: GenerationInfo) -> None:
            lines.append(
                json.dumps(
                    {
                        "grid_id": grid_id,
                        "repetition": rep,
                        "generation": info.generation,
                        "stage": info.stage.name,
                        "coverage": info.coverage,
                        "evaluations": info.evaluations,
                    }
                )
            )

    return run(config, RandomSource(seed), observer), lines


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    grid = spec.grid()
    tasks = [
        (config, derive_seed(spec.master_seed, gid, rep), spec.trace is not None, gid, rep)
        for gid, config in enumerate(grid)
        for rep in range(spec.repetitions)
    ]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            outputs = list(pool.map(_one_run, tasks, chunksize=1))
    else:
        outputs = [_one_run(t) for t in tasks]

    records: list[list[RunRecord]] = [[] for _ in grid]
    for (_, _, _, gid, _), (record, _) in zip(tasks, outputs):
        records[gid].append(record)
    summaries = []
    for gid, config in enumerate(grid):
        row = summarize(records[gid], gid, config)
        row.bound = bound_for(config)
        summaries.append(row)
    result = ExperimentResult(records, summaries, grid)

    if spec.out_dir is not None:
        write_outputs(result, Path(spec.out_dir))
    if spec.trace is not None:
        path = Path(spec.trace)
        try:
            with path.open("w") as fh:
                for _, lines in outputs:
                    fh.writelines(line + "\n" for line in lines)
        except OSError as exc:
            raise OSError(f"cannot write trace file {path}: {exc.strerror}") from exc
    return result


def runs_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RUN_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for gid, (config, records) in enumerate(zip(result.grid, result.records)):
        fields = _config_fields(config)
        for rep, r in enumerate(records):
            writer.writerow(
                {
                    "grid_id": gid,
                    **fields,
                    "repetition": rep,
                    "seed": r.seed,
                    "covered": int(r.covered),
                    "evaluations": r.evaluations,
                    "stage1_end": _opt(r.stage1_end),
                    "stage2_end": _opt(r.stage2_end),
                    "stage3_end": _opt(r.stage3_end),
                    "generations": r.generations,
                }
            )
    return buf.getvalue()


def summary_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in result.summaries:
        writer.writerow(
            {
                "grid_id": row.grid_id,
                **_config_fields(row.config),
                "repetitions": row.repetitions,
                "covered": row.covered,
                "dnf": row.dnf,
                "mean": _fmt(row.mean),
                "std": _fmt(row.std),
                "min": _opt(row.min),
                "max": _opt(row.max),
                "bound": _fmt(row.bound),
            }
        )
    return buf.getvalue()


def write_outputs(result: ExperimentResult, out_dir: Path) -> None:
    for name, text in (("runs.csv", runs_csv(result)), ("summary.csv", summary_csv(result))):
        path = out_dir / name
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def format_table(summaries: Sequence[SummaryRow]) -> str:
    """Plain-text table, one line per grid point."""
    header = ["algorithm", "n", "k", "N", "selection", "mutation", "xover", "reps", "dnf", "mean", "std", "bound*"]
    rows = [header]
    for s in summaries:
        f = _config_fields(s.config)
        mutation = f["mutation"] + (f"(b={f['beta']})" if f["beta"] else "")
        rows.append(
            [
                f["algorithm"], str(f["n"]), str(f["k"]), str(f["N"]) or "-", f["selection"] or "-",
                mutation, f["crossover_prob"], str(s.repetitions), str(s.dnf),
                "-" if s.mean is None else f"{s.mean:.0f}",
                "-" if s.std is None else f"{s.std:.0f}",
                "-" if s.bound is None else f"{s.bound:.4g}",
            ]
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    lines.append("* asymptotic leading term of the expected-runtime upper bound")
    return "\n".join(lines)
