"""Command line entry point: ``nsga-ojzj run`` and ``nsga-ojzj bound``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from .algorithms import CROWDING_TIES, Algorithm, AlgorithmConfig
from .harness import ExperimentSpec, format_table, run_experiment, theoretical_bound
from .objectives import OjzjProblem
from .operators import MutationOperator, SelectionScheme

EXIT_CONFIG = 2
EXIT_IO = 3

# Defaults applied after config-file values and flags are merged.
DEFAULTS = {
    "algorithm": "nsga2",
    "n": 20,
    "k": 3,
    "pop_mult": None,
    "pop_size": None,
    "selection": "tournament",
    "mutation": "bitwise",
    "beta": 1.5,
    "crossover_prob": 0.0,
    "reps": 50,
    "seed": 0,
    "max_evals": None,
    "out": None,
    "trace": None,
    "assert_lemma1": False,
    "workers": 1,
    "crowding_ties": "index",
}


class ConfigError(ValueError):
    pass


def _problem_args(p: argparse.ArgumentParser) -> None:
    # default=None everywhere so that unset flags do not override the config file
    p.add_argument("--n", type=int, default=None, help="string length (default 20)")
    p.add_argument("--k", type=int, default=None, help="jump size (default 3)")
    size = p.add_mutually_exclusive_group()
    size.add_argument("--pop-mult", type=float, nargs="+", default=None,
                      help="N = m*(n-2k+3) for each multiplier m")
    size.add_argument("--pop-size", type=int, default=None, help="explicit population size N")
    p.add_argument("--selection", choices=[s.value for s in SelectionScheme], default=None)
    p.add_argument("--mutation", choices=["one-bit", "bitwise", "heavy-tailed"], default=None)
    p.add_argument("--beta", type=float, default=None, help="power-law exponent (default 1.5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsga-ojzj", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment grid and print the summary table")
    run.add_argument("--config", type=Path, help="YAML or JSON file with flag values")
    run.add_argument("--algorithm", choices=[a.value for a in Algorithm], default=None)
    _problem_args(run)
    run.add_argument("--crossover-prob", type=float, default=None)
    run.add_argument("--reps", type=int, default=None)
    run.add_argument("--seed", type=int, default=None, help="master seed")
    run.add_argument("--max-evals", type=int, default=None)
    run.add_argument("--out", type=Path, default=None, help="directory for runs.csv and summary.csv")
    run.add_argument("--trace", type=Path, default=None, help="per-generation JSON-lines trace file")
    run.add_argument("--assert-lemma1", action="store_true", default=None,
                     help="count rank-1 objective values lost during survival selection")
    run.add_argument("--workers", type=int, default=None, help="parallel worker processes")
    run.add_argument("--crowding-ties", choices=list(CROWDING_TIES), default=None,
                     help="tie order in the crowding-distance sorts (default index)")

    bound = sub.add_parser("bound", help="print the theoretical runtime bound for a configuration")
    _problem_args(bound)
    return parser


def _load_config_file(path: Path) -> dict:
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    out = {}
    for key, value in data.items():
        norm = str(key).replace("-", "_")
        if norm not in DEFAULTS:
            raise ConfigError(f"unknown key {key!r} in config file {path}")
        out[norm] = value
    return out


def merge_settings(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    if getattr(args, "config", None) is not None:
        settings.update(_load_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if args.pop_size is not None:
        settings["pop_mult"] = None
    elif args.pop_mult is not None:
        settings["pop_size"] = None
    return settings


def _population(settings: dict, problem: OjzjProblem) -> tuple[int, list[float] | None]:
    mult = settings["pop_mult"]
    if isinstance(mult, (int, float)):
        mult = [float(mult)]
    if settings["pop_size"] is not None:
        return int(settings["pop_size"]), None
    if mult:
        return round(mult[0] * problem.front_size), [float(m) for m in mult]
    return 4 * problem.front_size, None


def build_spec(settings: dict) -> ExperimentSpec:
    try:
        problem = OjzjProblem(int(settings["n"]), int(settings["k"]))
        N, mults = _population(settings, problem)
        base = AlgorithmConfig(
            problem=problem,
            algorithm=settings["algorithm"],
            population_size=N,
            selection=settings["selection"],
            mutation=MutationOperator(settings["mutation"], float(settings["beta"])),
            crossover_probability=float(settings["crossover_prob"]),
            max_evaluations=settings["max_evals"],
            assert_lemma1=bool(settings["assert_lemma1"]),
            crowding_ties=settings["crowding_ties"],
        )
        spec = ExperimentSpec(
            base=base,
            repetitions=int(settings["reps"]),
            master_seed=int(settings["seed"]),
            pop_multipliers=mults,
            out_dir=None if settings["out"] is None else Path(settings["out"]),
            trace=None if settings["trace"] is None else Path(settings["trace"]),
            workers=int(settings["workers"]),
        )
        spec.grid()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return spec


def _cmd_run(args: argparse.Namespace) -> int:
    spec = build_spec(merge_settings(args))
    result = run_experiment(spec)
    print(format_table(result.summaries))
    if spec.base.assert_lemma1:
        lost = sum(r.lemma1_violations for recs in result.records for r in recs)
        print(f"lemma1 violations: {lost}")
    if spec.out_dir is not None:
        print(f"wrote {spec.out_dir / 'runs.csv'} and {spec.out_dir / 'summary.csv'}")
    return 0


def _cmd_bound(args: argparse.Namespace) -> int:
    settings = merge_settings(args)
    try:
        problem = OjzjProblem(int(settings["n"]), int(settings["k"]))
        N, mults = _population(settings, problem)
        sizes = [round(m * problem.front_size) for m in mults] if mults else [N]
        op = MutationOperator(settings["mutation"], float(settings["beta"]))
        for size in sizes:
            value = theoretical_bound(problem.n, problem.k, size, settings["selection"], op)
            print(f"n={problem.n} k={problem.k} N={size} selection={settings['selection']} "
                  f"mutation={op.kind.value}: asymptotic leading term {value:.6g}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_bound(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
