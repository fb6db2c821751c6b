"""Command-line interface: scenario generation, single solves, experiments, reports.

Exit codes: 0 success, 1 usage error, 2 input-file error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .harness import (
    ExperimentConfig,
    InvariantError,
    RECORDS_FILENAME,
    read_records,
    run_experiment,
    solve_single,
)
from .instances import (
    InstanceFormatError,
    ScenarioFormatError,
    generate_scenarios,
    load_instance,
    load_scenarios,
    save_scenarios,
)
from .report import report

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INVARIANT = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); keep 1 for usage errors
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ttpws", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-scenarios", help="generate a scenario file from an instance")
    gen.add_argument("--instance", required=True)
    gen.add_argument("--delta", type=float, required=True)
    gen.add_argument("--set", dest="label", choices=("A", "B", "C"), required=True)
    gen.add_argument("--out", required=True)

    solve = sub.add_parser("solve", help="run one algorithm once, print a JSON solution record")
    solve.add_argument("--instance", required=True)
    solve.add_argument("--scenarios", required=True)
    solve.add_argument("--algorithm", choices=("ea", "s5", "c5"), required=True)
    solve.add_argument("--alpha", type=float, required=True)
    solve.add_argument("--budget", type=float, required=True)
    solve.add_argument("--seed", type=int, required=True)
    solve.add_argument("--restarts", type=int, default=None, help="cap pipeline restarts")
    solve.add_argument("--ea-iterations", type=int, default=None, help="cap EA iterations")

    exp = sub.add_parser("experiment", help="run (or resume) a full experiment grid")
    exp.add_argument("--config", required=True)

    rep = sub.add_parser("report", help="render result tables from an experiment directory")
    rep.add_argument("--records", required=True, help="experiment output directory")
    rep.add_argument("--format", choices=("csv", "json", "text"), default="text")
    rep.add_argument("--out", default=None, help="write to file instead of stdout")
    return parser


def _cmd_gen_scenarios(args) -> int:
    instance = load_instance(args.instance)
    save_scenarios(generate_scenarios(instance, args.delta, args.label), args.out)
    print(f"wrote scenario set {args.label} (delta={args.delta:g}) to {args.out}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    scenarios = load_scenarios(args.scenarios)
    if scenarios.m != instance.m:
        raise ScenarioFormatError(
            f"scenario file has {scenarios.m} item weights, instance has {instance.m}"
        )
    solution, evaluation, steps, wall = solve_single(
        instance, scenarios, args.algorithm, args.alpha, args.budget, args.seed,
        max_restarts=args.restarts, ea_max_iterations=args.ea_iterations,
    )
    record = {
        "instance": instance.name,
        "scenario_label": scenarios.label,
        "algorithm": args.algorithm,
        "alpha": args.alpha,
        "seed": args.seed,
        "expected_z": evaluation.expected_z,
        "feasibility_rate": evaluation.feasibility_rate,
        "total_profit": evaluation.total_profit,
        "per_scenario_feasible": list(evaluation.per_scenario_feasible),
        "wall_clock_seconds": wall,
        "iterations": steps,
        "tour": list(solution.tour),
        "plan": [int(b) for b in solution.plan],
    }
    print(json.dumps(record))
    return EXIT_OK


def _cmd_experiment(args) -> int:
    try:
        config_text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        config = ExperimentConfig.from_json(config_text)
    except (ValueError, TypeError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return EXIT_INPUT
    records = run_experiment(config)
    print(f"{len(records)} records in {Path(config.output_dir) / RECORDS_FILENAME}")
    return EXIT_OK


def _cmd_report(args) -> int:
    records_path = Path(args.records) / RECORDS_FILENAME
    if not records_path.exists():
        print(f"no record log found at {records_path}", file=sys.stderr)
        return EXIT_INPUT
    text = report(read_records(records_path), fmt=args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.format} report to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {
    "gen-scenarios": _cmd_gen_scenarios,
    "solve": _cmd_solve,
    "experiment": _cmd_experiment,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (OSError, InstanceFormatError, ScenarioFormatError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantError as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
