"""Experiment orchestration: seeded repeated runs with resumable persistence.

Every cell of the experiment grid (instance x scenario set x algorithm x
alpha x repetition) runs with a seed hashed from the master seed and the
cell coordinates, and appends one JSON record line to the experiment log.
Completed cells are skipped on rerun, so interrupted experiments resume.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ea import EAConfig, ea_run
from .evaluation import Evaluation, PlanEvaluator, Solution
from .instances import (
    Instance,
    ScenarioSet,
    generate_scenarios,
    load_instance,
    load_scenarios,
)
from .pipelines import PipelineConfig, run_c5, run_s5, split_seed
from .tours import TourSearchConfig, construct_tour

log = logging.getLogger(__name__)

ALGORITHM_ORDER = ("ea", "s5", "c5")
RECORDS_FILENAME = "records.jsonl"


class InvariantError(RuntimeError):
    """An internal consistency guarantee was violated."""


@dataclass(frozen=True)
class ExperimentConfig:
    instances: tuple[str, ...]
    output_dir: str
    scenario_labels: tuple[str, ...] = ("A", "B", "C")
    scenario_files: tuple[str, ...] = ()
    delta: float = 20.0
    alphas: tuple[float, ...] = (0.8, 0.9)
    algorithms: tuple[str, ...] = ALGORITHM_ORDER
    repetitions: int = 30
    budget_seconds: float = 600.0
    master_seed: int = 1
    workers: int | None = None
    max_restarts: int | None = None       # pipeline restart cap (None: budget only)
    ea_max_iterations: int | None = None  # EA iteration cap (None: budget only)

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "scenario_labels", tuple(self.scenario_labels))
        object.__setattr__(self, "scenario_files", tuple(self.scenario_files))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if not self.instances:
            raise ValueError("at least one instance is required")
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        if not self.alphas:
            raise ValueError("at least one alpha is required")
        if not (self.scenario_labels or self.scenario_files):
            raise ValueError("at least one scenario label or file is required")
        if self.repetitions < 1:
            raise ValueError("repetitions must be positive")
        if self.budget_seconds <= 0:
            raise ValueError("budget_seconds must be positive")
        for a in self.algorithms:
            if a not in ALGORITHM_ORDER:
                raise ValueError(f"unknown algorithm {a!r}")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2) + "\n"


@dataclass(frozen=True)
class RunRecord:
    instance: str
    scenario_label: str
    algorithm: str
    alpha: float
    repetition: int
    seed: int
    expected_z: float
    feasibility_rate: float
    total_profit: float
    plan_scenario_weights: tuple[float, ...]
    wall_clock_seconds: float
    iterations: int              # EA iterations or pipeline restarts
    empty_plan_fallback: bool

    def key(self) -> tuple:
        return cell_key(self.instance, self.scenario_label, self.algorithm, self.alpha, self.repetition)

    def to_json(self) -> str:
        data = dataclasses.asdict(self)
        data["plan_scenario_weights"] = list(self.plan_scenario_weights)
        return json.dumps(data)

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        data = dict(data)
        data["plan_scenario_weights"] = tuple(data["plan_scenario_weights"])
        return cls(**data)


def cell_key(instance: str, label: str, algorithm: str, alpha: float, repetition: int) -> tuple:
    return (instance, label, algorithm, f"{alpha:.6g}", repetition)


def cell_seed(master_seed: int, instance: str, label: str, algorithm: str, alpha: float, repetition: int) -> int:
    """64-bit seed derived from the master seed and the cell coordinates."""
    text = f"{master_seed}|{instance}|{label}|{algorithm}|{alpha:.6g}|{repetition}"
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def _scenario_sets_for(instance: Instance, config: ExperimentConfig) -> dict[str, str | None]:
    """Map scenario label -> source file (None for generated sets)."""
    sets: dict[str, str | None] = {}
    for label in config.scenario_labels:
        generate_scenarios(instance, config.delta, label)  # validates early
        sets[label] = None
    for path in config.scenario_files:
        ss = load_scenarios(path)
        if ss.m != instance.m:
            raise ValueError(
                f"scenario file {path} holds {ss.m} item weights but instance "
                f"{instance.name} has {instance.m} items"
            )
        label = ss.label if ss.label not in sets else f"{ss.label}:{Path(path).name}"
        sets[label] = str(path)
    return sets


def solve_single(
    instance: Instance,
    scenarios: ScenarioSet,
    algorithm: str,
    alpha: float,
    budget_seconds: float,
    seed: int,
    max_restarts: int | None = None,
    ea_max_iterations: int | None = None,
) -> tuple[Solution, Evaluation, int, float]:
    """Run one algorithm once; returns solution, evaluation, step count, wall clock."""
    start = time.perf_counter()
    if algorithm == "ea":
        tour = construct_tour(instance, TourSearchConfig(rng_seed=split_seed(seed, 0)))
        remaining = max(budget_seconds - (time.perf_counter() - start), 0.01)
        plan, trace = ea_run(
            instance,
            scenarios,
            tour,
            EAConfig(
                alpha=alpha,
                max_iterations=ea_max_iterations,
                budget_seconds=None if ea_max_iterations is not None else remaining,
                rng_seed=split_seed(seed, 1),
            ),
        )
        solution = Solution(tour, plan)
        steps = trace.iterations
    elif algorithm in ("s5", "c5"):
        pconfig = PipelineConfig(
            algorithm=algorithm,
            alpha=alpha,
            budget_seconds=budget_seconds,
            rng_seed=seed,
            max_restarts=max_restarts,
        )
        result = run_s5(instance, scenarios, pconfig) if algorithm == "s5" else run_c5(instance, scenarios, pconfig)
        solution = result.solution
        steps = result.restarts
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    evaluation = PlanEvaluator(instance, scenarios, solution.tour).evaluate(solution.plan, alpha)
    return solution, evaluation, steps, time.perf_counter() - start


def _record_from_run(
    instance: Instance,
    scenarios: ScenarioSet,
    label: str,
    algorithm: str,
    alpha: float,
    repetition: int,
    seed: int,
    solution: Solution,
    evaluation,
    steps: int,
    wall_clock: float,
) -> RunRecord:
    picked = np.flatnonzero(solution.plan)
    if picked.size:
        scen_weights = scenarios.weights[:, picked].sum(axis=1)
    else:
        scen_weights = np.zeros(scenarios.k)
    fallback = picked.size == 0
    if evaluation.feasibility_rate < alpha and not fallback:
        raise InvariantError(
            f"{algorithm} returned an infeasible plan for {instance.name}/{label}/alpha={alpha}"
        )
    return RunRecord(
        instance=instance.name,
        scenario_label=label,
        algorithm=algorithm,
        alpha=alpha,
        repetition=repetition,
        seed=seed,
        expected_z=evaluation.expected_z,
        feasibility_rate=evaluation.feasibility_rate,
        total_profit=evaluation.total_profit,
        plan_scenario_weights=tuple(float(w) for w in scen_weights),
        wall_clock_seconds=wall_clock,
        iterations=steps,
        empty_plan_fallback=fallback,
    )


_WORKER_INSTANCES: dict[str, Instance] = {}


def _run_cell(job: dict) -> str:
    """Worker entry: executes one cell and returns its JSON record line."""
    path = job["instance_path"]
    instance = _WORKER_INSTANCES.get(path)
    if instance is None:
        instance = load_instance(path)
        _WORKER_INSTANCES[path] = instance
    if job["scenario_file"] is not None:
        scenarios = load_scenarios(job["scenario_file"])
    else:
        scenarios = generate_scenarios(instance, job["delta"], job["label"])
    solution, evaluation, steps, wall = solve_single(
        instance,
        scenarios,
        job["algorithm"],
        job["alpha"],
        job["budget_seconds"],
        job["seed"],
        max_restarts=job["max_restarts"],
        ea_max_iterations=job["ea_max_iterations"],
    )
    record = _record_from_run(
        instance, scenarios, job["label"], job["algorithm"], job["alpha"],
        job["repetition"], job["seed"], solution, evaluation, steps, wall,
    )
    return record.to_json()


def read_records(path) -> list[RunRecord]:
    """Load persisted records, skipping unparsable (e.g. truncated) lines."""
    records = []
    path = Path(path)
    if not path.exists():
        return records
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(RunRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, TypeError, KeyError) as exc:
                log.warning("skipping unreadable record line %d: %s", lineno, exc)
    return records


def run_experiment(config: ExperimentConfig) -> list[RunRecord]:
    """Execute all missing experiment cells and return every record.

    Unreadable instances are logged and skipped; their cells are dropped
    from this run but everything else proceeds.
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / RECORDS_FILENAME
    existing = read_records(records_path)
    done = {r.key() for r in existing}

    jobs: list[dict] = []
    failures: list[str] = []
    for path in config.instances:
        try:
            instance = load_instance(path)
            sets = _scenario_sets_for(instance, config)
        except (OSError, ValueError) as exc:
            log.error("skipping instance %s: %s", path, exc)
            failures.append(str(path))
            continue
        for label, source_file in sets.items():
            for algorithm in config.algorithms:
                for alpha in config.alphas:
                    for rep in range(config.repetitions):
                        if cell_key(instance.name, label, algorithm, alpha, rep) in done:
                            continue
                        jobs.append({
                            "instance_path": str(path),
                            "label": label,
                            "scenario_file": source_file,
                            "delta": config.delta,
                            "algorithm": algorithm,
                            "alpha": alpha,
                            "repetition": rep,
                            "seed": cell_seed(config.master_seed, instance.name, label, algorithm, alpha, rep),
                            "budget_seconds": config.budget_seconds,
                            "max_restarts": config.max_restarts,
                            "ea_max_iterations": config.ea_max_iterations,
                        })

    if failures and not jobs and not existing:
        raise OSError(f"no runnable instances: {failures}")

    workers = config.workers if config.workers is not None else (os.cpu_count() or 1)
    new_records: list[RunRecord] = []
    with open(records_path, "a", encoding="utf-8") as sink:
        def persist(line: str) -> None:
            sink.write(line + "\n")
            sink.flush()
            new_records.append(RunRecord.from_dict(json.loads(line)))

        if workers <= 1 or len(jobs) <= 1:
            for job in jobs:
                persist(_run_cell(job))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_run_cell, job) for job in jobs]
                for fut in as_completed(futures):
                    persist(fut.result())

    return existing + new_records
