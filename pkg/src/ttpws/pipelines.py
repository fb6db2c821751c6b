"""Restart pipelines combining tour construction with packing optimisation.

Each restart builds a fresh tour from a counter-split seed, packs it with
the exponent-search heuristic until the score stops improving, and (in the
refined variant) polishes plan and tour with one bit-flip and one insertion
pass. The best restart by expected objective wins; restarts are pure
functions of their split seed, so results are reproducible even though the
number of restarts depends on the wall-clock budget.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass

import numpy as np

from .evaluation import Evaluation, PlanEvaluator, Solution
from .instances import Instance, ScenarioSet
from .packing import bitflip_step, pack_iterative_ws
from .tours import TourSearchConfig, construct_tour, insertion_step

# cap on re-running the packing search on one tour while it keeps improving
MAX_PACK_ROUNDS = 5


@dataclass(frozen=True)
class PipelineConfig:
    algorithm: str                 # "ea" | "s5" | "c5"
    alpha: float
    budget_seconds: float
    rng_seed: int = 0
    max_restarts: int | None = None   # cap restarts for machine-independent runs
    max_chain_kicks: int = 50
    tour_time_share: float = 1.0
    pack_tau: int = 10
    pack_exp_low: float = 0.0
    pack_exp_high: float = 10.0
    pack_refinements: int = 10
    ea_mutation_rate: float | None = None
    ea_max_iterations: int | None = None

    def __post_init__(self):
        if self.algorithm not in ("ea", "s5", "c5"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if not self.budget_seconds > 0:
            raise ValueError("budget_seconds must be positive")
        if not (0 < self.alpha <= 1):
            raise ValueError("alpha must lie in (0, 1]")
        if self.max_restarts is not None and self.max_restarts < 1:
            raise ValueError("max_restarts must be positive")


@dataclass
class PipelineResult:
    solution: Solution
    evaluation: Evaluation
    restarts: int
    wall_clock_seconds: float


def split_seed(master_seed: int, counter: int) -> int:
    """Deterministic 64-bit child seed for a restart counter."""
    digest = hashlib.sha256(f"{master_seed}:{counter}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _run_restarts(
    instance: Instance,
    scenarios: ScenarioSet,
    config: PipelineConfig,
    refine: bool,
) -> PipelineResult:
    start = time.perf_counter()
    deadline = start + config.budget_seconds
    best_solution: Solution | None = None
    best_eval: Evaluation | None = None
    restarts = 0
    while True:
        tour = construct_tour(
            instance,
            TourSearchConfig(
                rng_seed=split_seed(config.rng_seed, restarts),
                max_chain_kicks=config.max_chain_kicks,
                time_share=config.tour_time_share,
            ),
        )
        ctx = PlanEvaluator(instance, scenarios, tour)
        plan = np.zeros(instance.m, dtype=np.uint8)
        z_cur = ctx.evaluate(plan, config.alpha).expected_z
        for _ in range(MAX_PACK_ROUNDS):
            cand = pack_iterative_ws(
                instance,
                scenarios,
                tour,
                config.alpha,
                budget_seconds=math.inf,
                exp_low=config.pack_exp_low,
                exp_high=config.pack_exp_high,
                refinements=config.pack_refinements,
                tau=config.pack_tau,
            )
            z = ctx.evaluate(cand, config.alpha).expected_z
            if z > z_cur:
                plan, z_cur = cand, z
            else:
                break
        solution = Solution(tour, plan)
        if refine:
            solution = Solution(tour, bitflip_step(instance, scenarios, solution, config.alpha))
            solution = insertion_step(instance, scenarios, solution, config.alpha)
        evaluation = PlanEvaluator(instance, scenarios, solution.tour).evaluate(
            solution.plan, config.alpha
        )
        if best_eval is None or evaluation.expected_z > best_eval.expected_z:
            best_solution, best_eval = solution, evaluation
        restarts += 1
        if config.max_restarts is not None and restarts >= config.max_restarts:
            break
        if time.perf_counter() >= deadline:
            break
    return PipelineResult(
        solution=best_solution,
        evaluation=best_eval,
        restarts=restarts,
        wall_clock_seconds=time.perf_counter() - start,
    )


def run_s5(instance: Instance, scenarios: ScenarioSet, config: PipelineConfig) -> PipelineResult:
    """Restart loop of tour construction plus packing search."""
    return _run_restarts(instance, scenarios, config, refine=False)


def run_c5(instance: Instance, scenarios: ScenarioSet, config: PipelineConfig) -> PipelineResult:
    """run_s5 with one bit-flip and one insertion pass per restart."""
    return _run_restarts(instance, scenarios, config, refine=True)


def s5_ws(instance: Instance, scenarios: ScenarioSet, config: PipelineConfig) -> Solution:
    return run_s5(instance, scenarios, config).solution


def c5_ws(instance: Instance, scenarios: ScenarioSet, config: PipelineConfig) -> Solution:
    return run_c5(instance, scenarios, config).solution
