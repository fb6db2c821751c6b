"""(1+1) evolutionary search on the packing plan for a fixed tour."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .evaluation import NEG_INF, PlanEvaluator
from .instances import Instance, ScenarioSet


@dataclass(frozen=True)
class EAConfig:
    alpha: float
    mutation_rate: float | None = None  # None means 1/m
    max_iterations: int | None = None
    budget_seconds: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if not (0 < self.alpha <= 1):
            raise ValueError("alpha must lie in (0, 1]")
        if self.mutation_rate is not None and not (0 < self.mutation_rate <= 1):
            raise ValueError("mutation_rate must lie in (0, 1]")
        if self.max_iterations is None and self.budget_seconds is None:
            raise ValueError("at least one stopping criterion is required")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if self.budget_seconds is not None and self.budget_seconds <= 0:
            raise ValueError("budget_seconds must be positive")


@dataclass
class EATrace:
    iterations: int = 0
    best_z: float = NEG_INF
    best_plan: np.ndarray | None = None
    acceptance_count: int = 0
    improvements: list[tuple[int, float]] = field(default_factory=list)

    def to_csv(self) -> str:
        """Improvement log as CSV rows of iteration and best objective."""
        lines = ["iteration,best_z"]
        lines += [f"{t},{z!r}" for t, z in self.improvements]
        return "\n".join(lines) + "\n"


def mutate_plan(plan: list[int], rate: float, rng: random.Random) -> list[int]:
    """Independent bit flips; a zero-flip outcome is kept as is."""
    return [b ^ 1 if rng.random() < rate else b for b in plan]


def ea_run(
    instance: Instance,
    scenarios: ScenarioSet,
    tour: Sequence[int],
    config: EAConfig,
) -> tuple[np.ndarray, EATrace]:
    """Evolve a packing plan for a fixed tour.

    Starts from the empty plan; every iteration mutates the current plan
    and accepts it as both current and best when it meets the feasibility
    threshold and does not score below the best (ties move). Deterministic
    for a given seed; the empty plan is returned when nothing was accepted.
    """
    m = instance.m
    rate = config.mutation_rate if config.mutation_rate is not None else 1.0 / m
    rng = random.Random(config.rng_seed)
    ctx = PlanEvaluator(instance, scenarios, tour)
    deadline = None
    if config.budget_seconds is not None:
        deadline = time.perf_counter() + config.budget_seconds

    y = [0] * m
    y_best = y.copy()
    z_best = NEG_INF
    trace = EATrace()
    t = 0
    while True:
        if config.max_iterations is not None and t >= config.max_iterations:
            break
        if deadline is not None and time.perf_counter() >= deadline:
            break
        cand = mutate_plan(y, rate, rng)
        ev = ctx.evaluate(cand, config.alpha)
        if ev.feasibility_rate >= config.alpha and ev.expected_z >= z_best:
            if ev.expected_z > z_best:
                trace.improvements.append((t + 1, ev.expected_z))
            y = cand
            y_best = cand.copy()
            z_best = ev.expected_z
            trace.acceptance_count += 1
        t += 1
    trace.iterations = t
    trace.best_z = z_best
    best = np.array(y_best, dtype=np.uint8)
    trace.best_plan = best
    return best, trace
