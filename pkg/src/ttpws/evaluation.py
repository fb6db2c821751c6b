"""Objective and feasibility evaluation for tour/packing-plan solutions.

Two evaluation paths exist on purpose: :func:`evaluate` is a direct,
readable transcription of the objective (walk the tour once per scenario),
while :class:`PlanEvaluator` precomputes tour structure so that many plans
on one fixed tour evaluate quickly. Tests cross-check the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .instances import Instance, ScenarioSet

NEG_INF = float("-inf")


@dataclass(frozen=True)
class Solution:
    """A tour (city permutation starting at 1) plus an item bit vector."""

    tour: tuple[int, ...]
    plan: np.ndarray  # (m,) 0/1

    def __post_init__(self):
        object.__setattr__(self, "tour", tuple(int(c) for c in self.tour))
        plan = np.asarray(self.plan, dtype=np.uint8)
        object.__setattr__(self, "plan", plan)
        plan.setflags(write=False)

    def picked_items(self) -> list[int]:
        return [j for j, b in enumerate(self.plan) if b]


@dataclass(frozen=True)
class Evaluation:
    """Outcome of evaluating one solution against a scenario set."""

    expected_z: float                       # -inf when no scenario is feasible
    feasibility_rate: float                 # probability mass of feasible scenarios
    total_profit: float
    per_scenario_feasible: tuple[bool, ...]
    per_scenario_travel_time: tuple[float, ...]  # inf when the load stalls travel
    alpha: float

    @property
    def is_feasible(self) -> bool:
        return self.feasibility_rate >= self.alpha


def check_solution(instance: Instance, solution: Solution) -> None:
    """Raise ValueError unless tour and plan are structurally valid."""
    tour = solution.tour
    if len(tour) != instance.n or tour[0] != 1 or sorted(tour) != list(range(1, instance.n + 1)):
        raise ValueError("tour must be a permutation of 1..n starting at city 1")
    if len(solution.plan) != instance.m:
        raise ValueError("plan length does not match item count")


def total_plan_weight(weights: Sequence[float], plan: Sequence[int]) -> float:
    return float(sum(w for w, b in zip(weights, plan) if b))


def deterministic_objective(instance: Instance, weights: Sequence[float], solution: Solution) -> float:
    """Classical single-profile objective: profit minus rented travel time.

    The leg leaving city x_i runs at v_max - nu * W_i where W_i is the weight
    collected up to and including x_i; the last leg returns to city 1.
    Raises ValueError when the plan weight exceeds capacity (speed would
    leave the valid range).
    """
    check_solution(instance, solution)
    w = np.asarray(weights, dtype=float)
    if w.shape != (instance.m,):
        raise ValueError("weight vector length does not match item count")
    total = total_plan_weight(w, solution.plan)
    if total > instance.capacity:
        raise ValueError(
            f"plan weight {total} exceeds capacity {instance.capacity}; objective undefined"
        )
    city_weight = [0.0] * (instance.n + 1)
    for j in solution.picked_items():
        city_weight[int(instance.item_city[j])] += float(w[j])
    profit = float(sum(float(instance.profits[j]) for j in solution.picked_items()))
    nu = instance.nu
    carried = 0.0
    time = 0.0
    tour = solution.tour
    for i in range(instance.n):
        c = tour[i]
        carried += city_weight[c]
        nxt = tour[(i + 1) % instance.n]
        time += instance.distance(c, nxt) / (instance.v_max - nu * carried)
    return profit - instance.renting_rate * time


def chance_rate(instance: Instance, scenarios: ScenarioSet, plan: Sequence[int]) -> float:
    """Probability mass of scenarios whose plan weight fits the knapsack."""
    plan = np.asarray(plan)
    if plan.shape != (instance.m,):
        raise ValueError("plan length does not match item count")
    picked = np.flatnonzero(plan)
    if picked.size:
        totals = scenarios.weights[:, picked].sum(axis=1)
    else:
        totals = np.zeros(scenarios.k)
    rate = 0.0
    for s in range(scenarios.k):
        if totals[s] <= instance.capacity:
            rate += float(scenarios.probs[s])
    return rate


def _walk_travel_time(instance: Instance, tour: tuple[int, ...], city_weight: list[float]) -> float:
    """Travel time of one tour under one weight profile; inf when stalled."""
    nu = instance.nu
    carried = 0.0
    time = 0.0
    for i in range(instance.n):
        c = tour[i]
        carried += city_weight[c]
        speed = instance.v_max - nu * carried
        if speed <= 0:
            return math.inf
        time += instance.distance(c, tour[(i + 1) % instance.n]) / speed
    return time


def evaluate(instance: Instance, scenarios: ScenarioSet, solution: Solution, alpha: float) -> Evaluation:
    """Expected objective and feasibility of a solution under all scenarios.

    Infeasible scenarios are skipped in the expectation with their raw
    probability (no renormalisation); if none is feasible the expected
    objective is -inf.
    """
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    check_solution(instance, solution)
    if scenarios.m != instance.m:
        raise ValueError("scenario item count does not match instance")
    picked = solution.picked_items()
    profit = float(sum(float(instance.profits[j]) for j in picked))

    feasible: list[bool] = []
    times: list[float] = []
    for s in range(scenarios.k):
        city_weight = [0.0] * (instance.n + 1)
        total = 0.0
        for j in picked:
            w = float(scenarios.weights[s, j])
            city_weight[int(instance.item_city[j])] += w
            total += w
        feasible.append(total <= instance.capacity)
        times.append(_walk_travel_time(instance, solution.tour, city_weight))

    rate = 0.0
    for s in range(scenarios.k):
        if feasible[s]:
            rate += float(scenarios.probs[s])
    if not any(feasible):
        expected = NEG_INF
    else:
        expected_time = 0.0
        for s in range(scenarios.k):
            if feasible[s]:
                expected_time += float(scenarios.probs[s]) * times[s]
        expected = profit - instance.renting_rate * expected_time
    return Evaluation(
        expected_z=expected,
        feasibility_rate=rate,
        total_profit=profit,
        per_scenario_feasible=tuple(feasible),
        per_scenario_travel_time=tuple(times),
        alpha=alpha,
    )


class PlanEvaluator:
    """Evaluates many packing plans against one fixed tour.

    Precomputes leg distances, the remaining tour distance after each
    position, and each item's tour position; plan evaluation then only
    visits pickup positions. For small item counts results are memoised,
    which makes the bit-flip search loops cheap.
    """

    MEMO_MAX_ITEMS = 20

    def __init__(self, instance: Instance, scenarios: ScenarioSet, tour: Sequence[int]):
        tour = tuple(int(c) for c in tour)
        check_solution(instance, Solution(tour, np.zeros(instance.m, dtype=np.uint8)))
        if scenarios.m != instance.m:
            raise ValueError("scenario item count does not match instance")
        self.instance = instance
        self.scenarios = scenarios
        self.tour = tour
        n = instance.n
        pos = [0] * (n + 1)
        for i, c in enumerate(tour):
            pos[c] = i
        legs = [instance.distance(tour[i], tour[(i + 1) % n]) for i in range(n)]
        suffix = [0.0] * (n + 1)
        for i in range(n - 1, -1, -1):
            suffix[i] = suffix[i + 1] + legs[i]
        self._suffix = suffix
        self._item_pos = [pos[int(c)] for c in instance.item_city]
        self._w = scenarios.weights.tolist()
        self._p = scenarios.probs.tolist()
        self._profits = instance.profits.tolist()
        self._k = scenarios.k
        self._memo: dict[bytes, tuple] | None = {} if instance.m <= self.MEMO_MAX_ITEMS else None

    def remaining_distance(self, item: int) -> float:
        """Tour distance still ahead when the item's city is reached."""
        return self._suffix[self._item_pos[item]]

    def tour_length(self) -> float:
        return self._suffix[0]

    def evaluate(self, plan: Sequence[int], alpha: float) -> Evaluation:
        if not (0 < alpha <= 1):
            raise ValueError("alpha must lie in (0, 1]")
        key = None
        if self._memo is not None:
            key = bytes(bytearray(1 if b else 0 for b in plan))
            hit = self._memo.get(key)
            if hit is not None:
                return Evaluation(*hit, alpha=alpha)

        picked = [j for j, b in enumerate(plan) if b]
        profit = 0.0
        by_pos: dict[int, list[int]] = {}
        for j in picked:
            profit += self._profits[j]
            by_pos.setdefault(self._item_pos[j], []).append(j)
        positions = sorted(by_pos)

        inst = self.instance
        suffix = self._suffix
        vmax = inst.v_max
        nu = inst.nu
        cap = inst.capacity

        feasible: list[bool] = []
        times: list[float] = []
        for s in range(self._k):
            ws = self._w[s]
            time = (suffix[0] - suffix[positions[0]]) / vmax if positions else suffix[0] / vmax
            carried = 0.0
            stalled = False
            for idx, p in enumerate(positions):
                for j in by_pos[p]:
                    carried += ws[j]
                nxt = positions[idx + 1] if idx + 1 < len(positions) else None
                seg = suffix[p] - (suffix[nxt] if nxt is not None else 0.0)
                speed = vmax - nu * carried
                if speed <= 0:
                    stalled = True
                    break
                time += seg / speed
            feasible.append(carried <= cap)
            times.append(math.inf if stalled else time)

        rate = 0.0
        for s in range(self._k):
            if feasible[s]:
                rate += self._p[s]
        if not any(feasible):
            expected = NEG_INF
        else:
            expected_time = 0.0
            for s in range(self._k):
                if feasible[s]:
                    expected_time += self._p[s] * times[s]
            expected = profit - inst.renting_rate * expected_time

        core = (expected, rate, profit, tuple(feasible), tuple(times))
        if self._memo is not None:
            self._memo[key] = core
        return Evaluation(*core, alpha=alpha)


def incremental_eval_context(instance: Instance, scenarios: ScenarioSet, tour: Sequence[int]) -> PlanEvaluator:
    """Reusable evaluator bound to one tour; matches evaluate() within 1e-9."""
    return PlanEvaluator(instance, scenarios, tour)
