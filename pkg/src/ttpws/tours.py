"""Tour construction and tour-side refinement.

construct_tour builds a tour by nearest neighbour, polishes it with
first-improvement 2-opt (don't-look bits), then chains double-bridge
perturbations with re-optimisation, keeping the shortest tour found.
insertion_step delays the pickup of collected items by moving their city
to a later tour position when that raises the expected objective.
"""

from __future__ import annotations

import random
import time
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .evaluation import PlanEvaluator, Solution
from .instances import Instance, ScenarioSet


@dataclass(frozen=True)
class TourSearchConfig:
    rng_seed: int = 0
    max_chain_kicks: int = 50
    dont_look_bits: bool = True
    time_share: float = 1.0  # fraction of a caller-supplied budget this search may use

    def __post_init__(self):
        if self.max_chain_kicks < 0:
            raise ValueError("max_chain_kicks must be non-negative")
        if not (0 < self.time_share <= 1):
            raise ValueError("time_share must lie in (0, 1]")


def tour_length(instance: Instance, tour: Sequence[int]) -> int:
    d = instance.distance_matrix
    n = len(tour)
    return int(sum(d[tour[i], tour[(i + 1) % n]] for i in range(n)))


def _nearest_neighbor(instance: Instance) -> list[int]:
    d = instance.distance_matrix
    n = instance.n
    unvisited = np.ones(n + 1, dtype=bool)
    unvisited[0] = False
    tour = [1]
    unvisited[1] = False
    cur = 1
    for _ in range(n - 1):
        row = np.where(unvisited[1:], d[cur, 1:], np.iinfo(np.int64).max)
        nxt = int(np.argmin(row)) + 1  # argmin takes the lowest index on ties
        tour.append(nxt)
        unvisited[nxt] = False
        cur = nxt
    return tour


def _reverse_segment(tour: list[int], pos: list[int], i: int, j: int) -> None:
    # removes edges (tour[i], tour[i+1]) and (tour[j], tour[j+1]), i < j
    lo, hi = i + 1, j
    while lo < hi:
        tour[lo], tour[hi] = tour[hi], tour[lo]
        pos[tour[lo]] = lo
        pos[tour[hi]] = hi
        lo += 1
        hi -= 1


def _two_opt(tour: list[int], dmat: np.ndarray, use_dont_look: bool) -> None:
    """First-improvement 2-opt to a local optimum, in place.

    Distances are integers, so every accepted move strictly shortens the
    tour and the loop terminates. The don't-look variant only rescans
    cities whose incident edges changed.
    """
    n = len(tour)
    if n < 4:
        return
    if not use_dont_look:
        improved = True
        while improved:
            improved = False
            for i in range(n - 1):
                t1, t2 = tour[i], tour[i + 1]
                d12 = dmat[t1, t2]
                for j in range(i + 2, n):
                    t3, t4 = tour[j], tour[(j + 1) % n]
                    if d12 + dmat[t3, t4] - dmat[t1, t3] - dmat[t2, t4] > 0:
                        pos_unused = [0] * (n + 1)
                        _reverse_segment(tour, pos_unused, i, j)
                        improved = True
                        break
                if improved:
                    break
        return

    pos = [0] * dmat.shape[0]
    for i, c in enumerate(tour):
        pos[c] = i
    queue = deque(tour)
    queued = [False] * dmat.shape[0]
    for c in tour:
        queued[c] = True

    def wake(cities):
        for c in cities:
            if not queued[c]:
                queued[c] = True
                queue.append(c)

    while queue:
        a = queue.popleft()
        queued[a] = False
        improved = True
        while improved:
            improved = False
            ia = pos[a]
            for i in (ia, (ia - 1) % n):  # edge leaving a, edge entering a
                t1, t2 = tour[i], tour[(i + 1) % n]
                d12 = dmat[t1, t2]
                for j in range(n):
                    if j == i:
                        continue
                    t3, t4 = tour[j], tour[(j + 1) % n]
                    # adjacent edge pairs give zero gain and are never taken
                    if d12 + dmat[t3, t4] - dmat[t1, t3] - dmat[t2, t4] > 0:
                        lo, hi = (i, j) if i < j else (j, i)
                        _reverse_segment(tour, pos, lo, hi)
                        wake((t1, t2, t3, t4))
                        improved = True
                        break
                if improved:
                    break


def _double_bridge(tour: list[int], rng: random.Random) -> list[int]:
    n = len(tour)
    if n < 4:
        return list(tour)
    p1, p2, p3 = sorted(rng.sample(range(1, n), 3))
    return tour[:p1] + tour[p2:p3] + tour[p1:p2] + tour[p3:]


def construct_tour(
    instance: Instance,
    config: TourSearchConfig,
    budget_seconds: float | None = None,
) -> tuple[int, ...]:
    """Deterministic (per seed) tour starting at city 1.

    When budget_seconds is given, chaining stops once time_share of it is
    used; otherwise only max_chain_kicks bounds the perturbation rounds.
    """
    if instance.n == 2:
        return (1, 2)
    deadline = None
    if budget_seconds is not None:
        deadline = time.perf_counter() + config.time_share * budget_seconds
    rng = random.Random(config.rng_seed)
    dmat = instance.distance_matrix
    tour = _nearest_neighbor(instance)
    _two_opt(tour, dmat, config.dont_look_bits)
    best = list(tour)
    best_len = tour_length(instance, best)
    for _ in range(config.max_chain_kicks):
        if deadline is not None and time.perf_counter() >= deadline:
            break
        cand = _double_bridge(best, rng)
        _two_opt(cand, dmat, config.dont_look_bits)
        cand_len = tour_length(instance, cand)
        if cand_len < best_len:
            best, best_len = cand, cand_len
    return tuple(best)


def insertion_step(
    instance: Instance,
    scenarios: ScenarioSet,
    solution: Solution,
    alpha: float,
) -> Solution:
    """Apply the best pickup-delaying city move, if any improves.

    One pass: every city holding a picked item is tried at every later
    tour position; the single strictly improving move with the highest
    expected objective wins (first found on ties). Feasibility cannot
    change because the plan is untouched.
    """
    base = PlanEvaluator(instance, scenarios, solution.tour).evaluate(solution.plan, alpha)
    best_z = base.expected_z
    best_tour: list[int] | None = None
    n = instance.n
    cities_with_picked = {int(instance.item_city[j]) for j in solution.picked_items()}
    tour = list(solution.tour)
    for p in range(1, n):
        city = tour[p]
        if city not in cities_with_picked:
            continue
        rest = tour[:p] + tour[p + 1:]
        for q in range(p + 1, n):
            cand = rest[:q] + [city] + rest[q:]
            z = PlanEvaluator(instance, scenarios, cand).evaluate(solution.plan, alpha).expected_z
            if z > best_z:
                best_z = z
                best_tour = cand
    if best_tour is None:
        return solution
    return Solution(tuple(best_tour), solution.plan)
