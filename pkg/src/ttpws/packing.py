"""Greedy packing construction and refinement under the scenario model.

pack_ws builds a plan by score-ordered greedy insertion guarded by the
feasibility threshold, with periodic objective checkpoints that roll back
unhelpful stretches at halved checkpoint frequency. pack_iterative_ws
searches the scoring exponent; bitflip_step is a one-pass local search on
the plan bits.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .evaluation import NEG_INF, PlanEvaluator, Solution
from .instances import Instance, ScenarioSet


@dataclass(frozen=True)
class PackConfig:
    alpha: float
    exp: float = 1.0   # scoring exponent on profit / mean-weight
    tau: int = 10      # checkpoint frequency divisor, omega = max(1, m // tau)

    def __post_init__(self):
        if not (0 < self.alpha <= 1):
            raise ValueError("alpha must lie in (0, 1]")
        if self.exp < 0:
            raise ValueError("exp must be non-negative")
        if self.tau < 1:
            raise ValueError("tau must be a positive integer")


def mean_scenario_weights(scenarios: ScenarioSet) -> np.ndarray:
    """Probability-weighted per-item mean of the scenario weight profiles."""
    return scenarios.probs @ scenarios.weights


def item_scores(
    instance: Instance,
    scenarios: ScenarioSet,
    tour: Sequence[int],
    exp: float,
) -> np.ndarray:
    """Desirability of each item on a given tour.

    score = profit^exp / (mean_weight^exp * remaining_distance), where the
    remaining distance is measured from the item's city to the tour end.
    Items whose mean weight or remaining distance is zero score +inf.
    """
    ctx = PlanEvaluator(instance, scenarios, tour)
    wbar = mean_scenario_weights(scenarios)
    scores = np.empty(instance.m)
    for j in range(instance.m):
        d_rem = ctx.remaining_distance(j)
        if d_rem == 0 or (wbar[j] == 0 and exp > 0):
            scores[j] = math.inf
        else:
            scores[j] = float(instance.profits[j]) ** exp / (float(wbar[j]) ** exp * d_rem)
    return scores


def _score_order(scores: np.ndarray) -> list[int]:
    # best score first, ties broken toward the lower item index
    return sorted(range(len(scores)), key=lambda j: (-scores[j], j))


def pack_ws(
    instance: Instance,
    scenarios: ScenarioSet,
    tour: Sequence[int],
    config: PackConfig,
) -> np.ndarray:
    """Greedy plan construction guarded by the feasibility threshold.

    Items are tried in non-increasing score order. An item that drops the
    feasibility rate below alpha is removed again. Every omega processed
    items the expected objective is checkpointed: a worse value rolls the
    plan and the item cursor back to the last checkpoint and halves omega;
    otherwise the checkpoint advances. A final checkpoint after the pass
    commits any trailing gain. The returned plan always satisfies the
    threshold (the empty plan does trivially).
    """
    ctx = PlanEvaluator(instance, scenarios, tour)
    alpha = config.alpha
    m = instance.m
    k = scenarios.k
    w = scenarios.weights.tolist()
    probs = scenarios.probs.tolist()
    cap = instance.capacity
    order = _score_order(item_scores(instance, scenarios, tour, config.exp))

    omega = max(1, m // config.tau)
    y = [0] * m
    totals = [0.0] * k
    y_best = y.copy()
    z_best = NEG_INF
    t_best = 0

    def rate_of(tot: list[float]) -> float:
        r = 0.0
        for s in range(k):
            if tot[s] <= cap:
                r += probs[s]
        return r

    def totals_of(plan: list[int]) -> list[float]:
        tot = [0.0] * k
        for j, bit in enumerate(plan):
            if bit:
                for s in range(k):
                    tot[s] += w[s][j]
        return tot

    t = 0
    while t < m and omega >= 1:
        j = order[t]
        y[j] = 1
        for s in range(k):
            totals[s] += w[s][j]
        new_rate = rate_of(totals)
        t += 1
        if new_rate >= alpha:
            if t % omega == 0:
                z = ctx.evaluate(y, alpha).expected_z
                if z < z_best:
                    y = y_best.copy()
                    totals = totals_of(y)
                    t = t_best
                    omega //= 2
                else:
                    y_best = y.copy()
                    t_best = t
                    z_best = z
        else:
            y[j] = 0
            for s in range(k):
                totals[s] -= w[s][j]

    if y != y_best:
        z = ctx.evaluate(y, alpha).expected_z
        if z >= z_best:
            y_best = y
    return np.array(y_best, dtype=np.uint8)


def pack_iterative_ws(
    instance: Instance,
    scenarios: ScenarioSet,
    tour: Sequence[int],
    alpha: float,
    budget_seconds: float = math.inf,
    *,
    exp_low: float = 0.0,
    exp_high: float = 10.0,
    refinements: int = 10,
    min_interval: float = 0.1,
    tau: int = 10,
) -> np.ndarray:
    """Exponent search around pack_ws.

    Evaluates the interval midpoint first (so the smallest budget still
    yields that plan), then the ends, then repeatedly narrows the interval
    around the best exponent. Stops after `refinements` rounds, when the
    interval is narrower than `min_interval`, or when the budget runs out.
    """
    if not budget_seconds > 0:
        raise ValueError("budget_seconds must be positive")
    deadline = time.perf_counter() + budget_seconds
    ctx = PlanEvaluator(instance, scenarios, tour)
    cache: dict[float, tuple[float, np.ndarray]] = {}

    def run(exp: float) -> None:
        if exp in cache:
            return
        plan = pack_ws(instance, scenarios, tour, PackConfig(alpha=alpha, exp=exp, tau=tau))
        cache[exp] = (ctx.evaluate(plan, alpha).expected_z, plan)

    lo, hi = exp_low, exp_high
    mid = (lo + hi) / 2
    run(mid)
    for e in (lo, hi):
        if time.perf_counter() < deadline:
            run(e)

    for _ in range(refinements):
        if hi - lo < min_interval or time.perf_counter() >= deadline:
            break
        evaluated = [e for e in (lo, mid, hi) if e in cache]
        best_e = max(evaluated, key=lambda e: (cache[e][0], -e))
        if best_e == lo:
            hi = mid
        elif best_e == hi:
            lo = mid
        else:
            lo, hi = (lo + mid) / 2, (mid + hi) / 2
        mid = (lo + hi) / 2
        for e in (mid, lo, hi):
            if time.perf_counter() >= deadline:
                break
            run(e)

    best_exp = min(cache, key=lambda e: (-cache[e][0], e))
    return cache[best_exp][1]


def bitflip_step(
    instance: Instance,
    scenarios: ScenarioSet,
    solution: Solution,
    alpha: float,
) -> np.ndarray:
    """One pass over all plan bits, keeping flips that strictly improve.

    A flip survives only if the plan stays feasible at alpha; the result
    never scores below the input plan.
    """
    ctx = PlanEvaluator(instance, scenarios, solution.tour)
    y = [int(b) for b in solution.plan]
    current = ctx.evaluate(y, alpha).expected_z
    for j in range(instance.m):
        y[j] ^= 1
        cand = ctx.evaluate(y, alpha)
        if cand.feasibility_rate >= alpha and cand.expected_z > current:
            current = cand.expected_z
        else:
            y[j] ^= 1
    return np.array(y, dtype=np.uint8)
