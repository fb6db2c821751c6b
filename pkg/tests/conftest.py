"""Shared fixtures and independent reference implementations.

The oracle_* helpers re-derive objective values, feasibility rates and
travel times straight from their definitions, without touching the package
evaluation code, so tests can cross-check both implementations.
"""

from __future__ import annotations

import itertools
import math
import random

import numpy as np
import pytest

from ttpws.instances import Instance, ScenarioSet, parse_instance

# 4 cities on a 4x3 rectangle, items at cities 2..4; perimeter tour length 14.
TOY4_TEXT = """\
PROBLEM NAME: toy4
KNAPSACK DATA TYPE: uncorrelated
DIMENSION: 4
NUMBER OF ITEMS: 3
CAPACITY OF KNAPSACK: 4
MIN SPEED: 0.1
MAX SPEED: 1
RENTING RATIO: 1
EDGE_WEIGHT_TYPE: CEIL_2D
NODE_COORD_SECTION\t(INDEX, X, Y):
1 0 0
2 4 0
3 4 3
4 0 3
ITEMS SECTION\t(INDEX, PROFIT, WEIGHT, ASSIGNED NODE NUMBER):
1 100 3 2
2 40 1 3
3 60 2 4
"""


@pytest.fixture(scope="session")
def toy4() -> Instance:
    return parse_instance(TOY4_TEXT)


@pytest.fixture(scope="session")
def toy4_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("instances") / "toy4.ttp"
    path.write_text(TOY4_TEXT, encoding="utf-8")
    return path


def synthetic_instance_text(n: int = 51, seed: int = 7, name: str = "syn51") -> str:
    """Deterministic benchmark-style instance: one item per city 2..n.

    Weights are uniform integers; profits are weight plus a constant, the
    bounded-strongly-correlated pattern of the benchmark suite.
    """
    rng = random.Random(seed)
    coords = [(rng.randint(0, 200), rng.randint(0, 200)) for _ in range(n)]
    weights = [rng.randint(1, 100) for _ in range(n - 1)]
    profits = [w + 100 for w in weights]
    capacity = max(1, round(sum(weights) * 5 / 11))
    lines = [
        f"PROBLEM NAME: {name}",
        "KNAPSACK DATA TYPE: bounded strongly corr",
        f"DIMENSION: {n}",
        f"NUMBER OF ITEMS: {n - 1}",
        f"CAPACITY OF KNAPSACK: {capacity}",
        "MIN SPEED: 0.1",
        "MAX SPEED: 1",
        "RENTING RATIO: 2",
        "EDGE_WEIGHT_TYPE: CEIL_2D",
        "NODE_COORD_SECTION\t(INDEX, X, Y):",
    ]
    lines += [f"{i + 1} {x} {y}" for i, (x, y) in enumerate(coords)]
    lines.append("ITEMS SECTION\t(INDEX, PROFIT, WEIGHT, ASSIGNED NODE NUMBER):")
    lines += [f"{j + 1} {profits[j]} {weights[j]} {j + 2}" for j in range(n - 1)]
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="session")
def syn51() -> Instance:
    return parse_instance(synthetic_instance_text())


@pytest.fixture(scope="session")
def syn51_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("instances") / "syn51.ttp"
    path.write_text(synthetic_instance_text(), encoding="utf-8")
    return path


def custom_scenarios(weights, probs, delta: float = 0.0) -> ScenarioSet:
    return ScenarioSet(
        weights=np.array(weights, dtype=float),
        probs=np.array(probs, dtype=float),
        delta=delta,
        label="custom",
    )


def degenerate_scenarios(instance: Instance) -> ScenarioSet:
    """Single scenario holding the nominal weights with probability 1."""
    return custom_scenarios([instance.nominal_weights.tolist()], [1.0])


# ---------------------------------------------------------------------------
# definition-level oracles (independent of the package evaluation code)
# ---------------------------------------------------------------------------

def oracle_distance(instance: Instance, i: int, j: int) -> int:
    (x1, y1), (x2, y2) = instance.coords[i - 1], instance.coords[j - 1]
    return math.ceil(math.sqrt((x1 - x2) ** 2 + (y1 - y2) ** 2))


def oracle_travel_time(instance: Instance, tour, weights, plan) -> float:
    """Leg-by-leg tour walk under one weight profile; inf when stalled."""
    nu = (instance.v_max - instance.v_min) / instance.capacity
    carried = 0.0
    time = 0.0
    n = len(tour)
    for i in range(n):
        city = tour[i]
        for j in range(instance.m):
            if plan[j] and int(instance.item_city[j]) == city:
                carried += weights[j]
        speed = instance.v_max - nu * carried
        if speed <= 0:
            return math.inf
        time += oracle_distance(instance, city, tour[(i + 1) % n]) / speed
    return time


def oracle_objective(instance: Instance, tour, weights, plan) -> float:
    profit = sum(p for p, b in zip(instance.profits, plan) if b)
    return profit - instance.renting_rate * oracle_travel_time(instance, tour, weights, plan)


def oracle_chance(instance: Instance, scenarios: ScenarioSet, plan) -> float:
    rate = 0.0
    for s in range(scenarios.k):
        total = sum(scenarios.weights[s, j] for j in range(scenarios.m) if plan[j])
        if total <= instance.capacity:
            rate += float(scenarios.probs[s])
    return rate


def oracle_expected(instance: Instance, scenarios: ScenarioSet, tour, plan) -> float:
    """Expected objective over feasible scenarios, -inf when none fits."""
    profit = sum(p for p, b in zip(instance.profits, plan) if b)
    expected_time = 0.0
    any_feasible = False
    for s in range(scenarios.k):
        total = sum(scenarios.weights[s, j] for j in range(scenarios.m) if plan[j])
        if total <= instance.capacity:
            any_feasible = True
            expected_time += float(scenarios.probs[s]) * oracle_travel_time(
                instance, tour, scenarios.weights[s], plan
            )
    if not any_feasible:
        return float("-inf")
    return profit - instance.renting_rate * expected_time


def all_plans(m: int):
    for bits in itertools.product((0, 1), repeat=m):
        yield list(bits)


def brute_force_best_plan(instance: Instance, scenarios: ScenarioSet, tour, alpha: float):
    """Exhaustive (plan-space) optimum for a fixed tour, by the oracle."""
    best_z = float("-inf")
    best_plan = None
    for plan in all_plans(instance.m):
        if oracle_chance(instance, scenarios, plan) >= alpha:
            z = oracle_expected(instance, scenarios, tour, plan)
            if z > best_z:
                best_z = z
                best_plan = plan
    return best_z, best_plan


def brute_force_best_solution(instance: Instance, scenarios: ScenarioSet, alpha: float):
    """Exhaustive optimum over every tour and plan, by the oracle."""
    best = (float("-inf"), None, None)
    for rest in itertools.permutations(range(2, instance.n + 1)):
        tour = (1,) + rest
        z, plan = brute_force_best_plan(instance, scenarios, tour, alpha)
        if z > best[0]:
            best = (z, tour, plan)
    return best


def random_plan(rng: random.Random, m: int, density: float = 0.5) -> list[int]:
    return [1 if rng.random() < density else 0 for _ in range(m)]


def random_tour(rng: random.Random, n: int) -> tuple[int, ...]:
    rest = list(range(2, n + 1))
    rng.shuffle(rest)
    return (1, *rest)


def oracle_dunn_verdicts(value_lists, significance):
    """Definition-level Dunn test with Bonferroni, built on scipy primitives."""
    import scipy.stats

    pooled = [v for g in value_lists for v in g]
    ranks = scipy.stats.rankdata(pooled)
    mean_ranks = []
    start = 0
    for g in value_lists:
        mean_ranks.append(ranks[start:start + len(g)].mean())
        start += len(g)
    n = len(pooled)
    _, counts = np.unique(pooled, return_counts=True)
    tie_sum = float(((counts ** 3) - counts).sum())
    var_base = n * (n + 1) / 12.0 - tie_sum / (12.0 * (n - 1))
    g = len(value_lists)
    n_pairs = g * (g - 1) // 2
    _, omnibus_p = scipy.stats.kruskal(*value_lists)
    verdicts = {}
    for i in range(g):
        for j in range(g):
            if i == j:
                continue
            se = math.sqrt(var_base * (1 / len(value_lists[i]) + 1 / len(value_lists[j])))
            z = (mean_ranks[i] - mean_ranks[j]) / se if se > 0 else 0.0
            p_adj = min(1.0, 2 * scipy.stats.norm.sf(abs(z)) * n_pairs)
            if omnibus_p < significance and p_adj < significance:
                verdicts[(i, j)] = "+" if z > 0 else "-"
            else:
                verdicts[(i, j)] = "*"
    return verdicts
