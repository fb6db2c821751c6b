"""End-to-end acceptance checks for the whole package.

Each check prints one ``acceptance NN: PASS`` line (visible with ``-s`` or
in the captured-output section). The scenario-set ordering check runs the
full benchmark protocol at its configured solver budget, so this module
takes roughly 30 solver-minutes of wall clock on a single core.
"""

from __future__ import annotations

import math
import random
import time

import numpy as np
import pytest

from ttpws.ea import EAConfig, ea_run
from ttpws.evaluation import (
    PlanEvaluator,
    Solution,
    chance_rate,
    deterministic_objective,
    evaluate,
)
from ttpws.harness import ExperimentConfig, run_experiment
from ttpws.instances import generate_scenarios
from ttpws.packing import PackConfig, bitflip_step, pack_ws
from ttpws.pipelines import PipelineConfig, run_c5, run_s5
from ttpws.report import report
from ttpws.stats import SampleGroup, dunn_bonferroni, kruskal_wallis
from ttpws.tours import TourSearchConfig, construct_tour

from conftest import (
    brute_force_best_plan,
    custom_scenarios,
    oracle_chance,
    oracle_dunn_verdicts,
    random_plan,
    random_tour,
)
from test_report import make_record, GOLDEN


def _ok(number: int, detail: str) -> None:
    print(f"\nacceptance {number:02d}: PASS  {detail}", flush=True)


def test_criterion_01_degenerate_model_equivalence(syn51):
    """Single-scenario model with full confidence reproduces the classic score."""
    start = time.perf_counter()
    ss = custom_scenarios([syn51.nominal_weights.tolist()], [1.0])
    rng = random.Random(2026)
    w = syn51.nominal_weights
    checked = 0
    worst = 0.0
    while checked < 100:
        plan = random_plan(rng, syn51.m, density=0.15)
        if sum(wj for wj, b in zip(w, plan) if b) > syn51.capacity:
            continue
        solution = Solution(random_tour(rng, syn51.n), np.array(plan, dtype=np.uint8))
        got = evaluate(syn51, ss, solution, alpha=1.0)
        want = deterministic_objective(syn51, w, solution)
        assert got.feasibility_rate == 1.0
        worst = max(worst, abs(got.expected_z - want))
        checked += 1
    assert worst <= 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    _ok(1, f"100 random solutions, max |diff| = {worst:.2e} ({elapsed:.2f}s)")


def test_criterion_02_chance_rate_oracle(toy4):
    """Feasibility rate equals a direct recomputation, bit for bit."""
    start = time.perf_counter()
    worked = [[4, 0, 0], [4, 0, 0], [4, 0, 0], [6, 0, 0], [6, 0, 0]]
    sets = [
        generate_scenarios(toy4, 20.0, "A"),
        generate_scenarios(toy4, 20.0, "C"),
        custom_scenarios(worked, (0.2, 0.2, 0.2, 0.2, 0.2)),
        custom_scenarios(worked, (0.3, 0.3, 0.2, 0.1, 0.1)),
    ]
    rng = random.Random(7)
    for ss in sets:
        for _ in range(2500):
            plan = random_plan(rng, toy4.m)
            assert chance_rate(toy4, ss, plan) == oracle_chance(toy4, ss, plan)
    plan = [1, 0, 0]
    rate_a = chance_rate(toy4, sets[2], plan)
    rate_c = chance_rate(toy4, sets[3], plan)
    assert rate_a == pytest.approx(0.6, abs=1e-12)
    assert rate_c == pytest.approx(0.8, abs=1e-12)
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    _ok(2, f"10^4 plans exact, worked rates {rate_a:.1f}/{rate_c:.1f} ({elapsed:.2f}s)")


def test_criterion_03_alpha_nesting(toy4, syn51):
    """No plan is feasible at 0.9 yet infeasible at 0.8."""
    start = time.perf_counter()
    rng = random.Random(99)
    cases = [
        (toy4, generate_scenarios(toy4, 1.0, "A"), 5000),
        (syn51, generate_scenarios(syn51, 20.0, "B"), 5000),
    ]
    violations = 0
    for inst, ss, count in cases:
        for _ in range(count):
            plan = random_plan(rng, inst.m, density=rng.uniform(0.05, 0.6))
            rate = chance_rate(inst, ss, plan)
            if rate >= 0.9 and rate < 0.8:
                violations += 1
    # spot-check the same implication through full evaluations
    ss = generate_scenarios(toy4, 1.0, "A")
    for _ in range(200):
        plan = np.array(random_plan(rng, toy4.m), dtype=np.uint8)
        sol = Solution((1, 2, 3, 4), plan)
        if evaluate(toy4, ss, sol, 0.9).is_feasible:
            assert evaluate(toy4, ss, sol, 0.8).is_feasible
    assert violations == 0
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    _ok(3, f"10^4 plans, 0 nesting violations ({elapsed:.2f}s)")


def test_criterion_04_exhaustive_optimality_ceiling(toy4):
    """No heuristic beats brute force on the tiny fixture; EA and the
    refined pipeline reach the optimum on nearly every seed."""
    start = time.perf_counter()
    alpha = 0.8
    ss = generate_scenarios(toy4, 1.0, "A")
    tour = construct_tour(toy4, TourSearchConfig(rng_seed=0))
    best_z, _ = brute_force_best_plan(toy4, ss, tour, alpha)
    ctx = PlanEvaluator(toy4, ss, tour)
    ceiling = best_z + 1e-9

    for exp in (0.0, 1.0, 5.0):
        plan = pack_ws(toy4, ss, tour, PackConfig(alpha=alpha, exp=exp, tau=1))
        z = ctx.evaluate(plan, alpha).expected_z
        assert z <= ceiling
        flipped = bitflip_step(toy4, ss, Solution(tour, plan), alpha)
        assert ctx.evaluate(flipped, alpha).expected_z <= ceiling

    ea_hits = 0
    for seed in range(30):
        plan, trace = ea_run(
            toy4, ss, tour, EAConfig(alpha=alpha, max_iterations=100_000, rng_seed=seed)
        )
        z = ctx.evaluate(plan, alpha).expected_z
        assert z <= ceiling
        if abs(z - best_z) <= 1e-9:
            ea_hits += 1

    c5_hits = 0
    for seed in range(30):
        result = run_c5(
            toy4, ss,
            PipelineConfig(algorithm="c5", alpha=alpha, budget_seconds=10.0,
                           rng_seed=seed, max_restarts=2),
        )
        z = result.evaluation.expected_z
        assert z <= ceiling
        if abs(z - best_z) <= 1e-9:
            c5_hits += 1

    for seed in range(3):
        result = run_s5(
            toy4, ss,
            PipelineConfig(algorithm="s5", alpha=alpha, budget_seconds=10.0,
                           rng_seed=seed, max_restarts=2),
        )
        assert result.evaluation.expected_z <= ceiling

    assert ea_hits >= 28
    assert c5_hits >= 28
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    _ok(4, f"optimum {best_z:.4f}; EA hits {ea_hits}/30, C5 hits {c5_hits}/30 ({elapsed:.1f}s)")


@pytest.fixture(scope="module")
def ordering_records(syn51_path, tmp_path_factory):
    """Benchmark protocol on the 51-city fixture: S5, three scenario sets,
    alpha 0.8, 10 repetitions at a 60 s solver budget each."""
    out_dir = tmp_path_factory.mktemp("ordering")
    config = ExperimentConfig(
        instances=(str(syn51_path),),
        output_dir=str(out_dir),
        scenario_labels=("A", "B", "C"),
        delta=20.0,
        alphas=(0.8,),
        algorithms=("s5",),
        repetitions=10,
        budget_seconds=60.0,
        master_seed=2026,
    )
    start = time.perf_counter()
    records = run_experiment(config)
    return records, time.perf_counter() - start


def test_criterion_05_scenario_set_ordering(ordering_records):
    """Lighter-weight scenario sets admit better expected objectives."""
    records, elapsed = ordering_records
    assert len(records) == 30
    means = {}
    for label in ("A", "B", "C"):
        values = [r.expected_z for r in records if r.scenario_label == label]
        assert len(values) == 10
        means[label] = sum(values) / len(values)
    assert means["C"] >= means["A"] >= means["B"]
    # runtime is dominated by the configured 30 x 60 s solver budget;
    # workers can spread it across cores when the machine has them
    _ok(5, f"means C={means['C']:.2f} >= A={means['A']:.2f} >= B={means['B']:.2f} ({elapsed:.0f}s)")


def test_criterion_06_refinement_dominance(toy4, syn51):
    """The refined pipeline never scores below the plain one on matched
    seeds, budgets and restart schedules."""
    start = time.perf_counter()
    cases = [(toy4, 1.0, range(10)), (syn51, 20.0, range(3))]
    for inst, delta, seeds in cases:
        ss = generate_scenarios(inst, delta, "A")
        for seed in seeds:
            shared = dict(alpha=0.8, budget_seconds=60.0, rng_seed=seed, max_restarts=2)
            s5r = run_s5(inst, ss, PipelineConfig(algorithm="s5", **shared))
            c5r = run_c5(inst, ss, PipelineConfig(algorithm="c5", **shared))
            assert c5r.evaluation.expected_z >= s5r.evaluation.expected_z
    elapsed = time.perf_counter() - start
    _ok(6, f"c5 >= s5 on all 13 matched runs ({elapsed:.1f}s)")


def test_criterion_07_statistics_oracle():
    start = time.perf_counter()
    h, p = kruskal_wallis([
        SampleGroup("1", (1, 2, 3)), SampleGroup("2", (4, 5, 6)), SampleGroup("3", (7, 8, 9)),
    ])
    assert abs(h - 7.2) <= 1e-6
    assert abs(p - math.exp(-3.6)) <= 1e-6
    h0, p0 = kruskal_wallis([SampleGroup("a", (2, 2)), SampleGroup("b", (2, 2, 2))])
    assert (h0, p0) == (0.0, 1.0)

    rng = random.Random(17)
    for _ in range(20):
        gs = [
            [rng.gauss(mu, 1.0) for _ in range(rng.randint(4, 10))]
            for mu in [rng.uniform(-2, 2) for _ in range(rng.randint(2, 4))]
        ]
        result = dunn_bonferroni([SampleGroup(str(i), tuple(g)) for i, g in enumerate(gs)], 0.05)
        want = oracle_dunn_verdicts(gs, 0.05)
        for i in range(len(gs)):
            for j in range(len(gs)):
                if i != j:
                    assert result.verdict(i, j) == want[(i, j)]
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _ok(7, f"H=7.2, p=e^-3.6, Dunn matches oracle on 20 datasets ({elapsed:.2f}s)")


def test_criterion_08_feasibility_guarantee(ordering_records):
    """Every persisted record meets its threshold or is flagged as the
    empty-plan fallback."""
    records, _ = ordering_records
    violations = [
        r for r in records
        if r.feasibility_rate < r.alpha and not r.empty_plan_fallback
    ]
    assert violations == []
    _ok(8, f"0 violations across {len(records)} records")


def test_criterion_09_experiment_determinism(toy4_path, syn51_path, tmp_path_factory):
    """Re-running the full experiment grid reproduces the score multiset."""
    start = time.perf_counter()

    def run_once(tag):
        out = tmp_path_factory.mktemp(f"det_{tag}")
        config = ExperimentConfig(
            instances=(str(toy4_path), str(syn51_path)),
            output_dir=str(out),
            scenario_labels=("A", "B"),
            delta=1.0,
            alphas=(0.8,),
            algorithms=("ea", "s5", "c5"),
            repetitions=2,
            budget_seconds=600.0,
            master_seed=11,
            max_restarts=1,
            ea_max_iterations=1500,
        )
        return run_experiment(config)

    first = run_once("a")
    second = run_once("b")
    assert len(first) == len(second) == 24
    assert sorted(r.expected_z for r in first) == sorted(r.expected_z for r in second)
    elapsed = time.perf_counter() - start
    _ok(9, f"identical multisets over {len(first)} cells ({elapsed:.1f}s)")


def test_criterion_10_report_format_fidelity():
    start = time.perf_counter()
    records = []
    levels = {"ea": 3642.27, "s5": 3673.13, "c5": 3783.87}
    for alg, v in levels.items():
        for r in range(30):
            records.append(make_record(alg, "A", v, r))
    for alg in levels:
        for r in range(30):
            records.append(make_record(alg, "B", 3613.85, r))
    text = report(records, fmt="text")
    assert text == GOLDEN.read_text()
    c5_line = next(l for l in text.splitlines() if l.startswith("bsc51        C5 (3)"))
    assert "3783.87" in c5_line and "1(+) 2(+)" in c5_line
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _ok(10, f"byte-identical golden table ({elapsed:.2f}s)")
