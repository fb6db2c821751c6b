"""Chance-constrained travelling thief problem under weighted weight scenarios."""

from .ea import EAConfig, EATrace, ea_run
from .evaluation import (
    Evaluation,
    PlanEvaluator,
    Solution,
    chance_rate,
    deterministic_objective,
    evaluate,
    incremental_eval_context,
)
from .harness import ExperimentConfig, RunRecord, run_experiment, solve_single
from .instances import (
    Instance,
    InstanceFormatError,
    ScenarioFormatError,
    ScenarioSet,
    generate_scenarios,
    load_instance,
    load_scenarios,
    parse_instance,
    parse_scenarios,
    save_scenarios,
    serialize_scenarios,
)
from .packing import PackConfig, bitflip_step, item_scores, pack_iterative_ws, pack_ws
from .pipelines import PipelineConfig, PipelineResult, c5_ws, run_c5, run_s5, s5_ws
from .report import report
from .stats import ComparisonResult, SampleGroup, dunn_bonferroni, kruskal_wallis
from .tours import TourSearchConfig, construct_tour, insertion_step, tour_length

__all__ = [name for name in dir() if not name.startswith("_")]
