"""Result tables in the benchmark layout: mean | std | stat per scenario set.

The stat column compares the algorithms within one (instance, scenario set,
alpha) cell group by rank tests; each algorithm lists its verdict against
every other algorithm number, '+' for significantly better, '-' for worse,
'*' for no significant difference and 'n/a' for absent opponents.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from typing import Iterable, Sequence

from .harness import ALGORITHM_ORDER, RunRecord
from .stats import SampleGroup, dunn_bonferroni

ALGORITHM_DISPLAY = {"ea": "(1+1)EA (1)", "s5": "S5 (2)", "c5": "C5 (3)"}
ALGORITHM_NUMBER = {name: i + 1 for i, name in enumerate(ALGORITHM_ORDER)}


def _population_std(values: Sequence[float]) -> float:
    mean = sum(values) / len(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))


def aggregate(records: Iterable[RunRecord], significance: float = 0.05) -> list[dict]:
    """One row per (instance, alpha, scenario set, algorithm) with stats."""
    cells: dict[tuple, list[float]] = defaultdict(list)
    for r in records:
        cells[(r.instance, r.alpha, r.scenario_label, r.algorithm)].append(r.expected_z)

    groups: dict[tuple, list[str]] = defaultdict(list)
    for (instance, alpha, label, algorithm) in cells:
        groups[(instance, alpha, label)].append(algorithm)

    rows: list[dict] = []
    for (instance, alpha, label), algorithms in sorted(groups.items()):
        present = [a for a in ALGORITHM_ORDER if a in algorithms]
        verdicts: dict[str, dict[str, str]] = {a: {} for a in present}
        if len(present) >= 2:
            result = dunn_bonferroni(
                [SampleGroup(a, tuple(cells[(instance, alpha, label, a)])) for a in present],
                significance,
            )
            for i, a in enumerate(present):
                for j, b in enumerate(present):
                    if i != j:
                        verdicts[a][b] = result.verdict(i, j)
        for a in present:
            values = cells[(instance, alpha, label, a)]
            stat = " ".join(
                f"{ALGORITHM_NUMBER[other]}({verdicts[a].get(other, 'n/a')})"
                for other in ALGORITHM_ORDER
                if other != a
            )
            rows.append({
                "instance": instance,
                "alpha": alpha,
                "scenario": label,
                "algorithm": a,
                "runs": len(values),
                "mean": sum(values) / len(values),
                "std": _population_std(values),
                "stat": stat,
            })
    return rows


def render_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf, fieldnames=["instance", "alpha", "scenario", "algorithm", "runs", "mean", "std", "stat"]
    )
    writer.writeheader()
    for row in rows:
        out = dict(row)
        out["mean"] = repr(row["mean"])
        out["std"] = repr(row["std"])
        writer.writerow(out)
    return buf.getvalue()


def render_json(rows: list[dict]) -> str:
    return json.dumps(rows, indent=2) + "\n"


def render_text(rows: list[dict]) -> str:
    """Aligned table, one section per alpha, column group per scenario set."""
    by_alpha: dict[float, list[dict]] = defaultdict(list)
    for row in rows:
        by_alpha[row["alpha"]].append(row)

    out = io.StringIO()
    for alpha in sorted(by_alpha):
        section = by_alpha[alpha]
        labels = sorted({r["scenario"] for r in section})
        instances = sorted({r["instance"] for r in section})
        indexed = {(r["instance"], r["scenario"], r["algorithm"]): r for r in section}

        out.write(f"=== alpha = {alpha:g} ===\n")
        head = f"{'instance':<12} {'algorithm':<13}"
        sub = f"{'':<12} {'':<13}"
        for label in labels:
            head += f" | {'Set ' + label:<37}"
            sub += f" | {'mean':>11} {'std':>9}  {'stat':<13}"
        out.write(head.rstrip() + "\n")
        out.write(sub.rstrip() + "\n")
        out.write("-" * len(sub) + "\n")
        for instance in instances:
            algorithms = [a for a in ALGORITHM_ORDER
                          if any((instance, lb, a) in indexed for lb in labels)]
            for a in algorithms:
                line = f"{instance:<12} {ALGORITHM_DISPLAY[a]:<13}"
                for label in labels:
                    row = indexed.get((instance, label, a))
                    if row is None:
                        line += f" | {'n/a':>11} {'n/a':>9}  {'':<13}"
                    else:
                        line += f" | {row['mean']:>11.2f} {row['std']:>9.2f}  {row['stat']:<13}"
                out.write(line.rstrip() + "\n")
        out.write("\n")
    return out.getvalue()


def report(records: Iterable[RunRecord], fmt: str = "text", significance: float = 0.05) -> str:
    """Render run records in one of the supported formats."""
    rows = aggregate(records, significance)
    if fmt == "csv":
        return render_csv(rows)
    if fmt == "json":
        return render_json(rows)
    if fmt == "text":
        return render_text(rows)
    raise ValueError(f"unknown report format {fmt!r}")
