"""TTP benchmark instances and weighted weight-profile scenario sets.

An instance couples a TSP layout (cities, CEIL_2D distances) with a knapsack
component (items placed at cities 2..n). A scenario set holds k alternative
item-weight profiles, each with a probability of occurrence; together they
describe the stochastic weight model the solvers optimise against.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Scenario occurrence probabilities for the three named set layouts.
# A: uniform; B: heavy profiles likelier; C: light profiles likelier.
PROBABILITY_SETS: dict[str, tuple[float, ...]] = {
    "A": (0.2, 0.2, 0.2, 0.2, 0.2),
    "B": (0.1, 0.1, 0.2, 0.3, 0.3),
    "C": (0.3, 0.3, 0.2, 0.1, 0.1),
}

SCENARIO_COUNT = 5


class InstanceFormatError(ValueError):
    """An instance file does not follow the TTP benchmark text format."""


class ScenarioFormatError(ValueError):
    """A scenario set violates its structural invariants."""


@dataclass(frozen=True)
class Instance:
    """A parsed TTP benchmark instance. Immutable after construction."""

    name: str
    n: int                      # number of cities
    m: int                      # number of items
    coords: np.ndarray          # (n, 2) float, row i = city i+1
    profits: np.ndarray         # (m,) float
    nominal_weights: np.ndarray  # (m,) float, the deterministic benchmark weights
    item_city: np.ndarray       # (m,) int, 1-based city of each item, never 1
    capacity: float
    v_min: float
    v_max: float
    renting_rate: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("instance needs at least 2 cities")
        if self.coords.shape != (self.n, 2):
            raise ValueError("coords shape does not match city count")
        for arr in (self.profits, self.nominal_weights, self.item_city):
            if arr.shape != (self.m,):
                raise ValueError("item array length does not match item count")
        if np.any(self.profits < 0) or np.any(self.nominal_weights < 0):
            raise ValueError("profits and weights must be non-negative")
        if np.any(self.item_city == 1) or np.any(self.item_city < 1) or np.any(self.item_city > self.n):
            raise ValueError("items must sit at cities 2..n")
        if not self.capacity > 0:
            raise ValueError("capacity must be positive")
        if not (self.v_max > self.v_min > 0):
            raise ValueError("speeds must satisfy v_max > v_min > 0")
        if self.renting_rate < 0:
            raise ValueError("renting rate must be non-negative")
        for arr in (self.coords, self.profits, self.nominal_weights, self.item_city):
            arr.setflags(write=False)

    @property
    def nu(self) -> float:
        """Speed loss per unit of carried weight."""
        return (self.v_max - self.v_min) / self.capacity

    def distance(self, i: int, j: int) -> int:
        """CEIL_2D distance between cities i and j (1-based indices)."""
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise IndexError(f"city index out of range: ({i}, {j})")
        dx = self.coords[i - 1, 0] - self.coords[j - 1, 0]
        dy = self.coords[i - 1, 1] - self.coords[j - 1, 1]
        return math.ceil(math.hypot(dx, dy))

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        """(n+1, n+1) int matrix, 1-based; row/column 0 unused."""
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        d = np.ceil(np.sqrt((diff ** 2).sum(axis=2))).astype(np.int64)
        full = np.zeros((self.n + 1, self.n + 1), dtype=np.int64)
        full[1:, 1:] = d
        full.setflags(write=False)
        return full

    def items_at_city(self) -> list[list[int]]:
        """Item indices grouped by city (index c holds city c's items)."""
        groups: list[list[int]] = [[] for _ in range(self.n + 1)]
        for j, c in enumerate(self.item_city):
            groups[int(c)].append(j)
        return groups


@dataclass(frozen=True)
class ScenarioSet:
    """k item-weight profiles with occurrence probabilities summing to 1."""

    weights: np.ndarray   # (k, m) float, row s = profile of scenario s
    probs: np.ndarray     # (k,) float
    delta: float
    label: str            # "A" | "B" | "C" | "custom"

    def __post_init__(self):
        if self.weights.ndim != 2 or self.weights.shape[0] < 1:
            raise ScenarioFormatError("need at least one scenario weight vector")
        if self.probs.shape != (self.weights.shape[0],):
            raise ScenarioFormatError("probability count does not match scenario count")
        if np.any(self.weights < 0):
            raise ScenarioFormatError("scenario weights must be non-negative")
        if np.any(self.probs < 0) or np.any(self.probs > 1):
            raise ScenarioFormatError("probabilities must lie in [0, 1]")
        if abs(math.fsum(self.probs.tolist()) - 1.0) > 1e-12:
            raise ScenarioFormatError("probabilities must sum to 1")
        if self.delta < 0:
            raise ScenarioFormatError("delta must be non-negative")
        self.weights.setflags(write=False)
        self.probs.setflags(write=False)

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def m(self) -> int:
        return self.weights.shape[1]


def generate_scenarios(instance: Instance, delta: float, label: str) -> ScenarioSet:
    """Build the 5-scenario set for an instance.

    Profiles shift each nominal weight a by -delta, -delta/2, 0, +delta/2,
    +delta; the two downward shifts keep a unchanged when it would go
    negative. Probabilities come from the named set layout (A, B or C).
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if label not in PROBABILITY_SETS:
        raise ValueError(f"unknown scenario set label: {label!r}")
    a = instance.nominal_weights
    rows = np.stack([
        np.where(a >= delta, a - delta, a),
        np.where(a >= delta / 2, a - delta / 2, a),
        a.copy(),
        a + delta / 2,
        a + delta,
    ])
    probs = np.array(PROBABILITY_SETS[label], dtype=float)
    return ScenarioSet(weights=rows, probs=probs, delta=float(delta), label=label)


def serialize_scenarios(scenarios: ScenarioSet) -> str:
    """Scenario set as JSON text; round-trips exactly through parse_scenarios."""
    payload = {
        "label": scenarios.label,
        "delta": scenarios.delta,
        "probs": scenarios.probs.tolist(),
        "weights": scenarios.weights.tolist(),
    }
    return json.dumps(payload, indent=2) + "\n"


def parse_scenarios(text: str) -> ScenarioSet:
    """Parse a scenario JSON document, validating all invariants."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"not valid JSON: {exc}") from exc
    try:
        label = str(payload["label"])
        delta = float(payload["delta"])
        probs = np.array(payload["probs"], dtype=float)
        weights = np.array(payload["weights"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"missing or malformed field: {exc}") from exc
    if weights.ndim != 2:
        raise ScenarioFormatError("weights must be a list of equal-length vectors")
    return ScenarioSet(weights=weights, probs=probs, delta=delta, label=label)


def load_scenarios(path) -> ScenarioSet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenarios(fh.read())


def save_scenarios(scenarios: ScenarioSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_scenarios(scenarios))


_HEADER_KEYS = {
    "PROBLEM NAME": "name",
    "KNAPSACK DATA TYPE": "knapsack_type",
    "DIMENSION": "n",
    "NUMBER OF ITEMS": "m",
    "CAPACITY OF KNAPSACK": "capacity",
    "MIN SPEED": "v_min",
    "MAX SPEED": "v_max",
    "RENTING RATIO": "renting_rate",
    "EDGE_WEIGHT_TYPE": "edge_weight_type",
}


def _fail(lineno: int, line: str, why: str) -> InstanceFormatError:
    return InstanceFormatError(f"line {lineno}: {why}: {line.strip()!r}")


def parse_instance(text: str) -> Instance:
    """Parse the TTP benchmark text format.

    Expects the header block, then NODE_COORD_SECTION with n rows of
    ``index x y``, then ITEMS SECTION with m rows of
    ``index profit weight city``. Whitespace-tolerant; raises
    InstanceFormatError naming the offending line otherwise.
    """
    headers: dict[str, str] = {}
    lines = text.splitlines()
    i = 0
    coord_rows: list[tuple[float, float]] | None = None
    item_rows: list[tuple[float, float, int]] | None = None

    def read_block(start: int, count: int, kind: str) -> tuple[int, list[list[str]]]:
        rows = []
        ln = start
        while len(rows) < count:
            if ln >= len(lines):
                raise InstanceFormatError(
                    f"line {ln + 1}: unexpected end of file, expected {count} {kind} rows"
                )
            if lines[ln].strip():
                rows.append((ln + 1, lines[ln].split()))
            ln += 1
        return ln, rows

    while i < len(lines):
        line = lines[i]
        stripped = line.strip()
        if not stripped:
            i += 1
            continue
        if ":" not in stripped:
            raise _fail(i + 1, line, "expected 'KEY: value'")
        raw_key = stripped.split(":", 1)[0]
        key = " ".join(raw_key.split())
        if key.startswith("NODE_COORD_SECTION"):
            if "n" not in headers:
                raise _fail(i + 1, line, "NODE_COORD_SECTION before DIMENSION")
            i, rows = read_block(i + 1, int(headers["n"]), "coordinate")
            coord_rows = []
            for lineno, parts in rows:
                if len(parts) != 3:
                    raise _fail(lineno, " ".join(parts), "expected 'index x y'")
                try:
                    idx, x, y = int(parts[0]), float(parts[1]), float(parts[2])
                except ValueError:
                    raise _fail(lineno, " ".join(parts), "non-numeric coordinate row")
                if idx != len(coord_rows) + 1:
                    raise _fail(lineno, " ".join(parts), f"expected city index {len(coord_rows) + 1}")
                coord_rows.append((x, y))
            continue
        if key.startswith("ITEMS SECTION"):
            if "m" not in headers:
                raise _fail(i + 1, line, "ITEMS SECTION before NUMBER OF ITEMS")
            i, rows = read_block(i + 1, int(headers["m"]), "item")
            item_rows = []
            for lineno, parts in rows:
                if len(parts) != 4:
                    raise _fail(lineno, " ".join(parts), "expected 'index profit weight city'")
                try:
                    idx = int(parts[0])
                    profit, weight, city = float(parts[1]), float(parts[2]), int(parts[3])
                except ValueError:
                    raise _fail(lineno, " ".join(parts), "non-numeric item row")
                if idx != len(item_rows) + 1:
                    raise _fail(lineno, " ".join(parts), f"expected item index {len(item_rows) + 1}")
                if profit < 0 or weight < 0:
                    raise _fail(lineno, " ".join(parts), "negative profit or weight")
                if city == 1:
                    raise _fail(lineno, " ".join(parts), "items may not be assigned to city 1")
                item_rows.append((profit, weight, city))
            continue
        if key not in _HEADER_KEYS:
            raise _fail(i + 1, line, f"unknown header key {key!r}")
        headers[_HEADER_KEYS[key]] = stripped.split(":", 1)[1].strip()
        i += 1

    for field in ("name", "n", "m", "capacity", "v_min", "v_max", "renting_rate", "edge_weight_type"):
        if field not in headers:
            raise InstanceFormatError(f"missing required header for {field}")
    if headers["edge_weight_type"] != "CEIL_2D":
        raise InstanceFormatError(
            f"unsupported EDGE_WEIGHT_TYPE {headers['edge_weight_type']!r}, only CEIL_2D is supported"
        )
    if coord_rows is None:
        raise InstanceFormatError("missing NODE_COORD_SECTION")
    if item_rows is None:
        raise InstanceFormatError("missing ITEMS SECTION")

    try:
        n = int(headers["n"])
        m = int(headers["m"])
        capacity = float(headers["capacity"])
        v_min = float(headers["v_min"])
        v_max = float(headers["v_max"])
        renting_rate = float(headers["renting_rate"])
    except ValueError as exc:
        raise InstanceFormatError(f"non-numeric header value: {exc}") from exc
    if len(coord_rows) != n:
        raise InstanceFormatError(f"DIMENSION is {n} but {len(coord_rows)} coordinate rows were read")
    if len(item_rows) != m:
        raise InstanceFormatError(f"NUMBER OF ITEMS is {m} but {len(item_rows)} item rows were read")

    try:
        return Instance(
            name=headers["name"],
            n=n,
            m=m,
            coords=np.array(coord_rows, dtype=float),
            profits=np.array([r[0] for r in item_rows], dtype=float),
            nominal_weights=np.array([r[1] for r in item_rows], dtype=float),
            item_city=np.array([r[2] for r in item_rows], dtype=np.int64),
            capacity=capacity,
            v_min=v_min,
            v_max=v_max,
            renting_rate=renting_rate,
        )
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc


def load_instance(path) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read())
