"""Pareto fronts over (W, C, V) by the epsilon-constraint method.

Coverage is integral, so it is handled by an exact outer loop over floors
V >= v. For each floor the cost axis is scanned between the cost-minimal
and the waiting-time-minimal anchors, then refined by repeatedly asking for
the best waiting time strictly below each found cost.
"""

import csv
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Callable, Iterator, List, NamedTuple, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .config import config
from .errors import SchemaError
from .exact import solve
from .instance import Instance, ObjectiveVector, Solution
from .scalarization import EpsilonConstraint, cap_slack
from .schema import SCHEMA_VERSION, canonical_json, read_solution, solution_payload

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("v", "cost", "waiting_hours", "solution_id", "optimality_flag", "mean_waiting_hours")


@dataclass(frozen=True)
class GridSpec:
    """Epsilon grid: cost levels per coverage floor, optional refinement."""

    cost_levels: int = config.COST_LEVELS
    refine: bool = True
    coverage_levels: Optional[Tuple[int, ...]] = None
    refine_limit: Optional[int] = None

    def __post_init__(self):
        if self.cost_levels < 1:
            raise ValueError("cost_levels must be at least 1")
        if self.refine_limit is not None and self.refine_limit < 1:
            raise ValueError("refine_limit must be at least 1")

    def doubled(self) -> "GridSpec":
        return replace(self, cost_levels=self.cost_levels * 2)


@dataclass(frozen=True)
class FrontPoint:
    solution: Solution
    objective: ObjectiveVector
    optimal: bool = True


@dataclass
class ParetoFront:
    """Mutually nondominated points sorted by (V desc, C asc, W asc)."""

    points: List[FrontPoint]
    approximate: bool = False

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[FrontPoint]:
        return iter(self.points)

    def vectors(self) -> List[ObjectiveVector]:
        return [p.objective for p in self.points]


# A cell solver answers one epsilon-constraint problem with
# (solution, objective, complete): solution is None when nothing was found,
# complete is False when a search budget cut the cell short.
CellResult = Tuple[Optional[Solution], Optional[ObjectiveVector], bool]
CellSolver = Callable[[EpsilonConstraint], CellResult]


def _objective(item: Any) -> ObjectiveVector:
    return item.objective if hasattr(item, "objective") else item


def nondominated_filter(points: Sequence[Any]) -> List[Any]:
    """Keep the points no other point dominates.

    Accepts ObjectiveVectors or anything with an ``objective`` attribute.
    Order is preserved; among equal objective vectors the first is kept.
    """
    if not points:
        return []
    values = np.array([_objective(p).minimization_tuple() for p in points], dtype=float)
    n = values.shape[0]
    weak = (values[None, :, :] <= values[:, None, :]).all(axis=2)
    strict = (values[None, :, :] < values[:, None, :]).any(axis=2)
    earlier = np.tri(n, k=-1, dtype=bool)
    dominated = (weak & (strict | earlier)).any(axis=1)
    return [p for p, d in zip(points, dominated) if not d]


def hypervolume(
    front: Union[ParetoFront, Sequence[Any]], reference: Union[ObjectiveVector, Sequence[float]]
) -> float:
    """Volume dominated by the front up to the reference point.

    Coverage is negated so every axis is minimised. The reference must be
    weakly dominated by every point; points on its boundary add nothing.

    Raises:
        ValueError: the reference is not dominated by some point
    """
    items = front.points if isinstance(front, ParetoFront) else list(front)
    if isinstance(reference, ObjectiveVector):
        ref = np.array(reference.minimization_tuple(), dtype=float)
    else:
        w, c, v = reference
        ref = np.array([w, c, -v], dtype=float)
    if not np.all(np.isfinite(ref)):
        raise ValueError("reference point must be finite")
    points = np.array([_objective(p).minimization_tuple() for p in items], dtype=float).reshape(-1, 3)
    if np.any(points > ref):
        raise ValueError("reference point is not dominated by every front point")
    if points.shape[0] == 0:
        return 0.0

    order = np.argsort(points[:, 2], kind="stable")
    points = points[order]
    levels = np.unique(points[:, 2])
    bounds = np.append(levels[1:], ref[2])
    volume = 0.0
    for level, upper in zip(levels, bounds):
        slab = points[points[:, 2] <= level]
        volume += _area(slab[:, :2], ref[:2]) * (upper - level)
    return float(volume)


def _area(points: np.ndarray, ref: np.ndarray) -> float:
    order = np.lexsort((points[:, 1], points[:, 0]))
    best_y = ref[1]
    area = 0.0
    for x, y in points[order]:
        if y < best_y:
            area += (ref[0] - x) * (best_y - y)
            best_y = y
    return area


def default_reference(vectors: Sequence[ObjectiveVector]) -> ObjectiveVector:
    """A reference point strictly worse than every given vector."""
    if not vectors:
        return ObjectiveVector(1.0, 1.0, -1)
    return ObjectiveVector(
        waiting_time_hours=max(v.waiting_time_hours for v in vectors) * 1.1 + 1.0,
        cost=max(v.cost for v in vectors) * 1.1 + 1.0,
        coverage=-1,
    )


def refine_step(cost: float) -> float:
    """Gap below a found cost for the next epsilon cap."""
    return 1e-7 * max(1.0, abs(cost))


class _LevelScan:
    """All cells of one coverage floor."""

    def __init__(
        self,
        cell_solver: CellSolver,
        floor: int,
        grid: GridSpec,
        deadline: Optional[float],
        proven: bool,
    ):
        self.cell_solver = cell_solver
        self.floor = floor
        self.grid = grid
        self.deadline = deadline
        self.proven = proven
        self.points: List[FrontPoint] = []
        self.seen: Set[Tuple[float, float, int]] = set()
        self.complete = True

    def _expired(self) -> bool:
        return self.deadline is not None and time.perf_counter() > self.deadline

    def _solve(self, eps: EpsilonConstraint) -> Tuple[Optional[FrontPoint], bool]:
        """Solve one cell; the flag is False when the vector was already found."""
        if self._expired():
            self.complete = False
            return None, False
        solution, objective, complete = self.cell_solver(eps)
        if not complete:
            self.complete = False
        if solution is None:
            return None, False
        point = FrontPoint(solution, objective, complete and self.proven)
        is_new = objective.as_tuple() not in self.seen
        if is_new:
            self.seen.add(objective.as_tuple())
            self.points.append(point)
        return point, is_new

    def run(self) -> "_LevelScan":
        cheapest, _ = self._solve(EpsilonConstraint(primary="cost", coverage_floor=self.floor))
        if cheapest is None:
            return self
        fastest, _ = self._solve(EpsilonConstraint(primary="waiting_time", coverage_floor=self.floor))
        if fastest is None:
            return self
        lo, hi = cheapest.objective.cost, fastest.objective.cost

        seeds = [fastest]
        if hi > lo:
            levels = self.grid.cost_levels
            for t in range(levels):
                cap = lo + (hi - lo) * float(Fraction(t, levels))
                point, is_new = self._solve(EpsilonConstraint(cost_cap=cap, coverage_floor=self.floor))
                if is_new:
                    seeds.append(point)

        if self.grid.refine:
            steps = 0
            for seed in seeds:
                current = seed
                while current.objective.cost - refine_step(current.objective.cost) >= lo - cap_slack(lo):
                    if self.grid.refine_limit is not None and steps >= self.grid.refine_limit:
                        return self
                    steps += 1
                    cap = current.objective.cost - refine_step(current.objective.cost)
                    point, is_new = self._solve(EpsilonConstraint(cost_cap=cap, coverage_floor=self.floor))
                    if not is_new:
                        break
                    current = point
        return self


def epsilon_front(
    instance: Instance,
    cell_solver: CellSolver,
    grid: Optional[GridSpec] = None,
    workers: Optional[int] = None,
    time_limit: Optional[float] = None,
    proven: bool = True,
) -> ParetoFront:
    """Drive a cell solver through the epsilon grid and filter the results.

    Args:
        instance: Problem instance
        cell_solver: Solves one epsilon-constraint problem
        grid: Grid specification (default GridSpec())
        workers: Threads over coverage floors; output does not depend on it
        time_limit: Overall wall-clock budget in seconds; cells past it are
            skipped and the front is flagged approximate
        proven: Whether complete cells are optimal (False for heuristics)

    Returns:
        ParetoFront
    """
    grid = grid or GridSpec()
    workers = config.WORKERS if workers is None else workers
    floors = list(grid.coverage_levels) if grid.coverage_levels is not None else list(range(instance.n_orders + 1))
    deadline = None if time_limit is None else time.perf_counter() + time_limit

    scans = [_LevelScan(cell_solver, floor, grid, deadline, proven) for floor in floors]
    if workers > 1 and len(scans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            finished = list(pool.map(_LevelScan.run, scans))
    else:
        finished = [scan.run() for scan in scans]

    collected = [point for scan in finished for point in scan.points]
    approximate = not all(scan.complete for scan in finished)
    kept = nondominated_filter(collected)
    kept.sort(key=lambda p: p.objective.front_order())
    logger.info(
        "[FRONT] %d points collected, %d nondominated%s",
        len(collected),
        len(kept),
        " (approximate)" if approximate else "",
    )
    return ParetoFront(kept, approximate)


def front_exact(
    instance: Instance,
    grid: Optional[GridSpec] = None,
    paper_strict: bool = False,
    node_limit: Optional[int] = None,
    time_limit: Optional[float] = None,
    workers: Optional[int] = None,
) -> ParetoFront:
    """Pareto front with the exact solver in every cell.

    With refinement on (the default) this is the full nondominated set.
    A cell whose search budget runs out marks its point and the front
    approximate.
    """
    def cell(eps: EpsilonConstraint) -> CellResult:
        result = solve(instance, eps, paper_strict=paper_strict, node_limit=node_limit, time_limit=time_limit)
        return result.solution, result.objective, result.optimal

    return epsilon_front(instance, cell, grid, workers=workers)


class FrontRow(NamedTuple):
    solution_id: int
    objective: ObjectiveVector
    optimal: bool


def write_front_csv(front: ParetoFront) -> str:
    """Front table: one row per point, solution_id indexes the sidecar."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for n, point in enumerate(front.points):
        objective = point.objective
        writer.writerow(
            [
                objective.coverage,
                repr(objective.cost),
                repr(objective.waiting_time_hours),
                n,
                "optimal" if point.optimal else "approximate",
                repr(objective.mean_waiting_time),
            ]
        )
    return buffer.getvalue()


def read_front_csv(text: str) -> List[FrontRow]:
    """Parse a front table written by write_front_csv."""
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise SchemaError(missing[0], "column missing from front table")
    rows = []
    for line, record in enumerate(reader):
        try:
            objective = ObjectiveVector(
                waiting_time_hours=float(record["waiting_hours"]),
                cost=float(record["cost"]),
                coverage=int(record["v"]),
            )
            rows.append(FrontRow(int(record["solution_id"]), objective, record["optimality_flag"] == "optimal"))
        except ValueError as e:
            raise SchemaError(f"row {line + 1}", str(e))
    return rows


def write_front_solutions(front: ParetoFront) -> bytes:
    """Sidecar document holding the solution of every front row."""
    entries = []
    for n, point in enumerate(front.points):
        entry = solution_payload(point.solution, point.objective)
        entry["solution_id"] = n
        entry["optimal"] = point.optimal
        entries.append(entry)
    return canonical_json(
        {"schema_version": SCHEMA_VERSION, "approximate": front.approximate, "solutions": entries}
    )


def read_front_solutions(data: Union[bytes, str], instance: Optional[Instance] = None) -> List[Solution]:
    """Solutions of a sidecar document, in solution_id order."""
    try:
        document = json.loads(data)
        entries = sorted(document["solutions"], key=lambda e: e["solution_id"])
    except (ValueError, KeyError, TypeError) as e:
        raise SchemaError("solutions", f"not a front solutions document: {e}")
    solutions = []
    for entry in entries:
        entry = {k: v for k, v in entry.items() if k not in ("solution_id", "optimal")}
        solutions.append(read_solution(json.dumps(entry), instance))
    return solutions
