"""Exact solver: branch-and-bound over facility configurations.

Once facilities and modes are fixed, each order's assignment is independent
of the others, so the search only branches on the per-location state and
solves the assignment subproblem exactly at the leaves.
"""

import itertools
import logging
import math
import time
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .config import config
from .evaluator import evaluate
from .instance import Instance, ObjectiveVector, Solution
from .scalarization import EpsilonConstraint, Scalarization, WeightedSum, cap_slack

logger = logging.getLogger(__name__)

# Location states; modes are k >= 0, None means undecided.
CLOSED = -1
CRYO = -2

# Option kinds
UNCOVERED = 0
FRESH = 1
FROZEN = 2
FROZEN_NO_CRYO = 3

KIND_NAMES = {
    UNCOVERED: "uncovered",
    FRESH: "fresh",
    FROZEN: "frozen",
    FROZEN_NO_CRYO: "frozen-no-cryo",
}


@dataclass(frozen=True)
class Configuration:
    """Facility-side decisions: per location CLOSED, CRYO or a mode index."""

    states: Tuple[Optional[int], ...]

    @classmethod
    def empty(cls, instance: Instance) -> "Configuration":
        return cls(tuple([CLOSED] * instance.n_locations))

    @classmethod
    def undecided(cls, instance: Instance) -> "Configuration":
        return cls(tuple([None] * instance.n_locations))

    @classmethod
    def from_solution(cls, solution: Solution) -> "Configuration":
        """Read y_m, y_c and m back into location states."""
        states = []
        for j in range(solution.y_m.shape[0]):
            if solution.y_m[j]:
                states.append(int(np.argmax(solution.m[j])))
            elif solution.y_c[j]:
                states.append(CRYO)
            else:
                states.append(CLOSED)
        return cls(tuple(states))

    @property
    def is_complete(self) -> bool:
        return all(s is not None for s in self.states)

    def manufacturing(self) -> List[Tuple[int, int]]:
        """(location, mode) pairs of open manufacturing facilities."""
        return [(j, s) for j, s in enumerate(self.states) if s is not None and s >= 0]

    def cryo(self) -> List[int]:
        return [j for j, s in enumerate(self.states) if s == CRYO]

    def to_arrays(self, n_modes: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(y_m, y_c, m) arrays; undecided locations read as closed."""
        n_j = len(self.states)
        y_m = np.zeros(n_j, dtype=bool)
        y_c = np.zeros(n_j, dtype=bool)
        m = np.zeros((n_j, n_modes), dtype=bool)
        for j, k in self.manufacturing():
            y_m[j] = True
            m[j, k] = True
        for j in self.cryo():
            y_c[j] = True
        return y_m, y_c, m

    def setup_cost(self, instance: Instance) -> float:
        """Setup cost of the decided open facilities."""
        total = 0.0
        for j, _ in self.manufacturing():
            total += float(instance.setup_manufacturing[j])
        for j in self.cryo():
            total += float(instance.setup_cryo[j])
        return total

    def label(self) -> str:
        """Compact text form, e.g. "M0 C - ?"."""
        parts = []
        for s in self.states:
            if s is None:
                parts.append("?")
            elif s == CLOSED:
                parts.append("-")
            elif s == CRYO:
                parts.append("C")
            else:
                parts.append(f"M{s}")
        return " ".join(parts)


@dataclass(frozen=True)
class OrderChoice:
    """One assignment option of an order and its objective contribution."""

    kind: str
    location: Optional[int]
    cryo_location: Optional[int]
    mode: Optional[int]
    delta_w: float
    delta_c: float
    delta_v: int


class OptionSet:
    """Covered options of every order under a fixed set of open facilities.

    Columns are laid out in tie-break order: manufacturing location ascending,
    then mode ascending, then fresh, frozen by cryo location ascending, and
    frozen without cryo (only when paper_strict is set).
    """

    def __init__(
        self,
        table: "OptionTable",
        manufacturing: Sequence[Tuple[int, int]],
        cryo: Sequence[int],
    ):
        kinds: List[int] = []
        locations: List[int] = []
        cryo_locations: List[int] = []
        modes: List[int] = []
        for j, k in sorted(manufacturing):
            kinds.append(FRESH)
            locations.append(j)
            cryo_locations.append(-1)
            modes.append(k)
            for jp in sorted(cryo):
                if jp == j:
                    continue
                kinds.append(FROZEN)
                locations.append(j)
                cryo_locations.append(jp)
                modes.append(k)
            if table.paper_strict:
                kinds.append(FROZEN_NO_CRYO)
                locations.append(j)
                cryo_locations.append(-1)
                modes.append(k)

        self.kinds = np.array(kinds, dtype=int)
        self.locations = np.array(locations, dtype=int)
        self.cryo_locations = np.array(cryo_locations, dtype=int)
        self.modes = np.array(modes, dtype=int)

        instance = table.instance
        n_i = instance.n_orders
        if not kinds:
            self.waiting = np.zeros((n_i, 0))
            self.cost = np.zeros((n_i, 0))
            self.valid = np.zeros((n_i, 0), dtype=bool)
            return

        travel = instance.travel
        j_arr, k_arr = self.locations, self.modes
        jp_arr = np.where(self.cryo_locations < 0, 0, self.cryo_locations)
        factor = 1.0 + instance.failure_rate[:, k_arr]
        back = travel.to_order[:, j_arr]

        fresh_w = factor * (travel.to_location[:, j_arr] + instance.p_fresh[k_arr]) + back
        frozen_w = (
            factor
            * (travel.to_location[:, jp_arr] + travel.between_locations[jp_arr, j_arr] + instance.p_frozen[k_arr])
            + back
        )
        gap_w = factor * instance.p_frozen[k_arr] + back
        fresh_c = factor * instance.op_cost_fresh[:, j_arr, k_arr]
        frozen_c = factor * instance.op_cost_frozen[:, j_arr, k_arr]

        is_fresh = self.kinds == FRESH
        is_frozen = self.kinds == FROZEN
        self.waiting = np.where(is_fresh, fresh_w, np.where(is_frozen, frozen_w, gap_w))
        self.cost = np.where(is_fresh, fresh_c, frozen_c)
        self.valid = np.where(
            is_fresh,
            table.fresh_ok[:, j_arr],
            np.where(is_frozen, table.cryo_ok[:, jp_arr], True),
        )

    @property
    def size(self) -> int:
        return int(self.kinds.shape[0])

    def choice(self, i: int, column: int) -> OrderChoice:
        if column < 0:
            return OrderChoice("uncovered", None, None, None, 0.0, 0.0, 0)
        jp = int(self.cryo_locations[column])
        return OrderChoice(
            kind=KIND_NAMES[int(self.kinds[column])],
            location=int(self.locations[column]),
            cryo_location=jp if jp >= 0 else None,
            mode=int(self.modes[column]),
            delta_w=float(self.waiting[i, column]),
            delta_c=float(self.cost[i, column]),
            delta_v=1,
        )


class OptionTable:
    """Per-instance reachability shared by every configuration evaluation."""

    def __init__(self, instance: Instance, paper_strict: bool = False, tol: Optional[float] = None):
        self.instance = instance
        self.paper_strict = paper_strict
        tol = config.FEASIBILITY_TOL if tol is None else tol
        gamma = instance.shelf_life[:, None]
        travel = instance.travel
        self.fresh_ok = (travel.to_location <= gamma + tol) & (travel.to_order <= gamma + tol)
        self.cryo_ok = travel.to_location <= instance.cryo_leg_limit_hours + tol

    def options(self, configuration: Configuration) -> OptionSet:
        return OptionSet(self, configuration.manufacturing(), configuration.cryo())

    def relaxed_options(self, configuration: Configuration) -> OptionSet:
        """Undecided locations count as both cryo and manufacturing in every mode."""
        undecided = [j for j, s in enumerate(configuration.states) if s is None]
        manufacturing = configuration.manufacturing() + [
            (j, k) for j in undecided for k in range(self.instance.n_modes)
        ]
        return OptionSet(self, manufacturing, configuration.cryo() + undecided)


@dataclass
class Assignment:
    """Per-order option columns (-1 uncovered) and the resulting totals."""

    columns: np.ndarray
    waiting_time: float
    cost: float
    coverage: int


def _nondominated_mask(waiting: np.ndarray, cost: np.ndarray, coverage: np.ndarray) -> np.ndarray:
    """Keep labels no other label dominates; equal labels keep the first."""
    n = waiting.shape[0]
    weak = (
        (waiting[None, :] <= waiting[:, None])
        & (cost[None, :] <= cost[:, None])
        & (coverage[None, :] >= coverage[:, None])
    )
    strict = (
        (waiting[None, :] < waiting[:, None])
        | (cost[None, :] < cost[:, None])
        | (coverage[None, :] > coverage[:, None])
    )
    earlier = np.tri(n, k=-1, dtype=bool)
    return ~(weak & (strict | earlier)).any(axis=1)


def _weighted_assign(options: OptionSet, setup: float, weights: WeightedSum) -> Assignment:
    n_i = options.waiting.shape[0]
    score = weights.alpha * options.waiting + weights.beta * options.cost - weights.lam
    score = np.where(options.valid, score, np.inf)
    full = np.concatenate([np.zeros((n_i, 1)), score], axis=1)
    columns = np.argmin(full, axis=1) - 1
    covered = columns >= 0
    rows = np.nonzero(covered)[0]
    return Assignment(
        columns=columns,
        waiting_time=float(options.waiting[rows, columns[rows]].sum()),
        cost=setup + float(options.cost[rows, columns[rows]].sum()),
        coverage=int(covered.sum()),
    )


def _epsilon_assign(options: OptionSet, setup: float, eps: EpsilonConstraint) -> Optional[Assignment]:
    """Label-setting over orders: exact per-configuration optimum under bounds."""
    n_i = options.waiting.shape[0]
    per_order: List[np.ndarray] = []
    for i in range(n_i):
        cols = np.nonzero(options.valid[i])[0]
        if cols.size:
            w, c = options.waiting[i, cols], options.cost[i, cols]
            cols = cols[_nondominated_mask(w, c, np.zeros(cols.size))]
        per_order.append(cols)
    coverable = np.array([cols.size > 0 for cols in per_order], dtype=int)
    remaining_after = np.concatenate([np.cumsum(coverable[::-1])[::-1][1:], [0]]) if n_i else coverable

    if not eps.admits_values(0.0, setup, eps.coverage_floor):
        return None
    if int(coverable.sum()) < eps.coverage_floor:
        return None

    waiting = np.zeros(1)
    cost = np.full(1, setup)
    coverage = np.zeros(1, dtype=int)
    history: List[Tuple[np.ndarray, np.ndarray]] = []
    w_cap = math.inf if eps.waiting_cap is None else eps.waiting_cap + cap_slack(eps.waiting_cap)
    c_cap = math.inf if eps.cost_cap is None else eps.cost_cap + cap_slack(eps.cost_cap)

    for i in range(n_i):
        cols = per_order[i]
        width = cols.size + 1
        parent = np.repeat(np.arange(waiting.size), width)
        choice = np.tile(np.concatenate([[-1], cols]), waiting.size)
        add_w = np.tile(np.concatenate([[0.0], options.waiting[i, cols]]), waiting.size)
        add_c = np.tile(np.concatenate([[0.0], options.cost[i, cols]]), waiting.size)
        new_w = waiting[parent] + add_w
        new_c = cost[parent] + add_c
        new_v = coverage[parent] + (choice >= 0)
        keep = (new_w <= w_cap) & (new_c <= c_cap) & (new_v + remaining_after[i] >= eps.coverage_floor)
        parent, choice, new_w, new_c, new_v = (a[keep] for a in (parent, choice, new_w, new_c, new_v))
        if parent.size == 0:
            return None
        mask = _nondominated_mask(new_w, new_c, new_v)
        parent, choice = parent[mask], choice[mask]
        waiting, cost, coverage = new_w[mask], new_c[mask], new_v[mask]
        history.append((parent, choice))

    best = min(
        range(waiting.size),
        key=lambda l: (eps.order(float(waiting[l]), float(cost[l]), int(coverage[l])), l),
    )
    columns = np.full(n_i, -1, dtype=int)
    label = best
    for i in range(n_i - 1, -1, -1):
        parent, choice = history[i]
        columns[i] = choice[label]
        label = parent[label]
    return Assignment(columns, float(waiting[best]), float(cost[best]), int(coverage[best]))


def assign(
    options: OptionSet, setup: float, scalarization: Scalarization
) -> Optional[Assignment]:
    """Optimal per-order assignment for one configuration, or None if no
    assignment satisfies the epsilon bounds."""
    if isinstance(scalarization, WeightedSum):
        return _weighted_assign(options, setup, scalarization)
    return _epsilon_assign(options, setup, scalarization)


def assemble(instance: Instance, configuration: Configuration, options: OptionSet, columns: np.ndarray) -> Solution:
    """Build the full Solution from a configuration and per-order columns."""
    n_i, n_j, n_k = instance.sizes
    y_m, y_c, m = configuration.to_arrays(n_k)
    x_m = np.zeros((n_i, n_j), dtype=bool)
    x_c = np.zeros((n_i, n_j), dtype=bool)
    z = np.zeros(n_i, dtype=bool)
    for i, column in enumerate(columns):
        if column < 0:
            continue
        x_m[i, options.locations[column]] = True
        kind = options.kinds[column]
        if kind in (FROZEN, FROZEN_NO_CRYO):
            z[i] = True
        if kind == FROZEN:
            x_c[i, options.cryo_locations[column]] = True
    return Solution(y_m=y_m, y_c=y_c, x_m=x_m, x_c=x_c, z=z, m=m)


def _key(scalarization: Scalarization, assignment: Assignment) -> Tuple[float, ...]:
    if isinstance(scalarization, WeightedSum):
        return (scalarization.value(assignment.waiting_time, assignment.cost, assignment.coverage),)
    return scalarization.order(assignment.waiting_time, assignment.cost, assignment.coverage)


def order_choices(
    instance: Instance, configuration: Configuration, order: int, paper_strict: bool = False
) -> List[OrderChoice]:
    """Every feasible option of one order, in tie-break order."""
    options = OptionTable(instance, paper_strict).options(configuration)
    choices = [options.choice(order, -1)]
    for column in range(options.size):
        if options.valid[order, column]:
            choices.append(options.choice(order, column))
    return choices


def best_assignment(
    instance: Instance,
    configuration: Configuration,
    scalarization: Scalarization,
    paper_strict: bool = False,
    table: Optional[OptionTable] = None,
) -> Optional[Tuple[Solution, ObjectiveVector]]:
    """Optimal assignment of every order under a fixed configuration.

    Args:
        instance: Problem instance
        configuration: Complete configuration
        scalarization: Weighted sum or epsilon constraint
        paper_strict: Allow frozen orders without a cryo facility
        table: Precomputed OptionTable for the same instance and mode

    Returns:
        (Solution, ObjectiveVector), or None when the epsilon bounds cannot
        be met under this configuration
    """
    if not configuration.is_complete:
        raise ValueError("best_assignment needs a complete configuration")
    table = table or OptionTable(instance, paper_strict)
    options = table.options(configuration)
    result = assign(options, configuration.setup_cost(instance), scalarization)
    if result is None:
        return None
    solution = assemble(instance, configuration, options, result.columns)
    return solution, evaluate(instance, solution)


def _bound_key(
    table: OptionTable, configuration: Configuration, setup: float, scalarization: Scalarization
) -> Optional[Tuple[float, ...]]:
    """Lexicographic lower bound on every completion; None if none is admissible."""
    options = table.relaxed_options(configuration)
    if isinstance(scalarization, WeightedSum):
        score = (
            scalarization.alpha * options.waiting
            + scalarization.beta * options.cost
            - scalarization.lam
        )
        score = np.where(options.valid, score, np.inf)
        best = np.minimum(score.min(axis=1, initial=np.inf), 0.0)
        return (scalarization.beta * setup + float(best.sum()),)

    eps = scalarization
    min_w = np.where(options.valid, options.waiting, np.inf).min(axis=1, initial=np.inf)
    min_c = np.where(options.valid, options.cost, np.inf).min(axis=1, initial=np.inf)
    coverable = np.isfinite(min_w)
    v_ub = int(coverable.sum())
    floor = eps.coverage_floor
    if v_ub < floor:
        return None
    w_lb = float(np.sort(min_w[coverable])[:floor].sum())
    c_lb = setup + float(np.sort(min_c[coverable])[:floor].sum())
    if not eps.admits_values(w_lb, c_lb, v_ub):
        return None
    return eps.order(w_lb, c_lb, v_ub)


def lower_bound(
    instance: Instance,
    configuration: Configuration,
    scalarization: Scalarization,
    paper_strict: bool = False,
) -> float:
    """Admissible bound on the scalarized value of any completion.

    Undecided locations are relaxed to "open as anything, best mode, zero
    setup cost". For a complete configuration the bound is the exact value
    of best_assignment. Epsilon bounds are in the primary objective's
    minimisation sense; math.inf means no completion meets the bounds.
    """
    table = OptionTable(instance, paper_strict)
    setup = configuration.setup_cost(instance)
    if configuration.is_complete:
        result = assign(table.options(configuration), setup, scalarization)
        return math.inf if result is None else _key(scalarization, result)[0]
    key = _bound_key(table, configuration, setup, scalarization)
    return math.inf if key is None else key[0]


def enumerate_configurations(instance: Instance) -> Iterator[Configuration]:
    """All (|K|+2)^|J| configurations; location 0 varies slowest."""
    values = [CLOSED, CRYO] + list(range(instance.n_modes))
    for states in itertools.product(values, repeat=instance.n_locations):
        yield Configuration(tuple(states))


@dataclass
class SearchStats:
    """Structured search record."""

    nodes_explored: int = 0
    nodes_pruned: int = 0
    root_bound: float = -math.inf
    proved_optimal: bool = False
    budget_exhausted: bool = False
    elapsed_seconds: float = 0.0

    def to_dict(self, timings: bool = True) -> Dict:
        """Convert to dictionary."""
        record = {
            "nodes_explored": self.nodes_explored,
            "nodes_pruned": self.nodes_pruned,
            "root_bound": self.root_bound,
            "proved_optimal": self.proved_optimal,
            "budget_exhausted": self.budget_exhausted,
        }
        if timings:
            record["elapsed_seconds"] = self.elapsed_seconds
        return record


@dataclass
class SolveResult:
    """Best solution found; solution is None when nothing meets the bounds."""

    solution: Optional[Solution]
    objective: Optional[ObjectiveVector]
    configuration: Optional[Configuration]
    stats: SearchStats

    @property
    def optimal(self) -> bool:
        return self.stats.proved_optimal


class BranchAndBound:
    """Depth-first search over location states with admissible bounds."""

    def __init__(
        self,
        instance: Instance,
        scalarization: Scalarization,
        paper_strict: bool = False,
        node_limit: Optional[int] = None,
        time_limit: Optional[float] = None,
        prune: bool = True,
    ):
        self.instance = instance
        self.scalarization = scalarization
        self.table = OptionTable(instance, paper_strict)
        self.node_limit = config.NODE_LIMIT if node_limit is None else node_limit
        self.time_limit = config.TIME_LIMIT if time_limit is None else time_limit
        self.prune = prune
        # expensive locations first so that cheap configurations bound early
        setup = instance.setup_manufacturing + instance.setup_cryo
        self.order = sorted(range(instance.n_locations), key=lambda j: (-float(setup[j]), j))
        self.children = [CLOSED, CRYO] + list(range(instance.n_modes))

        self.stats = SearchStats()
        self.best_key: Optional[Tuple[float, ...]] = None
        self.best: Optional[Tuple[Configuration, Assignment]] = None
        self._started = 0.0
        self._stopped = False

    def _time_up(self) -> bool:
        return time.perf_counter() - self._started > self.time_limit

    def _out_of_budget(self) -> bool:
        if self.stats.nodes_explored >= self.node_limit:
            return True
        if self.stats.nodes_explored % 256 == 0:
            return self._time_up()
        return False

    def _visit(self, states: List[Optional[int]], depth: int, setup: float) -> None:
        if self._stopped:
            return
        if self._out_of_budget():
            self._stopped = True
            return
        self.stats.nodes_explored += 1
        configuration = Configuration(tuple(states))

        if depth == len(self.order):
            result = assign(self.table.options(configuration), setup, self.scalarization)
            if result is None:
                return
            key = _key(self.scalarization, result)
            if self.best_key is None or key < self.best_key:
                self.best_key = key
                self.best = (configuration, result)
                if self._time_up():
                    self._stopped = True
            return

        if self.prune or depth == 0:
            bound = _bound_key(self.table, configuration, setup, self.scalarization)
            if depth == 0:
                self.stats.root_bound = math.inf if bound is None else bound[0]
            if self.prune and (bound is None or (self.best_key is not None and bound >= self.best_key)):
                self.stats.nodes_pruned += 1
                return

        j = self.order[depth]
        for state in self.children:
            states[j] = state
            if state == CLOSED:
                extra = 0.0
            elif state == CRYO:
                extra = float(self.instance.setup_cryo[j])
            else:
                extra = float(self.instance.setup_manufacturing[j])
            self._visit(states, depth + 1, setup + extra)
            if self._stopped:
                break
        states[j] = None

    def run(self) -> SolveResult:
        self._started = time.perf_counter()
        self._visit([None] * self.instance.n_locations, 0, 0.0)
        self.stats.elapsed_seconds = time.perf_counter() - self._started
        self.stats.budget_exhausted = self._stopped
        self.stats.proved_optimal = not self._stopped

        if self.best is None:
            logger.info("[SOLVE] %s: no admissible solution", self.scalarization.describe())
            return SolveResult(None, None, None, self.stats)
        configuration, result = self.best
        solution = assemble(self.instance, configuration, self.table.options(configuration), result.columns)
        objective = evaluate(self.instance, solution)
        logger.info(
            "[SOLVE] %s: W=%.3f C=%.3f V=%d (%d nodes, %d pruned%s)",
            self.scalarization.describe(),
            objective.waiting_time_hours,
            objective.cost,
            objective.coverage,
            self.stats.nodes_explored,
            self.stats.nodes_pruned,
            ", budget exhausted" if self._stopped else "",
        )
        return SolveResult(solution, objective, configuration, self.stats)


def solve(
    instance: Instance,
    scalarization: Scalarization,
    paper_strict: bool = False,
    node_limit: Optional[int] = None,
    time_limit: Optional[float] = None,
    prune: bool = True,
) -> SolveResult:
    """Globally optimal solution of a scalarized problem.

    Args:
        instance: Validated instance
        scalarization: Weighted sum or epsilon constraint
        paper_strict: Solve the verbatim model (frozen orders may skip cryo)
        node_limit: Node budget (default from config)
        time_limit: Wall-clock budget in seconds (default from config)
        prune: Use bounds to cut subtrees; off only for verification

    Returns:
        SolveResult; stats.proved_optimal is False when a budget ran out
    """
    search = BranchAndBound(instance, scalarization, paper_strict, node_limit, time_limit, prune)
    return search.run()
