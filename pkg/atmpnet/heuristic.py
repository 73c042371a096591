"""Multi-start local search over facility configurations.

Moves only change the configuration; the order assignment is recomputed for
every candidate, so every configuration visited yields a feasible solution.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import config
from .evaluator import evaluate
from .exact import (
    CLOSED,
    CRYO,
    Assignment,
    Configuration,
    OptionSet,
    OptionTable,
    assemble,
    assign,
)
from .instance import Instance, ObjectiveVector, Solution
from .pareto import CellResult, GridSpec, ParetoFront, epsilon_front
from .scalarization import EpsilonConstraint, Scalarization, WeightedSum

logger = logging.getLogger(__name__)

NEIGHBORHOODS = ("toggle-facility", "retype-facility", "change-mode", "swap-pair")

# Probability that a location opened by a random start is manufacturing.
MANUFACTURING_SHARE = 0.7

Key = Tuple[float, ...]


@dataclass(frozen=True)
class SearchParams:
    starts: int = config.HEURISTIC_STARTS
    max_no_improve: int = config.MAX_NO_IMPROVE
    seed: int = 0
    neighborhood: Tuple[str, ...] = NEIGHBORHOODS
    max_evaluations: Optional[int] = None

    def __post_init__(self):
        if self.starts < 1 or self.max_no_improve < 1:
            raise ValueError("starts and max_no_improve must be at least 1")
        unknown = [n for n in self.neighborhood if n not in NEIGHBORHOODS]
        if unknown or not self.neighborhood:
            raise ValueError(f"neighborhood must be a nonempty subset of {', '.join(NEIGHBORHOODS)}")
        if self.max_evaluations is not None and self.max_evaluations < 1:
            raise ValueError("max_evaluations must be at least 1")


# Per-cell search effort of front_heuristic.
FRONT_SEARCH = SearchParams(starts=2, max_no_improve=3, max_evaluations=1500)


@dataclass
class HeuristicResult:
    """Best configuration over all starts; solution is None if no visited
    configuration met the epsilon bounds."""

    solution: Optional[Solution]
    objective: Optional[ObjectiveVector]
    configuration: Configuration
    key: Key
    best_start: int
    evaluations: int
    histories: List[List[Key]] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return self.solution is not None


def _lagrangian_assign(options: OptionSet, setup: float, eps: EpsilonConstraint) -> Optional[Assignment]:
    """Fast assignment under epsilon bounds.

    Each order takes its best option under a weighted score; the capped
    objective's weight is found by bisection. Waiting time and cost primaries
    cover exactly the floor's cheapest orders; coverage primary adds orders
    greedily while the caps hold.
    """
    n_i = options.waiting.shape[0]
    rows = np.arange(n_i)
    floor = eps.coverage_floor

    def build(columns: np.ndarray, covered: np.ndarray) -> Assignment:
        columns = np.where(covered, columns, -1)
        picked = np.nonzero(covered)[0]
        return Assignment(
            columns=columns,
            waiting_time=float(options.waiting[picked, columns[picked]].sum()),
            cost=setup + float(options.cost[picked, columns[picked]].sum()),
            coverage=int(covered.sum()),
        )

    def best_options(weight_w: float, weight_c: float) -> Tuple[np.ndarray, np.ndarray]:
        score = np.where(options.valid, weight_w * options.waiting + weight_c * options.cost, np.inf)
        if score.shape[1] == 0:
            return np.full(n_i, -1), np.full(n_i, np.inf)
        columns = np.argmin(score, axis=1)
        return columns, score[rows, columns]

    def cheapest_floor(weight_w: float, weight_c: float) -> Optional[Assignment]:
        columns, score = best_options(weight_w, weight_c)
        if int(np.isfinite(score).sum()) < floor:
            return None
        covered = np.zeros(n_i, dtype=bool)
        covered[np.argsort(score, kind="stable")[:floor]] = True
        return build(columns, covered)

    def greedy_cover(weight_w: float, weight_c: float) -> Optional[Assignment]:
        columns, score = best_options(weight_w, weight_c)
        covered = np.zeros(n_i, dtype=bool)
        waiting, cost = 0.0, setup
        for i in np.argsort(score, kind="stable"):
            if not np.isfinite(score[i]):
                break
            w, c = options.waiting[i, columns[i]], options.cost[i, columns[i]]
            if eps.admits_values(waiting + w, cost + c, 0):
                covered[i] = True
                waiting, cost = waiting + w, cost + c
        result = build(columns, covered)
        return result if eps.admits_values(result.waiting_time, result.cost, result.coverage) else None

    if eps.primary == "coverage":
        candidates = [greedy_cover(1.0, 0.0), greedy_cover(0.0, 1.0), greedy_cover(1.0, 1.0)]
    else:
        primary_is_w = eps.primary == "waiting_time"

        def solve_at(mu: float) -> Optional[Assignment]:
            return cheapest_floor(1.0, mu) if primary_is_w else cheapest_floor(mu, 1.0)

        candidates = [solve_at(0.0)]
        if candidates[0] is not None and not eps.admits_values(
            candidates[0].waiting_time, candidates[0].cost, candidates[0].coverage
        ):
            lo, hi = 0.0, 1.0
            while hi < 1e9:
                trial = solve_at(hi)
                candidates.append(trial)
                if trial is not None and eps.admits_values(trial.waiting_time, trial.cost, trial.coverage):
                    break
                lo, hi = hi, hi * 4.0
            for _ in range(20):
                mid = 0.5 * (lo + hi)
                trial = solve_at(mid)
                candidates.append(trial)
                if trial is not None and eps.admits_values(trial.waiting_time, trial.cost, trial.coverage):
                    hi = mid
                else:
                    lo = mid

    feasible = [
        c for c in candidates if c is not None and eps.admits_values(c.waiting_time, c.cost, c.coverage)
    ]
    if not feasible:
        return None
    return min(feasible, key=lambda c: eps.order(c.waiting_time, c.cost, c.coverage))


class ConfigurationEvaluator:
    """Scores configurations; admissible ones sort before inadmissible ones."""

    def __init__(self, instance: Instance, scalarization: Scalarization, paper_strict: bool = False):
        self.instance = instance
        self.scalarization = scalarization
        self.table = OptionTable(instance, paper_strict)
        self.cache: Dict[Tuple[int, ...], Tuple[Key, Optional[Assignment]]] = {}
        self.evaluations = 0

    def __call__(self, states: Tuple[int, ...]) -> Key:
        return self.score(states)[0]

    def score(self, states: Tuple[int, ...]) -> Tuple[Key, Optional[Assignment]]:
        if states in self.cache:
            return self.cache[states]
        self.evaluations += 1
        configuration = Configuration(states)
        options = self.table.options(configuration)
        setup = configuration.setup_cost(self.instance)
        if isinstance(self.scalarization, WeightedSum):
            result = assign(options, setup, self.scalarization)
            key = (0.0, self.scalarization.value(result.waiting_time, result.cost, result.coverage))
        else:
            eps = self.scalarization
            result = _lagrangian_assign(options, setup, eps)
            if result is not None:
                key = (0.0,) + eps.order(result.waiting_time, result.cost, result.coverage)
            else:
                coverable = int(options.valid.any(axis=1).sum())
                shortfall = max(0, eps.coverage_floor - coverable)
                excess = 0.0
                if eps.cost_cap is not None:
                    excess = max(0.0, setup - eps.cost_cap) / max(1.0, abs(eps.cost_cap))
                key = (1.0 + shortfall + excess, setup)
        self.cache[states] = (key, result)
        return key, result

    def solution(self, states: Tuple[int, ...]) -> Tuple[Optional[Solution], Optional[ObjectiveVector]]:
        _, result = self.score(states)
        if result is None:
            return None, None
        configuration = Configuration(states)
        solution = assemble(self.instance, configuration, self.table.options(configuration), result.columns)
        return solution, evaluate(self.instance, solution)


def neighbors(states: Tuple[int, ...], n_modes: int, neighborhood: Sequence[str]) -> List[Tuple[int, ...]]:
    """Every configuration one move away, in a fixed order."""
    moves: List[Tuple[int, ...]] = []

    def with_state(j: int, state: int) -> Tuple[int, ...]:
        changed = list(states)
        changed[j] = state
        return tuple(changed)

    n_j = len(states)
    if "toggle-facility" in neighborhood:
        for j in range(n_j):
            moves.append(with_state(j, 0 if states[j] == CLOSED else CLOSED))
    if "retype-facility" in neighborhood:
        for j in range(n_j):
            if states[j] == CRYO:
                moves.append(with_state(j, 0))
            elif states[j] >= 0:
                moves.append(with_state(j, CRYO))
    if "change-mode" in neighborhood:
        for j in range(n_j):
            if states[j] >= 0:
                moves.extend(with_state(j, k) for k in range(n_modes) if k != states[j])
    if "swap-pair" in neighborhood:
        for j in range(n_j):
            if states[j] == CLOSED:
                continue
            for target in range(n_j):
                if states[target] == CLOSED:
                    changed = list(states)
                    changed[target], changed[j] = states[j], CLOSED
                    moves.append(tuple(changed))
    return moves


def attractiveness(instance: Instance) -> np.ndarray:
    """Number of orders each location can serve fresh."""
    return OptionTable(instance).fresh_ok.sum(axis=0)


def random_start(instance: Instance, rng: np.random.Generator) -> Tuple[int, ...]:
    """Open each location with probability proportional to its attractiveness."""
    reach = attractiveness(instance).astype(float)
    share = (reach + 1.0) / (reach.max() + 1.0)
    states = []
    for j in range(instance.n_locations):
        if rng.random() < 0.5 * share[j]:
            if rng.random() < MANUFACTURING_SHARE:
                states.append(int(rng.integers(instance.n_modes)))
            else:
                states.append(CRYO)
        else:
            states.append(CLOSED)
    return tuple(states)


def _perturb(states: Tuple[int, ...], n_modes: int, rng: np.random.Generator) -> Tuple[int, ...]:
    changed = list(states)
    values = [CLOSED, CRYO] + list(range(n_modes))
    for j in rng.choice(len(states), size=min(2, len(states)), replace=False):
        changed[j] = values[int(rng.integers(len(values)))]
    return tuple(changed)


class _Start:
    """One start: first-improvement descent with perturbation kicks."""

    def __init__(self, evaluator: ConfigurationEvaluator, params: SearchParams, index: int):
        self.evaluator = evaluator
        self.params = params
        self.index = index
        self.rng = np.random.default_rng([params.seed, index])
        self.history: List[Key] = []

    def _budget_left(self) -> bool:
        limit = self.params.max_evaluations
        return limit is None or self.evaluator.evaluations < limit

    def _descend(self, states: Tuple[int, ...]) -> Tuple[Tuple[int, ...], Key]:
        current = self.evaluator(states)
        n_modes = self.evaluator.instance.n_modes
        improved = True
        while improved and self._budget_left():
            improved = False
            moves = neighbors(states, n_modes, self.params.neighborhood)
            for position in self.rng.permutation(len(moves)):
                if not self._budget_left():
                    break
                key = self.evaluator(moves[position])
                if key < current:
                    states, current = moves[position], key
                    improved = True
                    break
        return states, current

    def run(self) -> Tuple[Tuple[int, ...], Key]:
        instance = self.evaluator.instance
        if self.index == 0:
            start = tuple([CLOSED] * instance.n_locations)
        else:
            start = random_start(instance, self.rng)
        best, best_key = self._descend(start)
        self.history.append(best_key)

        no_improve = 0
        while no_improve < self.params.max_no_improve and self._budget_left():
            candidate, key = self._descend(_perturb(best, instance.n_modes, self.rng))
            if key < best_key:
                best, best_key = candidate, key
                self.history.append(best_key)
                no_improve = 0
            else:
                no_improve += 1
        return best, best_key


def local_search(
    instance: Instance,
    scalarization: Scalarization,
    params: Optional[SearchParams] = None,
    paper_strict: bool = False,
    workers: Optional[int] = None,
) -> HeuristicResult:
    """Iterated local search from several starts.

    Start 0 begins from the all-closed configuration; the others begin from
    biased random configurations. Each start descends by first improvement
    in a seeded random neighbor order, then perturbs its best configuration
    until max_no_improve kicks in a row fail to improve it. The returned
    configuration is a local optimum of the declared neighborhood.

    Args:
        instance: Validated instance
        scalarization: Weighted sum or epsilon constraint
        params: Search parameters (default SearchParams())
        paper_strict: Allow frozen orders without a cryo facility
        workers: Threads over starts; output does not depend on it

    Returns:
        HeuristicResult
    """
    params = params or SearchParams()
    workers = config.WORKERS if workers is None else workers

    def run_start(index: int) -> Tuple[Tuple[Tuple[int, ...], Key], _Start, int]:
        # evaluators carry a cache and a budget counter, one per start
        evaluator = ConfigurationEvaluator(instance, scalarization, paper_strict)
        start = _Start(evaluator, params, index)
        return start.run(), start, evaluator.evaluations

    if workers > 1 and params.starts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_start, range(params.starts)))
    else:
        outcomes = [run_start(index) for index in range(params.starts)]

    best_index = min(range(len(outcomes)), key=lambda n: (outcomes[n][0][1], n))
    (states, key), start, _ = outcomes[best_index]
    solution, objective = start.evaluator.solution(states)
    evaluations = sum(outcome[2] for outcome in outcomes)
    logger.info(
        "[SEARCH] %s: best from start %d of %d after %d evaluations%s",
        scalarization.describe(),
        best_index,
        params.starts,
        evaluations,
        "" if solution is not None else ", no admissible configuration",
    )
    return HeuristicResult(
        solution=solution,
        objective=objective,
        configuration=Configuration(states),
        key=key,
        best_start=best_index,
        evaluations=evaluations,
        histories=[outcome[1].history for outcome in outcomes],
    )


def spread_levels(n_orders: int, max_levels: int) -> Tuple[int, ...]:
    """Coverage floors 0..n_orders, thinned evenly to at most max_levels."""
    if n_orders + 1 <= max_levels:
        return tuple(range(n_orders + 1))
    picked = np.unique(np.round(np.linspace(0, n_orders, max_levels)).astype(int))
    return tuple(int(v) for v in picked)


def front_heuristic(
    instance: Instance,
    grid: Optional[GridSpec] = None,
    params: Optional[SearchParams] = None,
    paper_strict: bool = False,
    max_levels: int = 11,
    workers: Optional[int] = None,
    time_limit: Optional[float] = None,
) -> ParetoFront:
    """Pareto front with local search in every epsilon cell.

    Defaults are sized for large instances: a coarse cost grid, a capped
    refinement, a few starts with an evaluation budget per cell, and at most
    max_levels coverage floors.
    """
    params = params or FRONT_SEARCH
    if grid is None:
        grid = GridSpec(
            cost_levels=4,
            refine=True,
            coverage_levels=spread_levels(instance.n_orders, max_levels),
            refine_limit=8,
        )

    def cell(eps: EpsilonConstraint) -> CellResult:
        result = local_search(instance, eps, params, paper_strict=paper_strict, workers=1)
        return result.solution, result.objective, True

    return epsilon_front(instance, cell, grid, workers=workers, time_limit=time_limit, proven=False)
