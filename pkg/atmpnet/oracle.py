"""Brute-force ground truth for tiny instances.

Objectives are recomputed here in plain Python, without the evaluator's
vectorized code, so that the two codings can be checked against each other.
Enumeration runs over configurations (location 0 varies slowest; closed,
cryo, then modes) and, inside each, over every order's options in a fixed
order: uncovered, then by manufacturing location, fresh before frozen.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .config import config
from .errors import EnumerationLimitError
from .instance import Instance, ObjectiveVector, Solution
from .pareto import FrontPoint, ParetoFront
from .scalarization import Scalarization, WeightedSum

logger = logging.getLogger(__name__)

_CLOSED = "closed"
_CRYO = "cryo"


@dataclass(frozen=True)
class _Option:
    """One order's decisions: manufacturing site, cryo site, frozen flag."""

    manufacturing: Optional[int]
    cryo: Optional[int]
    frozen: bool
    waiting: float
    cost: float

    @property
    def covered(self) -> int:
        return 0 if self.manufacturing is None else 1


class _Data:
    """Plain-Python copy of the instance."""

    def __init__(self, instance: Instance, tol: float):
        self.n_i, self.n_j, self.n_k = instance.sizes
        self.d = instance.travel.entries.tolist()
        self.gamma = instance.shelf_life.tolist()
        self.s_m = instance.setup_manufacturing.tolist()
        self.s_c = instance.setup_cryo.tolist()
        self.p_f = instance.p_fresh.tolist()
        self.p_z = instance.p_frozen.tolist()
        self.c_f = instance.op_cost_fresh.tolist()
        self.c_z = instance.op_cost_frozen.tolist()
        self.r = instance.failure_rate.tolist()
        self.big_t = instance.big_t_hours
        self.cryo_limit = instance.cryo_leg_limit_hours
        self.tol = tol

    def node(self, j: int) -> int:
        return self.n_i + j

    def legs_ok(self, i: int, j: int, frozen: bool) -> bool:
        life = self.gamma[i] + (self.big_t if frozen else 0.0) + self.tol
        return self.d[i][self.node(j)] <= life and self.d[self.node(j)][i] <= life

    def cryo_ok(self, i: int, jp: int) -> bool:
        return self.d[i][self.node(jp)] <= self.cryo_limit + self.tol

    def order_waiting(self, i: int, j: int, k: int, frozen: bool, jp: Optional[int]) -> float:
        if not frozen:
            collect = self.d[i][self.node(j)]
            produce = self.p_f[k]
        else:
            collect = 0.0 if jp is None else self.d[i][self.node(jp)] + self.d[self.node(jp)][self.node(j)]
            produce = self.p_z[k]
        return (1.0 + self.r[i][k]) * (collect + produce) + self.d[self.node(j)][i]

    def order_cost(self, i: int, j: int, k: int, frozen: bool) -> float:
        unit = self.c_z[i][j][k] if frozen else self.c_f[i][j][k]
        return (1.0 + self.r[i][k]) * unit


def _states(n_modes: int) -> List:
    return [_CLOSED, _CRYO] + list(range(n_modes))


def enumeration_bound(instance: Instance, paper_strict: bool = False) -> int:
    """Upper bound on the number of feasible solutions."""
    n_i, n_j, n_k = instance.sizes
    per_order = (2 + n_j) + n_j * (1 + n_j) + (n_j if paper_strict else 0)
    return (n_k + 2) ** n_j * per_order ** n_i


def _guard(instance: Instance, paper_strict: bool, limit: Optional[int]) -> None:
    limit = config.ORACLE_LIMIT if limit is None else limit
    bound = enumeration_bound(instance, paper_strict)
    if bound > limit:
        raise EnumerationLimitError(bound, limit)


def _order_options(data: _Data, states: Tuple, i: int, paper_strict: bool) -> List[_Option]:
    cryo_sites = [j for j, s in enumerate(states) if s == _CRYO]
    options = [_Option(None, None, False, 0.0, 0.0), _Option(None, None, True, 0.0, 0.0)]
    for jp in cryo_sites:
        if data.cryo_ok(i, jp):
            options.append(_Option(None, jp, True, 0.0, 0.0))

    for j, k in enumerate(states):
        if k in (_CLOSED, _CRYO):
            continue
        if data.legs_ok(i, j, frozen=False):
            options.append(
                _Option(j, None, False, data.order_waiting(i, j, k, False, None), data.order_cost(i, j, k, False))
            )
        if not data.legs_ok(i, j, frozen=True):
            continue
        for jp in cryo_sites:
            if data.cryo_ok(i, jp):
                options.append(
                    _Option(j, jp, True, data.order_waiting(i, j, k, True, jp), data.order_cost(i, j, k, True))
                )
        if paper_strict:
            options.append(
                _Option(j, None, True, data.order_waiting(i, j, k, True, None), data.order_cost(i, j, k, True))
            )
    return options


def _setup(data: _Data, states: Tuple) -> float:
    total = 0.0
    for j, s in enumerate(states):
        if s == _CRYO:
            total += data.s_c[j]
        elif s != _CLOSED:
            total += data.s_m[j]
    return total


def _vector(setup: float, choices: Sequence[_Option]) -> ObjectiveVector:
    waiting = 0.0
    cost = setup
    covered = 0
    for option in choices:
        waiting += option.waiting
        cost += option.cost
        covered += option.covered
    return ObjectiveVector(waiting, cost, covered)


def _solution(data: _Data, states: Tuple, choices: Sequence[_Option]) -> Solution:
    y_m = np.zeros(data.n_j, dtype=bool)
    y_c = np.zeros(data.n_j, dtype=bool)
    m = np.zeros((data.n_j, data.n_k), dtype=bool)
    for j, s in enumerate(states):
        if s == _CRYO:
            y_c[j] = True
        elif s != _CLOSED:
            y_m[j] = True
            m[j, s] = True
    x_m = np.zeros((data.n_i, data.n_j), dtype=bool)
    x_c = np.zeros((data.n_i, data.n_j), dtype=bool)
    z = np.zeros(data.n_i, dtype=bool)
    for i, option in enumerate(choices):
        if option.manufacturing is not None:
            x_m[i, option.manufacturing] = True
        if option.cryo is not None:
            x_c[i, option.cryo] = True
        z[i] = option.frozen
    return Solution(y_m=y_m, y_c=y_c, x_m=x_m, x_c=x_c, z=z, m=m)


def _weakly_dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    return a.waiting_time_hours <= b.waiting_time_hours and a.cost <= b.cost and a.coverage >= b.coverage


def _prune(options: List[_Option]) -> List[_Option]:
    """Drop options another option of the same order weakly dominates.

    Swapping a dominated option for its dominator never makes a solution
    worse in any objective, so fronts and optima survive the pruning.
    """
    kept: List[_Option] = []
    for n, option in enumerate(options):
        mine = ObjectiveVector(option.waiting, option.cost, option.covered)
        beaten = False
        for other_n, other in enumerate(options):
            if other_n == n:
                continue
            theirs = ObjectiveVector(other.waiting, other.cost, other.covered)
            if _weakly_dominates(theirs, mine) and (mine != theirs or other_n < n):
                beaten = True
                break
        if not beaten:
            kept.append(option)
    return kept


def _stream(
    instance: Instance, paper_strict: bool, prune: bool
) -> Iterator[Tuple[_Data, Tuple, Tuple[_Option, ...], ObjectiveVector]]:
    data = _Data(instance, config.FEASIBILITY_TOL)
    for states in itertools.product(_states(data.n_k), repeat=data.n_j):
        per_order = [_order_options(data, states, i, paper_strict) for i in range(data.n_i)]
        if prune:
            per_order = [_prune(options) for options in per_order]
        setup = _setup(data, states)
        for choices in itertools.product(*per_order):
            yield data, states, choices, _vector(setup, choices)


def enumerate_all(
    instance: Instance, paper_strict: bool = False, limit: Optional[int] = None
) -> Iterator[Tuple[Solution, ObjectiveVector]]:
    """Every feasible solution exactly once, with independently computed objectives.

    With paper_strict the stream is the full feasible set of the model; by
    default, covered frozen orders must have a cryopreservation facility.
    Uncovered orders may carry z = 1 and a cryo assignment in both modes.

    Raises:
        EnumerationLimitError: the size bound exceeds the limit
    """
    _guard(instance, paper_strict, limit)
    for data, states, choices, vector in _stream(instance, paper_strict, prune=False):
        yield _solution(data, states, choices), vector


def count_feasible(instance: Instance, paper_strict: bool = False, limit: Optional[int] = None) -> int:
    """Number of solutions enumerate_all yields, without building them."""
    _guard(instance, paper_strict, limit)
    data = _Data(instance, config.FEASIBILITY_TOL)
    total = 0
    for states in itertools.product(_states(data.n_k), repeat=data.n_j):
        count = 1
        for i in range(data.n_i):
            count *= len(_order_options(data, states, i, paper_strict))
        total += count
    return total


def oracle_front(instance: Instance, paper_strict: bool = False, limit: Optional[int] = None) -> ParetoFront:
    """Nondominated objective vectors over the whole feasible set.

    Raises:
        EnumerationLimitError: the size bound exceeds the limit
    """
    _guard(instance, paper_strict, limit)
    candidates = list(_stream(instance, paper_strict, prune=True))
    # a dominator sorts no later than what it dominates; equal vectors keep the first
    ordered = sorted(range(len(candidates)), key=lambda n: (candidates[n][3].minimization_tuple(), n))
    kept: List[int] = []
    for n in ordered:
        vector = candidates[n][3]
        if not any(_weakly_dominates(candidates[m][3], vector) for m in kept):
            kept.append(n)

    points = []
    for n in kept:
        data, states, choices, vector = candidates[n]
        points.append(FrontPoint(_solution(data, states, choices), vector, optimal=True))
    points.sort(key=lambda p: p.objective.front_order())
    logger.info("[ORACLE] %d candidates, %d nondominated", len(candidates), len(points))
    return ParetoFront(points)


def oracle_optimum(
    instance: Instance,
    scalarization: Scalarization,
    paper_strict: bool = False,
    limit: Optional[int] = None,
) -> Optional[Tuple[Solution, ObjectiveVector]]:
    """Best solution of a scalarized problem by enumeration.

    Returns None when no solution satisfies the epsilon bounds.

    Raises:
        EnumerationLimitError: the size bound exceeds the limit
    """
    _guard(instance, paper_strict, limit)
    best = None
    best_key = None
    for data, states, choices, vector in _stream(instance, paper_strict, prune=True):
        if isinstance(scalarization, WeightedSum):
            key = (scalarization.score(vector),)
        else:
            if not scalarization.admits(vector):
                continue
            key = scalarization.key(vector)
        if best_key is None or key < best_key:
            best_key = key
            best = (data, states, choices, vector)
    if best is None:
        return None
    data, states, choices, vector = best
    return _solution(data, states, choices), vector
