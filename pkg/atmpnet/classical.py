"""Classical covering and median location models on an instance's geometry.

Every model reads the order-to-location travel hours only; facility types,
modes, costs and shelf-lives play no part. Coverage means travel time within
the radius, as in the usual coverage matrix a_ij = [d_ij <= S]. All models
are solved exactly; among equally good location sets the first one found in
the search order is returned.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import config
from .errors import CoverageInfeasibleError
from .instance import Instance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoverSpec:
    """Radius, facility count and demand weights (unit weights when omitted)."""

    coverage_radius_hours: float = 0.0
    p: int = 1
    demand_weights: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if not (self.coverage_radius_hours >= 0 and math.isfinite(self.coverage_radius_hours)):
            raise ValueError("coverage_radius_hours must be finite and >= 0")
        if self.p < 1:
            raise ValueError("p must be at least 1")
        if self.demand_weights is not None:
            object.__setattr__(self, "demand_weights", tuple(float(w) for w in self.demand_weights))
            if any(not math.isfinite(w) or w < 0 for w in self.demand_weights):
                raise ValueError("demand weights must be finite and >= 0")

    def weights(self, instance: Instance) -> np.ndarray:
        if self.demand_weights is None:
            return np.ones(instance.n_orders)
        if len(self.demand_weights) != instance.n_orders:
            raise ValueError(
                f"expected {instance.n_orders} demand weights, got {len(self.demand_weights)}"
            )
        return np.array(self.demand_weights, dtype=float)

    def check_p(self, instance: Instance) -> None:
        if self.p > instance.n_locations:
            raise ValueError(f"p = {self.p} exceeds the {instance.n_locations} candidate locations")


@dataclass(frozen=True)
class BackupSpec:
    """Double coverage: one facility within the primary radius, two within the backup radius."""

    primary_radius_hours: float
    backup_radius_hours: float

    def __post_init__(self):
        radii = (self.primary_radius_hours, self.backup_radius_hours)
        if any(not (r >= 0 and math.isfinite(r)) for r in radii):
            raise ValueError("radii must be finite and >= 0")
        if self.primary_radius_hours > self.backup_radius_hours:
            raise ValueError("primary radius must not exceed the backup radius")


@dataclass(frozen=True)
class BaselineResult:
    """Open locations and the model's objective value.

    ``assignment`` maps each order to its nearest open location (-1 when
    nothing is open or, for covering models, nothing open covers it).
    """

    model: str
    open_locations: Tuple[int, ...]
    value: float
    assignment: Tuple[int, ...] = field(default=())

    @property
    def count(self) -> int:
        return len(self.open_locations)

    def to_dict(self) -> Dict:
        """Convert to dictionary."""
        return {
            "model": self.model,
            "open_locations": list(self.open_locations),
            "count": self.count,
            "value": self.value,
            "assignment": list(self.assignment),
        }


def coverage_matrix(instance: Instance, radius_hours: float, tol: Optional[float] = None) -> np.ndarray:
    """a[i, j] = True iff location j is within the radius of order i."""
    tol = config.FEASIBILITY_TOL if tol is None else tol
    return instance.travel.to_location <= radius_hours + tol


def _nearest(instance: Instance, open_locations: Sequence[int], allowed: Optional[np.ndarray] = None) -> Tuple[int, ...]:
    if not open_locations:
        return tuple([-1] * instance.n_orders)
    columns = np.array(sorted(open_locations))
    travel = instance.travel.to_location[:, columns]
    if allowed is not None:
        travel = np.where(allowed[:, columns], travel, np.inf)
    best = np.argmin(travel, axis=1)
    reachable = np.isfinite(travel[np.arange(instance.n_orders), best])
    return tuple(int(columns[b]) if ok else -1 for b, ok in zip(best, reachable))


class _CoverSearch:
    """Minimum-cardinality cover by branching on the first deficient order.

    Each order needs ``need[i]`` open locations among ``reach[i]``; an order
    with a deficit can only be fixed by one of its unopened reaching
    locations, so branching over those is complete.
    """

    def __init__(self, layers: Sequence[Tuple[np.ndarray, np.ndarray]]):
        # layers of (coverage matrix, per-order requirement)
        self.layers = layers
        self.n_locations = layers[0][0].shape[1]
        self.best: Optional[List[int]] = None
        self.nodes = 0

    def _deficit(self, chosen: np.ndarray) -> Optional[np.ndarray]:
        for reach, need in self.layers:
            have = (reach & chosen[None, :]).sum(axis=1)
            short = np.nonzero(have < need)[0]
            if short.size:
                return reach[short[0]] & ~chosen
        return None

    def _visit(self, chosen: np.ndarray, picked: List[int]) -> None:
        self.nodes += 1
        if self.best is not None and len(picked) >= len(self.best):
            return
        candidates = self._deficit(chosen)
        if candidates is None:
            self.best = list(picked)
            return
        if self.best is not None and len(picked) + 1 >= len(self.best):
            return
        for j in np.nonzero(candidates)[0]:
            chosen[j] = True
            picked.append(int(j))
            self._visit(chosen, picked)
            picked.pop()
            chosen[j] = False

    def run(self) -> List[int]:
        self._visit(np.zeros(self.n_locations, dtype=bool), [])
        return sorted(self.best or [])


def lscp(instance: Instance, spec: CoverSpec) -> BaselineResult:
    """Fewest locations covering every order within the radius.

    Raises:
        CoverageInfeasibleError: some orders have no location within the radius
    """
    reach = coverage_matrix(instance, spec.coverage_radius_hours)
    uncoverable = np.nonzero(~reach.any(axis=1))[0]
    if uncoverable.size:
        raise CoverageInfeasibleError(uncoverable.tolist(), "have no location within the radius")
    search = _CoverSearch([(reach, np.ones(instance.n_orders, dtype=int))])
    chosen = search.run()
    logger.info("[BASELINE] lscp: %d locations (%d nodes)", len(chosen), search.nodes)
    return BaselineResult("lscp", tuple(chosen), float(len(chosen)), _nearest(instance, chosen, reach))


def backup_lscp(instance: Instance, spec: BackupSpec) -> BaselineResult:
    """Fewest locations giving every order one facility within the primary
    radius and two within the backup radius.

    Raises:
        CoverageInfeasibleError: some orders cannot be covered that way
    """
    primary = coverage_matrix(instance, spec.primary_radius_hours)
    backup = coverage_matrix(instance, spec.backup_radius_hours)
    short = np.nonzero(~primary.any(axis=1) | (backup.sum(axis=1) < 2))[0]
    if short.size:
        raise CoverageInfeasibleError(short.tolist(), "cannot be covered twice")
    n_i = instance.n_orders
    search = _CoverSearch([(primary, np.ones(n_i, dtype=int)), (backup, np.full(n_i, 2))])
    chosen = search.run()
    logger.info("[BASELINE] backup lscp: %d locations (%d nodes)", len(chosen), search.nodes)
    return BaselineResult("backup", tuple(chosen), float(len(chosen)), _nearest(instance, chosen, primary))


def _best_subset(
    instance: Instance, p: int, score: Callable[[np.ndarray], float], maximize: bool = False
) -> Tuple[Tuple[int, ...], float]:
    """Best p-subset of locations in lexicographic enumeration order."""
    best: Optional[Tuple[int, ...]] = None
    best_value = 0.0
    for subset in itertools.combinations(range(instance.n_locations), p):
        value = score(np.array(subset))
        better = value > best_value if maximize else value < best_value
        if best is None or better:
            best, best_value = subset, value
    return best, float(best_value)


def mclp(instance: Instance, spec: CoverSpec) -> BaselineResult:
    """Most demand weight covered within the radius by p locations.

    Opening more locations never lowers coverage, so the best set of at most
    p locations is searched among sets of exactly p.
    """
    spec.check_p(instance)
    weights = spec.weights(instance)
    reach = coverage_matrix(instance, spec.coverage_radius_hours)

    def covered(subset: np.ndarray) -> float:
        return float(weights[reach[:, subset].any(axis=1)].sum())

    chosen, value = _best_subset(instance, spec.p, covered, maximize=True)
    logger.info("[BASELINE] mclp p=%d: covered weight %g", spec.p, value)
    return BaselineResult("mclp", chosen, value, _nearest(instance, chosen, reach))


def p_median(instance: Instance, spec: CoverSpec) -> BaselineResult:
    """p locations minimising total demand-weighted travel to the nearest one."""
    spec.check_p(instance)
    weights = spec.weights(instance)
    travel = instance.travel.to_location

    def total(subset: np.ndarray) -> float:
        return float(weights @ travel[:, subset].min(axis=1))

    chosen, value = _best_subset(instance, spec.p, total)
    logger.info("[BASELINE] p-median p=%d: %g", spec.p, value)
    return BaselineResult("pmedian", chosen, value, _nearest(instance, chosen))


def p_center(instance: Instance, spec: CoverSpec) -> BaselineResult:
    """p locations minimising the longest travel to the nearest one."""
    spec.check_p(instance)
    travel = instance.travel.to_location

    def worst(subset: np.ndarray) -> float:
        return float(travel[:, subset].min(axis=1).max(initial=0.0))

    chosen, value = _best_subset(instance, spec.p, worst)
    logger.info("[BASELINE] p-center p=%d: %g", spec.p, value)
    return BaselineResult("pcenter", chosen, value, _nearest(instance, chosen))


MODELS = ("lscp", "mclp", "pmedian", "pcenter", "backup")
