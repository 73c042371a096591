"""Feasibility checks and the three objectives of a Solution.

W (total waiting time), C (total cost, failure-inflated) and V (coverage)
are computed on feasible solutions only. The failure factor is (1 + r),
applied once to collection plus production time in W and to the operation
cost in C.
"""

import logging
from typing import List, Optional

import numpy as np

from .config import config
from .errors import InfeasibleSolutionError
from .instance import Instance, ObjectiveVector, Solution, Violation

logger = logging.getLogger(__name__)

CONSTRAINT_TAGS = (
    "pm:fresh_to",
    "pm:fresh_from",
    "pm:frozen",
    "pm:one_manufacturing",
    "pm:one_cryo",
    "pm:m_assign_ifopen",
    "pm:c_assign_ifopen",
    "pm:one_type",
    "pm:mode_manufacturing",
)
CRYO_GAP_TAG = "pm:cryo_gap"


def _indices(mask: np.ndarray):
    return [tuple(int(i) for i in index) for index in zip(*np.nonzero(mask))]


def check_feasible(
    instance: Instance, solution: Solution, tol: Optional[float] = None
) -> List[Violation]:
    """Check every model constraint.

    Errors make the solution infeasible. A frozen, covered order with no cryo
    assignment is accepted by the model but reported as a warning tagged
    pm:cryo_gap.

    Args:
        instance: Problem instance
        solution: Solution to check
        tol: Absolute tolerance in hours for the travel-time constraints

    Returns:
        List of violations, errors first in constraint order

    Raises:
        ShapeError: solution arrays are not shaped to the instance
    """
    solution.check_shape(instance)
    tol = config.FEASIBILITY_TOL if tol is None else tol
    violations: List[Violation] = []

    x_m = solution.x_m.astype(float)
    x_c = solution.x_c.astype(float)
    z = solution.z.astype(float)
    gamma = instance.shelf_life
    travel = instance.travel

    relaxed_life = gamma + z * instance.big_t_hours
    leg_to = (x_m * travel.to_location).sum(axis=1)
    leg_from = (x_m * travel.to_order).sum(axis=1)
    for (i,) in _indices(leg_to > relaxed_life + tol):
        violations.append(
            Violation("pm:fresh_to", (i,), f"travel to manufacturing {leg_to[i]:g}h exceeds shelf-life {gamma[i]:g}h")
        )
    for (i,) in _indices(leg_from > relaxed_life + tol):
        violations.append(
            Violation("pm:fresh_from", (i,), f"travel back {leg_from[i]:g}h exceeds shelf-life {gamma[i]:g}h")
        )

    frozen_leg = (x_c * travel.to_location).sum(axis=1)
    for (i,) in _indices(frozen_leg > instance.cryo_leg_limit_hours + tol):
        violations.append(
            Violation(
                "pm:frozen",
                (i,),
                f"travel to cryopreservation {frozen_leg[i]:g}h exceeds {instance.cryo_leg_limit_hours:g}h",
            )
        )

    for (i,) in _indices(solution.x_m.sum(axis=1) > 1):
        violations.append(Violation("pm:one_manufacturing", (i,), "more than one manufacturing facility"))
    for (i,) in _indices(solution.x_c.sum(axis=1) > solution.z.astype(int)):
        violations.append(Violation("pm:one_cryo", (i,), "cryo assignments exceed z"))
    for i, j in _indices(solution.x_m & ~solution.y_m[None, :]):
        violations.append(Violation("pm:m_assign_ifopen", (i, j), "assigned to a closed manufacturing facility"))
    for i, j in _indices(solution.x_c & ~solution.y_c[None, :]):
        violations.append(Violation("pm:c_assign_ifopen", (i, j), "assigned to a closed cryopreservation facility"))
    for (j,) in _indices(solution.y_m & solution.y_c):
        violations.append(Violation("pm:one_type", (j,), "both facility types open"))
    for (j,) in _indices(solution.m.sum(axis=1) != solution.y_m.astype(int)):
        violations.append(
            Violation("pm:mode_manufacturing", (j,), "mode count differs from manufacturing flag")
        )

    covered = solution.x_m.any(axis=1)
    for (i,) in _indices(solution.z & covered & ~solution.x_c.any(axis=1)):
        violations.append(
            Violation(CRYO_GAP_TAG, (i,), "frozen order without cryopreservation facility", severity="warning")
        )
    return violations


def is_feasible(instance: Instance, solution: Solution, tol: Optional[float] = None) -> bool:
    """True iff check_feasible reports no errors."""
    return not any(v.severity == "error" for v in check_feasible(instance, solution, tol))


def _require_feasible(instance: Instance, solution: Solution) -> None:
    errors = [v for v in check_feasible(instance, solution) if v.severity == "error"]
    if errors:
        raise InfeasibleSolutionError(errors)


def _waiting_time(instance: Instance, solution: Solution) -> float:
    x_m = solution.x_m.astype(float)
    x_c = solution.x_c.astype(float)
    z = solution.z.astype(float)
    modes = solution.m.astype(float)
    travel = instance.travel

    # failure factor per (i, j): 1 + sum_k r_ik m_jk
    factor = 1.0 + instance.failure_rate @ modes.T
    # frozen collection time: sum_j' x_c[i,j'] (d[i,j'] + d[j',j])
    frozen_route = (x_c * travel.to_location).sum(axis=1)[:, None] + x_c @ travel.between_locations
    to_manufacture = (1.0 - z)[:, None] * travel.to_location + z[:, None] * frozen_route
    production = (1.0 - z)[:, None] * (modes @ instance.p_fresh)[None, :] + z[:, None] * (
        modes @ instance.p_frozen
    )[None, :]
    per_pair = factor * (to_manufacture + production) + travel.to_order
    return float(np.sum(x_m * per_pair))


def _total_cost(instance: Instance, solution: Solution) -> float:
    x_m = solution.x_m.astype(float)
    z = solution.z.astype(float)
    modes = solution.m.astype(float)

    setup = float(
        instance.setup_manufacturing @ solution.y_m.astype(float)
        + instance.setup_cryo @ solution.y_c.astype(float)
    )
    unit = (1.0 - z)[:, None, None] * instance.op_cost_fresh + z[:, None, None] * instance.op_cost_frozen
    inflated = (1.0 + instance.failure_rate)[:, None, :] * unit
    operation = float(np.einsum("ij,jk,ijk->", x_m, modes, inflated))
    return setup + operation


def waiting_time(instance: Instance, solution: Solution) -> float:
    """Total expected waiting time W in hours; uncovered orders add 0.

    Raises:
        ShapeError: solution arrays are not shaped to the instance
        InfeasibleSolutionError: solution breaks a constraint
    """
    _require_feasible(instance, solution)
    return _waiting_time(instance, solution)


def total_cost(instance: Instance, solution: Solution) -> float:
    """Setup costs plus failure-inflated operation costs.

    Raises:
        ShapeError: solution arrays are not shaped to the instance
        InfeasibleSolutionError: solution breaks a constraint
    """
    _require_feasible(instance, solution)
    return _total_cost(instance, solution)


def coverage(instance: Instance, solution: Solution) -> int:
    """Number of orders assigned to a manufacturing facility."""
    solution.check_shape(instance)
    return int(solution.x_m.sum())


def evaluate(instance: Instance, solution: Solution) -> ObjectiveVector:
    """All three objectives of a feasible solution.

    Raises:
        ShapeError: solution arrays are not shaped to the instance
        InfeasibleSolutionError: solution breaks a constraint
    """
    _require_feasible(instance, solution)
    return ObjectiveVector(
        waiting_time_hours=_waiting_time(instance, solution),
        cost=_total_cost(instance, solution),
        coverage=int(solution.x_m.sum()),
    )
