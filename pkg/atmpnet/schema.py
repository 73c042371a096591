"""File documents for instances and solutions.

Documents are JSON. The canonical form has sorted keys, no whitespace and
shortest round-trip number rendering, so equal instances serialize to equal
bytes.
"""

import json
import logging
from typing import Any, List, Literal, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, ValidationError

from .config import config
from .errors import InstanceValidationError, SchemaError
from .instance import (
    CandidateLocation,
    Instance,
    Mode,
    ObjectiveVector,
    Order,
    Solution,
    TravelMatrix,
    default_big_t,
    validate,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class _Document(BaseModel):
    model_config = ConfigDict(extra="forbid")


class OrderDocument(_Document):
    id: int
    shelf_life_hours: float


class LocationDocument(_Document):
    id: int
    setup_cost_manufacturing: float
    setup_cost_cryo: float


class ModeDocument(_Document):
    id: int
    p_fresh_hours: float
    p_frozen_hours: float


class InstanceDocument(_Document):
    """Instance file, schema version 1."""

    schema_version: Literal[1] = SCHEMA_VERSION
    orders: List[OrderDocument]
    locations: List[LocationDocument]
    modes: List[ModeDocument]
    travel: List[List[float]]
    op_cost_fresh: List[List[List[float]]]
    op_cost_frozen: List[List[List[float]]]
    failure_rate: List[List[float]]
    big_t_hours: Optional[float] = None
    cryo_leg_limit_hours: Optional[float] = None


class ObjectiveDocument(_Document):
    waiting_time_hours: float
    cost: float
    coverage: int
    mean_waiting_time_hours: Optional[float] = None


class SolutionDocument(_Document):
    """Solution file: the six decision arrays as 0/1 values."""

    schema_version: Literal[1] = SCHEMA_VERSION
    y_m: List[bool]
    y_c: List[bool]
    x_m: List[List[bool]]
    x_c: List[List[bool]]
    z: List[bool]
    m: List[List[bool]]
    objective: Optional[ObjectiveDocument] = None


def canonical_json(payload: Any) -> bytes:
    """Serialize to canonical JSON bytes."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _parse(data: Union[bytes, str]) -> Any:
    try:
        return json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise SchemaError("$", f"not a JSON document: {e}")


def _schema_error(error: ValidationError) -> SchemaError:
    first = error.errors()[0]
    path = ".".join(str(part) for part in first["loc"])
    return SchemaError(path, first["msg"])


def _check_rectangular(name: str, rows: Sequence, depth: int) -> None:
    """Reject ragged nested arrays, naming the first offending row."""
    level_nodes = [(name, rows)]
    for _ in range(depth - 1):
        expected = None
        next_nodes = []
        for path, node in level_nodes:
            for index, child in enumerate(node):
                child_path = f"{path}.{index}"
                if expected is None:
                    expected = len(child)
                elif len(child) != expected:
                    raise SchemaError(child_path, f"length {len(child)}, expected {expected}")
                next_nodes.append((child_path, child))
        level_nodes = next_nodes


def read_instance(data: Union[bytes, str], check: bool = True) -> Instance:
    """Parse an instance document.

    Args:
        data: Document bytes
        check: Run validate() and raise on violations

    Returns:
        Instance

    Raises:
        SchemaError: document does not match the schema (path names the field)
        InstanceValidationError: document parsed but breaks an instance invariant
    """
    try:
        document = InstanceDocument.model_validate(_parse(data))
    except ValidationError as e:
        raise _schema_error(e)

    _check_rectangular("travel", document.travel, 2)
    _check_rectangular("op_cost_fresh", document.op_cost_fresh, 3)
    _check_rectangular("op_cost_frozen", document.op_cost_frozen, 3)
    _check_rectangular("failure_rate", document.failure_rate, 2)

    travel = TravelMatrix(document.travel, len(document.orders))
    big_t = document.big_t_hours
    instance = Instance(
        orders=tuple(Order(o.id, o.shelf_life_hours) for o in document.orders),
        locations=tuple(
            CandidateLocation(loc.id, loc.setup_cost_manufacturing, loc.setup_cost_cryo)
            for loc in document.locations
        ),
        modes=tuple(Mode(m.id, m.p_fresh_hours, m.p_frozen_hours) for m in document.modes),
        travel=travel,
        op_cost_fresh=document.op_cost_fresh,
        op_cost_frozen=document.op_cost_frozen,
        failure_rate=document.failure_rate,
        big_t_hours=default_big_t(travel) if big_t is None else big_t,
        cryo_leg_limit_hours=(
            config.CRYO_LEG_LIMIT
            if document.cryo_leg_limit_hours is None
            else document.cryo_leg_limit_hours
        ),
    )

    if check:
        violations = validate(instance)
        if violations:
            raise InstanceValidationError(violations)
    logger.debug("Read instance with sizes %s", instance.sizes)
    return instance


def write_instance(instance: Instance) -> bytes:
    """Canonical document bytes for an instance."""
    payload = instance.to_dict()
    payload["schema_version"] = SCHEMA_VERSION
    return canonical_json(payload)


def solution_payload(
    solution: Solution, objective: Optional[ObjectiveVector] = None
) -> dict:
    """Solution document as a plain dictionary."""
    payload = solution.to_dict()
    payload["schema_version"] = SCHEMA_VERSION
    if objective is not None:
        payload["objective"] = objective.to_dict()
    return payload


def read_solution(data: Union[bytes, str], instance: Optional[Instance] = None) -> Solution:
    """Parse a solution document; shape-checked when an instance is given.

    Raises:
        SchemaError: document does not match the schema
        ShapeError: arrays are not shaped to the instance
    """
    try:
        document = SolutionDocument.model_validate(_parse(data))
    except ValidationError as e:
        raise _schema_error(e)
    for name in ("x_m", "x_c", "m"):
        _check_rectangular(name, getattr(document, name), 2)

    solution = Solution(
        y_m=document.y_m,
        y_c=document.y_c,
        x_m=document.x_m,
        x_c=document.x_c,
        z=document.z,
        m=document.m,
    )
    if instance is not None:
        solution.check_shape(instance)
    return solution


def write_solution(solution: Solution, objective: Optional[ObjectiveVector] = None) -> bytes:
    """Canonical document bytes for a solution (objective included when given)."""
    return canonical_json(solution_payload(solution, objective))
