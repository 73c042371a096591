"""Problem instances, solutions and objective vectors.

Node indexing for travel times follows the instance file: all orders first
(node ``i``), then all candidate locations (node ``|I| + j``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .config import config
from .errors import ShapeError

GEOMETRIES = ("unit-square", "matrix-supplied")

# Hours of travel per unit of distance in the unit-square generator.
SPEED_HOURS_PER_UNIT = 30.0

MODE_NAMES = ("manual", "semi-automated", "automated")


def _frozen_array(values: Any, dtype: Any = float) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Order:
    """A patient order (demand node)."""

    id: int
    shelf_life_hours: float

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {"id": self.id, "shelf_life_hours": self.shelf_life_hours}


@dataclass(frozen=True)
class CandidateLocation:
    """A location where a manufacturing or cryopreservation facility may open."""

    id: int
    setup_cost_manufacturing: float
    setup_cost_cryo: float

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "id": self.id,
            "setup_cost_manufacturing": self.setup_cost_manufacturing,
            "setup_cost_cryo": self.setup_cost_cryo,
        }


@dataclass(frozen=True)
class Mode:
    """A manufacturing mode (manual, semi-automated, automated, ...)."""

    id: int
    production_time_fresh_hours: float
    production_time_frozen_hours: float

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "id": self.id,
            "p_fresh_hours": self.production_time_fresh_hours,
            "p_frozen_hours": self.production_time_frozen_hours,
        }


def describe_mode(k: int, n_modes: int) -> str:
    """Human-readable name of mode ``k``."""
    if n_modes == len(MODE_NAMES):
        return MODE_NAMES[k]
    return f"mode {k}"


class TravelMatrix:
    """Travel hours between any two nodes of I ∪ J (asymmetric allowed)."""

    def __init__(self, entries: Any, n_orders: int):
        self.entries = _frozen_array(entries)
        self.n_orders = n_orders
        if self.entries.ndim != 2:
            self.entries = _frozen_array(np.zeros((0, 0)))
        # d[i, j] order -> location, d[j, i] location -> order (indexed [i, j])
        self.to_location = self.entries[:n_orders, n_orders:]
        self.to_order = self.entries[n_orders:, :n_orders].T
        self.between_locations = self.entries[n_orders:, n_orders:]

    @property
    def node_count(self) -> int:
        return int(self.entries.shape[0])

    def hours(self, a: int, b: int) -> float:
        """Travel time from node ``a`` to node ``b``."""
        return float(self.entries[a, b])

    def max_hours(self) -> float:
        if self.entries.size == 0:
            return 0.0
        return float(np.max(self.entries))

    def to_list(self) -> List[List[float]]:
        return self.entries.tolist()


@dataclass(frozen=True, eq=False)
class Instance:
    """Immutable problem data shared read-only by every solver."""

    orders: Tuple[Order, ...]
    locations: Tuple[CandidateLocation, ...]
    modes: Tuple[Mode, ...]
    travel: TravelMatrix
    op_cost_fresh: np.ndarray
    op_cost_frozen: np.ndarray
    failure_rate: np.ndarray
    big_t_hours: float
    cryo_leg_limit_hours: float = config.CRYO_LEG_LIMIT

    shelf_life: np.ndarray = field(init=False, repr=False)
    setup_manufacturing: np.ndarray = field(init=False, repr=False)
    setup_cryo: np.ndarray = field(init=False, repr=False)
    p_fresh: np.ndarray = field(init=False, repr=False)
    p_frozen: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(self.orders))
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "op_cost_fresh", _frozen_array(self.op_cost_fresh))
        object.__setattr__(self, "op_cost_frozen", _frozen_array(self.op_cost_frozen))
        object.__setattr__(self, "failure_rate", _frozen_array(self.failure_rate))
        object.__setattr__(self, "big_t_hours", float(self.big_t_hours))
        object.__setattr__(self, "cryo_leg_limit_hours", float(self.cryo_leg_limit_hours))
        object.__setattr__(
            self, "shelf_life", _frozen_array([o.shelf_life_hours for o in self.orders])
        )
        object.__setattr__(
            self,
            "setup_manufacturing",
            _frozen_array([loc.setup_cost_manufacturing for loc in self.locations]),
        )
        object.__setattr__(
            self, "setup_cryo", _frozen_array([loc.setup_cost_cryo for loc in self.locations])
        )
        object.__setattr__(
            self, "p_fresh", _frozen_array([m.production_time_fresh_hours for m in self.modes])
        )
        object.__setattr__(
            self, "p_frozen", _frozen_array([m.production_time_frozen_hours for m in self.modes])
        )

    @classmethod
    def build(
        cls,
        shelf_life_hours: Sequence[float],
        setup_cost_manufacturing: Sequence[float],
        setup_cost_cryo: Sequence[float],
        p_fresh_hours: Sequence[float],
        p_frozen_hours: Sequence[float],
        travel: Any,
        op_cost_fresh: Any,
        op_cost_frozen: Any,
        failure_rate: Any,
        big_t_hours: Optional[float] = None,
        cryo_leg_limit_hours: Optional[float] = None,
    ) -> "Instance":
        """Build an instance from plain arrays.

        Args:
            shelf_life_hours: gamma_i per order
            setup_cost_manufacturing: s^M_j per location
            setup_cost_cryo: s^C_j per location
            p_fresh_hours: fresh production time per mode
            p_frozen_hours: frozen production time per mode
            travel: (|I|+|J|) square matrix, orders first
            op_cost_fresh: [i][j][k] operation cost of a fresh order
            op_cost_frozen: [i][j][k] operation cost of a frozen order
            failure_rate: [i][k] failure rate
            big_t_hours: T; max travel + 1 when omitted
            cryo_leg_limit_hours: frozen-leg bound; configured default when omitted

        Returns:
            Instance (not validated; call validate())
        """
        orders = [Order(i, float(g)) for i, g in enumerate(shelf_life_hours)]
        locations = [
            CandidateLocation(j, float(sm), float(sc))
            for j, (sm, sc) in enumerate(zip(setup_cost_manufacturing, setup_cost_cryo))
        ]
        modes = [Mode(k, float(pf), float(pz)) for k, (pf, pz) in enumerate(zip(p_fresh_hours, p_frozen_hours))]
        matrix = TravelMatrix(travel, len(orders))
        if big_t_hours is None:
            big_t_hours = default_big_t(matrix)
        if cryo_leg_limit_hours is None:
            cryo_leg_limit_hours = config.CRYO_LEG_LIMIT
        return cls(
            orders=tuple(orders),
            locations=tuple(locations),
            modes=tuple(modes),
            travel=matrix,
            op_cost_fresh=op_cost_fresh,
            op_cost_frozen=op_cost_frozen,
            failure_rate=failure_rate,
            big_t_hours=big_t_hours,
            cryo_leg_limit_hours=cryo_leg_limit_hours,
        )

    @property
    def n_orders(self) -> int:
        return len(self.orders)

    @property
    def n_locations(self) -> int:
        return len(self.locations)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def sizes(self) -> Tuple[int, int, int]:
        """(|I|, |J|, |K|)."""
        return self.n_orders, self.n_locations, self.n_modes

    @property
    def max_travel(self) -> float:
        return self.travel.max_hours()

    def with_failure_rates(self, failure_rate: Any) -> "Instance":
        """Copy of this instance with a replaced failure-rate matrix."""
        return replace(self, failure_rate=np.asarray(failure_rate, dtype=float))

    def to_dict(self) -> Dict[str, Any]:
        """Convert to the instance document layout."""
        return {
            "orders": [o.to_dict() for o in self.orders],
            "locations": [loc.to_dict() for loc in self.locations],
            "modes": [m.to_dict() for m in self.modes],
            "travel": self.travel.to_list(),
            "op_cost_fresh": self.op_cost_fresh.tolist(),
            "op_cost_frozen": self.op_cost_frozen.tolist(),
            "failure_rate": self.failure_rate.tolist(),
            "big_t_hours": self.big_t_hours,
            "cryo_leg_limit_hours": self.cryo_leg_limit_hours,
        }


def default_big_t(travel: TravelMatrix) -> float:
    """T is only defined by a property: larger than any travel time."""
    return travel.max_hours() + 1.0


@dataclass(frozen=True)
class Violation:
    """One broken invariant or constraint."""

    tag: str
    index: Tuple[int, ...] = ()
    message: str = ""
    severity: str = "error"

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "tag": self.tag,
            "index": list(self.index),
            "message": self.message,
            "severity": self.severity,
        }

    def __str__(self) -> str:
        where = f"[{', '.join(str(i) for i in self.index)}]" if self.index else ""
        return f"{self.tag}{where}: {self.message}"


def _finite_nonneg(
    values: np.ndarray, tag: str, what: str, violations: List[Violation]
) -> None:
    bad = ~np.isfinite(values) | (values < 0)
    for index in zip(*np.nonzero(bad)):
        violations.append(
            Violation(tag, tuple(int(i) for i in index), f"{what} must be finite and >= 0")
        )


def validate(instance: Instance) -> List[Violation]:
    """Check every instance invariant.

    Args:
        instance: Instance to check

    Returns:
        List of violations; empty iff the instance is well formed
    """
    violations: List[Violation] = []
    n_i, n_j, n_k = instance.sizes

    for name, count in (("orders", n_i), ("locations", n_j), ("modes", n_k)):
        if count == 0:
            violations.append(Violation(name, (), f"at least one entry required in {name}"))

    for pos, order in enumerate(instance.orders):
        if order.id != pos:
            violations.append(Violation("orders.id", (pos,), f"id {order.id} must equal position {pos}"))
        if not (math.isfinite(order.shelf_life_hours) and order.shelf_life_hours > 0):
            violations.append(
                Violation("orders.shelf_life_hours", (pos,), "shelf-life must be finite and > 0")
            )
    for pos, location in enumerate(instance.locations):
        if location.id != pos:
            violations.append(Violation("locations.id", (pos,), f"id {location.id} must equal position {pos}"))
    _finite_nonneg(instance.setup_manufacturing, "locations.setup_cost_manufacturing", "setup cost", violations)
    _finite_nonneg(instance.setup_cryo, "locations.setup_cost_cryo", "setup cost", violations)
    for pos, mode in enumerate(instance.modes):
        if mode.id != pos:
            violations.append(Violation("modes.id", (pos,), f"id {mode.id} must equal position {pos}"))
    _finite_nonneg(instance.p_fresh, "modes.p_fresh_hours", "production time", violations)
    _finite_nonneg(instance.p_frozen, "modes.p_frozen_hours", "production time", violations)

    travel = instance.travel.entries
    n_nodes = n_i + n_j
    travel_ok = travel.shape == (n_nodes, n_nodes)
    if not travel_ok:
        violations.append(
            Violation("travel", (), f"expected {n_nodes}x{n_nodes} matrix, got {'x'.join(map(str, travel.shape))}")
        )
    else:
        _finite_nonneg(travel, "travel", "travel time", violations)
        diagonal = np.diagonal(travel)
        for node in np.nonzero(diagonal != 0)[0]:
            violations.append(Violation("travel", (int(node), int(node)), "diagonal entry must be 0"))

    for name in ("op_cost_fresh", "op_cost_frozen"):
        tensor = getattr(instance, name)
        if tensor.shape != (n_i, n_j, n_k):
            violations.append(
                Violation(name, (), f"expected shape {(n_i, n_j, n_k)}, got {tensor.shape}")
            )
        else:
            _finite_nonneg(tensor, name, "operation cost", violations)

    rates = instance.failure_rate
    if rates.shape != (n_i, n_k):
        violations.append(Violation("failure_rate", (), f"expected shape {(n_i, n_k)}, got {rates.shape}"))
    else:
        bad = ~np.isfinite(rates) | (rates < 0) | (rates >= 1)
        for index in zip(*np.nonzero(bad)):
            violations.append(
                Violation("failure_rate", tuple(int(i) for i in index), "failure_rate out of [0,1)")
            )

    max_travel = float(np.max(travel)) if travel_ok and travel.size and np.all(np.isfinite(travel)) else None
    if not math.isfinite(instance.big_t_hours):
        violations.append(Violation("big_t_hours", (), "big_t must be finite"))
    elif max_travel is not None and instance.big_t_hours <= max_travel:
        violations.append(Violation("big_t_hours", (), "big_t not larger than max travel"))

    limit = instance.cryo_leg_limit_hours
    if not (math.isfinite(limit) and limit >= 0):
        violations.append(Violation("cryo_leg_limit_hours", (), "cryo leg limit must be finite and >= 0"))

    return violations


@dataclass(frozen=True, eq=False)
class Solution:
    """Full assignment of the binary decision variables."""

    y_m: np.ndarray
    y_c: np.ndarray
    x_m: np.ndarray
    x_c: np.ndarray
    z: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        for name in ("y_m", "y_c", "x_m", "x_c", "z", "m"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name), dtype=bool))

    @classmethod
    def empty(cls, instance: Instance) -> "Solution":
        """Everything closed, nobody covered."""
        n_i, n_j, n_k = instance.sizes
        return cls(
            y_m=np.zeros(n_j, dtype=bool),
            y_c=np.zeros(n_j, dtype=bool),
            x_m=np.zeros((n_i, n_j), dtype=bool),
            x_c=np.zeros((n_i, n_j), dtype=bool),
            z=np.zeros(n_i, dtype=bool),
            m=np.zeros((n_j, n_k), dtype=bool),
        )

    def check_shape(self, instance: Instance) -> None:
        """Raise ShapeError unless every array is shaped to the instance."""
        n_i, n_j, n_k = instance.sizes
        expected = {
            "y_m": (n_j,),
            "y_c": (n_j,),
            "x_m": (n_i, n_j),
            "x_c": (n_i, n_j),
            "z": (n_i,),
            "m": (n_j, n_k),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise ShapeError(f"{name} has shape {actual}, expected {shape}")

    def key(self) -> bytes:
        """Byte signature; equal solutions have equal keys."""
        parts = [getattr(self, name) for name in ("y_m", "y_c", "x_m", "x_c", "z", "m")]
        shapes = repr([p.shape for p in parts]).encode()
        return shapes + b"|" + b"".join(np.packbits(p.ravel()).tobytes() for p in parts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Solution):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def to_dict(self) -> Dict[str, Any]:
        """Convert to the solution document layout (0/1 integers)."""
        return {
            name: getattr(self, name).astype(int).tolist()
            for name in ("y_m", "y_c", "x_m", "x_c", "z", "m")
        }


@dataclass(frozen=True)
class ObjectiveVector:
    """(W, C, V): minimise waiting time and cost, maximise coverage."""

    waiting_time_hours: float
    cost: float
    coverage: int

    def dominates(self, other: "ObjectiveVector") -> bool:
        """True iff no worse in every objective and strictly better in one."""
        no_worse = (
            self.waiting_time_hours <= other.waiting_time_hours
            and self.cost <= other.cost
            and self.coverage >= other.coverage
        )
        strictly = (
            self.waiting_time_hours < other.waiting_time_hours
            or self.cost < other.cost
            or self.coverage > other.coverage
        )
        return no_worse and strictly

    def as_tuple(self) -> Tuple[float, float, int]:
        return self.waiting_time_hours, self.cost, self.coverage

    def minimization_tuple(self) -> Tuple[float, float, float]:
        """All three objectives as minimisation (coverage negated)."""
        return self.waiting_time_hours, self.cost, -float(self.coverage)

    def front_order(self) -> Tuple[float, float, float]:
        """Sort key of a front: coverage desc, cost asc, waiting time asc."""
        return -self.coverage, self.cost, self.waiting_time_hours

    @property
    def mean_waiting_time(self) -> float:
        """Waiting time per covered order; 0 when nobody is covered."""
        if self.coverage == 0:
            return 0.0
        return self.waiting_time_hours / self.coverage

    def is_close(self, other: "ObjectiveVector", tol: float = 1e-9) -> bool:
        return (
            self.coverage == other.coverage
            and abs(self.waiting_time_hours - other.waiting_time_hours) <= tol
            and abs(self.cost - other.cost) <= tol
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "waiting_time_hours": self.waiting_time_hours,
            "cost": self.cost,
            "coverage": self.coverage,
            "mean_waiting_time_hours": self.mean_waiting_time,
        }


def generate(
    n_orders: int,
    n_locations: int,
    n_modes: int,
    seed: int,
    geometry: str = "unit-square",
    travel: Optional[Any] = None,
    speed_hours_per_unit: float = SPEED_HOURS_PER_UNIT,
) -> Instance:
    """Generate a random instance.

    Modes are laid out from fully manual (slow, failure-prone, cheap to run)
    to fully automated (fast, reliable, expensive to run). Roughly half of
    the orders get a shelf-life that reaches their nearest location fresh;
    the rest get one too short for that, so they need the frozen path.

    Args:
        n_orders: |I|
        n_locations: |J|
        n_modes: |K|
        seed: random seed; equal seeds give identical instances
        geometry: "unit-square" (Euclidean travel) or "matrix-supplied"
        travel: (|I|+|J|) square travel matrix for "matrix-supplied"
        speed_hours_per_unit: travel hours per unit distance (unit-square)

    Returns:
        Instance satisfying validate()
    """
    for name, count in (("n_orders", n_orders), ("n_locations", n_locations), ("n_modes", n_modes)):
        if count < 1:
            raise ValueError(f"{name} must be at least 1, got {count}")
    if geometry not in GEOMETRIES:
        raise ValueError(f"Unknown geometry: {geometry} (expected one of {', '.join(GEOMETRIES)})")

    rng = np.random.default_rng(seed)
    n_nodes = n_orders + n_locations

    if geometry == "unit-square":
        points = rng.uniform(0.0, 1.0, size=(n_nodes, 2))
        matrix = np.round(cdist(points, points) * speed_hours_per_unit, 3)
    else:
        if travel is None:
            raise ValueError("geometry 'matrix-supplied' needs a travel matrix")
        matrix = np.asarray(travel, dtype=float)
        if matrix.shape != (n_nodes, n_nodes):
            raise ValueError(f"travel must be {n_nodes}x{n_nodes}, got {matrix.shape}")

    to_location = matrix[:n_orders, n_orders:]
    to_order = matrix[n_orders:, :n_orders].T
    nearest = np.maximum(to_location, to_order).min(axis=1)
    max_travel = float(matrix.max())

    frozen_forced = np.zeros(n_orders, dtype=bool)
    frozen_forced[rng.permutation(n_orders)[: n_orders // 2]] = True
    fresh_factor = rng.uniform(1.2, 2.0, size=n_orders)
    forced_factor = rng.uniform(0.3, 0.8, size=n_orders)
    shelf_life = np.where(frozen_forced, nearest * forced_factor, nearest * fresh_factor + 1.0)
    shelf_life = np.maximum(np.round(shelf_life, 3), 0.5)

    setup_m = np.round(rng.uniform(500.0, 1000.0, size=n_locations), 3)
    setup_c = np.round(rng.uniform(100.0, 300.0, size=n_locations), 3)

    automation = np.linspace(0.0, 1.0, n_modes) if n_modes > 1 else np.array([0.5])
    p_fresh = np.round((240.0 - 96.0 * automation) * rng.uniform(0.9, 1.1, size=n_modes), 3)
    p_frozen = np.round(p_fresh + rng.uniform(12.0, 36.0, size=n_modes), 3)

    base_rate = 0.15 - 0.1 * automation
    rates = base_rate[None, :] * rng.uniform(0.8, 1.2, size=(n_orders, n_modes))
    rates = np.round(np.clip(rates, 0.0, 0.95), 3)

    unit_cost = 50.0 + 30.0 * automation
    distance_factor = 1.0 + 0.5 * to_location / max(max_travel, 1.0)
    op_fresh = (
        unit_cost[None, None, :]
        * distance_factor[:, :, None]
        * rng.uniform(0.9, 1.1, size=(n_orders, n_locations, n_modes))
    )
    op_frozen = op_fresh * rng.uniform(1.1, 1.3, size=(n_orders, n_locations, n_modes))

    return Instance.build(
        shelf_life_hours=shelf_life.tolist(),
        setup_cost_manufacturing=setup_m.tolist(),
        setup_cost_cryo=setup_c.tolist(),
        p_fresh_hours=p_fresh.tolist(),
        p_frozen_hours=p_frozen.tolist(),
        travel=matrix,
        op_cost_fresh=np.round(op_fresh, 3),
        op_cost_frozen=np.round(op_frozen, 3),
        failure_rate=rates,
        big_t_hours=max_travel + 1.0,
    )
