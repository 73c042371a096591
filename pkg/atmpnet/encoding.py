"""0-1 linear encoding of the network design model.

Waiting time contains products of up to four binaries (x_m, z, x_c and the
mode m through the failure factor). Each distinct monomial gets one
auxiliary binary w = p * q, chained through pair auxiliaries:

    a[i,j]        = x_m[i,j] * z[i]
    b[i,j,k]      = x_m[i,j] * m[j,k]
    c[i,j,k]      = b[i,j,k] * z[i]
    e[i,j,j']     = a[i,j] * x_c[i,j']
    f[i,j,k,j']   = c[i,j,k] * x_c[i,j']

Products of two different modes vanish because a location has one mode.
Each product is tied to its factors by w <= p, w <= q, p + q - w <= 1.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import csr_matrix

from .errors import EncodingError
from .instance import Instance, Solution
from .scalarization import EpsilonConstraint, Scalarization, WeightedSum

logger = logging.getLogger(__name__)

SENSES = ("<=", "=", ">=")
_MPS_SENSE = {"<=": "L", "=": "E", ">=": "G"}


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str = "binary"
    lower: float = 0.0
    upper: float = 1.0


@dataclass(frozen=True)
class Constraint:
    name: str
    coefficients: Dict[str, float]
    sense: str
    rhs: float

    def activity(self, assignment: Mapping[str, float]) -> float:
        return sum(coef * assignment.get(name, 0.0) for name, coef in self.coefficients.items())

    def satisfied(self, assignment: Mapping[str, float], tol: float = 1e-6) -> bool:
        lhs = self.activity(assignment)
        if self.sense == "<=":
            return lhs <= self.rhs + tol
        if self.sense == ">=":
            return lhs >= self.rhs - tol
        return abs(lhs - self.rhs) <= tol


@dataclass
class LinearProgram:
    """A minimisation over declared variables with linear constraints."""

    name: str
    variables: List[Variable]
    objective: Dict[str, float]
    constraints: List[Constraint]
    parts: Dict[str, Dict[str, float]] = field(default_factory=dict)
    auxiliary_count: int = 0

    def __post_init__(self):
        self.index = {v.name: n for n, v in enumerate(self.variables)}
        if len(self.index) != len(self.variables):
            raise EncodingError("duplicate variable names")
        for constraint in self.constraints:
            if constraint.sense not in SENSES:
                raise EncodingError(f"{constraint.name}: unknown sense {constraint.sense}")
            unknown = [n for n in constraint.coefficients if n not in self.index]
            if unknown:
                raise EncodingError(f"{constraint.name} references undeclared {unknown[0]}")

    def objective_value(self, assignment: Mapping[str, float]) -> float:
        return sum(coef * assignment.get(name, 0.0) for name, coef in self.objective.items())

    def decomposition(self, assignment: Mapping[str, float]) -> Tuple[float, float, float]:
        """(W, C, V) of an assignment as the encoding computes them."""
        values = [
            sum(coef * assignment.get(name, 0.0) for name, coef in self.parts[part].items())
            for part in ("waiting_time", "cost", "coverage")
        ]
        return values[0], values[1], values[2]

    def check(self, assignment: Mapping[str, float], tol: float = 1e-6) -> List[str]:
        """Names of violated constraints (empty when feasible)."""
        return [c.name for c in self.constraints if not c.satisfied(assignment, tol)]

    def to_lp_text(self) -> str:
        """CPLEX LP format."""
        lines = [f"\\ {self.name}", "Minimize", _lp_expression(" obj:", self.objective, self.variables[0].name)]
        lines.append("Subject To")
        for constraint in self.constraints:
            expression = _lp_expression(f" {constraint.name}:", constraint.coefficients)
            lines.append(f"{expression} {constraint.sense} {_num(constraint.rhs)}")
        continuous = [v for v in self.variables if v.kind != "binary"]
        if continuous:
            lines.append("Bounds")
            for v in continuous:
                lines.append(f" {_num(v.lower)} <= {v.name} <= {_num(v.upper)}")
        lines.append("Binaries")
        binaries = [v.name for v in self.variables if v.kind == "binary"]
        for start in range(0, len(binaries), 8):
            lines.append(" " + " ".join(binaries[start : start + 8]))
        lines.append("End")
        return "\n".join(lines) + "\n"

    def to_mps_text(self) -> str:
        """Free MPS with INTORG markers around the binary columns."""
        lines = [f"NAME {self.name}", "ROWS", " N obj"]
        for constraint in self.constraints:
            lines.append(f" {_MPS_SENSE[constraint.sense]} {constraint.name}")

        entries: Dict[str, List[Tuple[str, float]]] = {v.name: [] for v in self.variables}
        for name, coef in self.objective.items():
            entries[name].append(("obj", coef))
        for constraint in self.constraints:
            for name, coef in constraint.coefficients.items():
                entries[name].append((constraint.name, coef))

        lines.append("COLUMNS")
        in_marker = False
        for variable in self.variables:
            binary = variable.kind == "binary"
            if binary and not in_marker:
                lines.append(" MARKER 'MARKER' 'INTORG'")
                in_marker = True
            elif not binary and in_marker:
                lines.append(" MARKER 'MARKER' 'INTEND'")
                in_marker = False
            column = entries[variable.name] or [("obj", 0.0)]
            for row, coef in column:
                lines.append(f" {variable.name} {row} {_num(coef)}")
        if in_marker:
            lines.append(" MARKER 'MARKER' 'INTEND'")

        lines.append("RHS")
        for constraint in self.constraints:
            if constraint.rhs != 0:
                lines.append(f" rhs {constraint.name} {_num(constraint.rhs)}")
        lines.append("BOUNDS")
        for variable in self.variables:
            if variable.kind == "binary":
                lines.append(f" BV bnd {variable.name}")
            else:
                lines.append(f" LO bnd {variable.name} {_num(variable.lower)}")
                lines.append(f" UP bnd {variable.name} {_num(variable.upper)}")
        lines.append("ENDATA")
        return "\n".join(lines) + "\n"


def _num(value: float) -> str:
    return format(float(value), ".15g")


def _lp_expression(prefix: str, coefficients: Mapping[str, float], placeholder: str = "") -> str:
    terms = []
    for n, (name, coef) in enumerate(coefficients.items()):
        sign = ("-" if coef < 0 else "") if n == 0 else ("- " if coef < 0 else "+ ")
        terms.append(f"{sign}{_num(abs(coef))} {name}")
    if not terms:
        terms = [f"0 {placeholder}"]
    chunks = [" ".join(terms[start : start + 8]) for start in range(0, len(terms), 8)]
    return prefix + " " + "\n   ".join(chunks)


def auxiliary_count_formula(n_orders: int, n_locations: int, n_modes: int) -> int:
    """Closed-form number of product auxiliaries."""
    return n_orders * n_locations * (1 + 2 * n_modes + n_locations + n_modes * n_locations)


def _products(n_i: int, n_j: int, n_k: int) -> Iterator[Tuple[str, str, str]]:
    """(auxiliary, left factor, right factor) in declaration order."""
    for i in range(n_i):
        for j in range(n_j):
            yield f"a_{i}_{j}", f"xm_{i}_{j}", f"z_{i}"
    for i in range(n_i):
        for j in range(n_j):
            for k in range(n_k):
                yield f"b_{i}_{j}_{k}", f"xm_{i}_{j}", f"m_{j}_{k}"
    for i in range(n_i):
        for j in range(n_j):
            for k in range(n_k):
                yield f"c_{i}_{j}_{k}", f"b_{i}_{j}_{k}", f"z_{i}"
    for i in range(n_i):
        for j in range(n_j):
            for jp in range(n_j):
                yield f"e_{i}_{j}_{jp}", f"a_{i}_{j}", f"xc_{i}_{jp}"
    for i in range(n_i):
        for j in range(n_j):
            for k in range(n_k):
                for jp in range(n_j):
                    yield f"f_{i}_{j}_{k}_{jp}", f"c_{i}_{j}_{k}", f"xc_{i}_{jp}"


def _base_names(n_i: int, n_j: int, n_k: int) -> List[str]:
    names = [f"ym_{j}" for j in range(n_j)] + [f"yc_{j}" for j in range(n_j)]
    names += [f"xm_{i}_{j}" for i in range(n_i) for j in range(n_j)]
    names += [f"xc_{i}_{j}" for i in range(n_i) for j in range(n_j)]
    names += [f"z_{i}" for i in range(n_i)]
    names += [f"m_{j}_{k}" for j in range(n_j) for k in range(n_k)]
    return names


def _add(target: Dict[str, float], name: str, coef: float) -> None:
    if coef != 0:
        target[name] = target.get(name, 0.0) + float(coef)


def _objective_parts(instance: Instance) -> Dict[str, Dict[str, float]]:
    n_i, n_j, n_k = instance.sizes
    travel = instance.travel
    d_to, d_back, between = travel.to_location, travel.to_order, travel.between_locations
    rate = instance.failure_rate
    waiting: Dict[str, float] = {}
    cost: Dict[str, float] = {}
    coverage: Dict[str, float] = {}

    for j in range(n_j):
        _add(cost, f"ym_{j}", instance.setup_manufacturing[j])
        _add(cost, f"yc_{j}", instance.setup_cryo[j])
    for i in range(n_i):
        for j in range(n_j):
            _add(coverage, f"xm_{i}_{j}", 1.0)
            _add(waiting, f"xm_{i}_{j}", d_back[i, j] + d_to[i, j])
            _add(waiting, f"a_{i}_{j}", -d_to[i, j])
            for jp in range(n_j):
                _add(waiting, f"e_{i}_{j}_{jp}", d_to[i, jp] + between[jp, j])
            for k in range(n_k):
                r = rate[i, k]
                p_fresh, p_frozen = instance.p_fresh[k], instance.p_frozen[k]
                _add(waiting, f"b_{i}_{j}_{k}", r * d_to[i, j] + (1 + r) * p_fresh)
                _add(waiting, f"c_{i}_{j}_{k}", -r * d_to[i, j] - (1 + r) * p_fresh + (1 + r) * p_frozen)
                for jp in range(n_j):
                    _add(waiting, f"f_{i}_{j}_{k}_{jp}", r * (d_to[i, jp] + between[jp, j]))
                fresh_cost = instance.op_cost_fresh[i, j, k]
                frozen_cost = instance.op_cost_frozen[i, j, k]
                _add(cost, f"b_{i}_{j}_{k}", (1 + r) * fresh_cost)
                _add(cost, f"c_{i}_{j}_{k}", (1 + r) * (frozen_cost - fresh_cost))
    return {"waiting_time": waiting, "cost": cost, "coverage": coverage}


def encode(
    instance: Instance,
    scalarization: Scalarization,
    paper_strict: bool = False,
) -> LinearProgram:
    """Linearize the scalarized model into a pure 0-1 program.

    Args:
        instance: Validated instance
        scalarization: Weighted sum, or epsilon constraint (bounds become rows)
        paper_strict: Keep the verbatim "at most one cryo facility" rule and
            drop the row that forces covered frozen orders through cryo

    Returns:
        LinearProgram with deterministic variable and row names
    """
    n_i, n_j, n_k = instance.sizes
    travel = instance.travel
    d_to, d_back = travel.to_location, travel.to_order
    big_t = instance.big_t_hours
    products = list(_products(n_i, n_j, n_k))
    variables = [Variable(name) for name in _base_names(n_i, n_j, n_k)]
    variables += [Variable(aux) for aux, _, _ in products]

    rows: List[Constraint] = []
    for i in range(n_i):
        gamma = float(instance.shelf_life[i])
        to = {f"xm_{i}_{j}": float(d_to[i, j]) for j in range(n_j)}
        to[f"z_{i}"] = -big_t
        rows.append(Constraint(f"fresh_to_{i}", to, "<=", gamma))
        back = {f"xm_{i}_{j}": float(d_back[i, j]) for j in range(n_j)}
        back[f"z_{i}"] = -big_t
        rows.append(Constraint(f"fresh_from_{i}", back, "<=", gamma))
        frozen = {f"xc_{i}_{j}": float(d_to[i, j]) for j in range(n_j)}
        rows.append(Constraint(f"frozen_{i}", frozen, "<=", instance.cryo_leg_limit_hours))
        rows.append(Constraint(f"one_manufacturing_{i}", {f"xm_{i}_{j}": 1.0 for j in range(n_j)}, "<=", 1.0))
        one_cryo = {f"xc_{i}_{j}": 1.0 for j in range(n_j)}
        one_cryo[f"z_{i}"] = -1.0
        rows.append(Constraint(f"one_cryo_{i}", one_cryo, "<=", 0.0))
        if not paper_strict:
            # >= and not =: an uncovered order with z = 1 may keep its cryo slot
            gap = {f"xc_{i}_{j}": 1.0 for j in range(n_j)}
            gap.update({f"a_{i}_{j}": -1.0 for j in range(n_j)})
            rows.append(Constraint(f"cryo_gap_{i}", gap, ">=", 0.0))
    for i in range(n_i):
        for j in range(n_j):
            rows.append(Constraint(f"m_assign_ifopen_{i}_{j}", {f"xm_{i}_{j}": 1.0, f"ym_{j}": -1.0}, "<=", 0.0))
            rows.append(Constraint(f"c_assign_ifopen_{i}_{j}", {f"xc_{i}_{j}": 1.0, f"yc_{j}": -1.0}, "<=", 0.0))
    for j in range(n_j):
        rows.append(Constraint(f"one_type_{j}", {f"ym_{j}": 1.0, f"yc_{j}": 1.0}, "<=", 1.0))
        modes = {f"m_{j}_{k}": 1.0 for k in range(n_k)}
        modes[f"ym_{j}"] = -1.0
        rows.append(Constraint(f"mode_manufacturing_{j}", modes, "=", 0.0))
    for aux, left, right in products:
        rows.append(Constraint(f"{aux}_le_left", {aux: 1.0, left: -1.0}, "<=", 0.0))
        rows.append(Constraint(f"{aux}_le_right", {aux: 1.0, right: -1.0}, "<=", 0.0))
        rows.append(Constraint(f"{aux}_ge_both", {left: 1.0, right: 1.0, aux: -1.0}, "<=", 1.0))

    parts = _objective_parts(instance)
    objective: Dict[str, float] = {}
    if isinstance(scalarization, WeightedSum):
        for part, weight in (
            ("waiting_time", scalarization.alpha),
            ("cost", scalarization.beta),
            ("coverage", -scalarization.lam),
        ):
            for name, coef in parts[part].items():
                _add(objective, name, weight * coef)
    else:
        eps: EpsilonConstraint = scalarization
        sign = -1.0 if eps.primary == "coverage" else 1.0
        for name, coef in parts[eps.primary].items():
            _add(objective, name, sign * coef)
        if eps.waiting_cap is not None:
            rows.append(Constraint("eps_waiting_time", dict(parts["waiting_time"]), "<=", eps.waiting_cap))
        if eps.cost_cap is not None:
            rows.append(Constraint("eps_cost", dict(parts["cost"]), "<=", eps.cost_cap))
        if eps.coverage_floor:
            rows.append(Constraint("eps_coverage", dict(parts["coverage"]), ">=", float(eps.coverage_floor)))

    program = LinearProgram(
        name="atmpnet",
        variables=variables,
        objective=objective,
        constraints=rows,
        parts=parts,
        auxiliary_count=len(products),
    )
    logger.debug(
        "Encoded %d variables (%d auxiliary), %d rows",
        len(variables),
        program.auxiliary_count,
        len(rows),
    )
    return program


def decode(instance: Instance, assignment: Mapping[str, float], tol: float = 1e-6) -> Solution:
    """Turn a 0-1 assignment back into a Solution.

    Missing variables read as 0.

    Raises:
        EncodingError: a value is not binary or an auxiliary disagrees with
            the product of its factors
    """
    n_i, n_j, n_k = instance.sizes
    values: Dict[str, int] = {}
    for name in _base_names(n_i, n_j, n_k) + [aux for aux, _, _ in _products(n_i, n_j, n_k)]:
        raw = float(assignment.get(name, 0.0))
        rounded = int(round(raw))
        if rounded not in (0, 1) or abs(raw - rounded) > tol:
            raise EncodingError(f"{name} = {raw} is not binary")
        values[name] = rounded
    for aux, left, right in _products(n_i, n_j, n_k):
        if values[aux] != values[left] * values[right]:
            raise EncodingError(
                f"auxiliary {aux} = {values[aux]} but {left} * {right} = {values[left] * values[right]}"
            )

    def grid(prefix: str, *shape: int) -> np.ndarray:
        out = np.zeros(shape, dtype=bool)
        for index in np.ndindex(*shape):
            out[index] = values[prefix + "_" + "_".join(str(n) for n in index)] == 1
        return out

    return Solution(
        y_m=grid("ym", n_j),
        y_c=grid("yc", n_j),
        x_m=grid("xm", n_i, n_j),
        x_c=grid("xc", n_i, n_j),
        z=grid("z", n_i),
        m=grid("m", n_j, n_k),
    )


def encode_solution(instance: Instance, solution: Solution) -> Dict[str, float]:
    """Assignment of every program variable (auxiliaries included) for a Solution."""
    solution.check_shape(instance)
    n_i, n_j, n_k = instance.sizes
    values: Dict[str, float] = {}
    for prefix, array in (
        ("ym", solution.y_m),
        ("yc", solution.y_c),
        ("xm", solution.x_m),
        ("xc", solution.x_c),
        ("z", solution.z),
        ("m", solution.m),
    ):
        for index in np.ndindex(*array.shape):
            values[prefix + "_" + "_".join(str(n) for n in index)] = float(array[index])
    for aux, left, right in _products(n_i, n_j, n_k):
        values[aux] = values[left] * values[right]
    return values


@dataclass
class LpResult:
    """Outcome of solving a LinearProgram."""

    status: str
    assignment: Optional[Dict[str, float]]
    objective: Optional[float]

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


_STATUS = {0: "optimal", 1: "limit", 2: "infeasible", 3: "unbounded", 4: "error"}


def solve_lp(program: LinearProgram, time_limit: Optional[float] = None) -> LpResult:
    """Solve a 0-1 program with the HiGHS solver bundled in scipy."""
    n = len(program.variables)
    costs = np.zeros(n)
    for name, coef in program.objective.items():
        costs[program.index[name]] = coef

    rows, cols, vals = [], [], []
    lower = np.empty(len(program.constraints))
    upper = np.empty(len(program.constraints))
    for r, constraint in enumerate(program.constraints):
        for name, coef in constraint.coefficients.items():
            rows.append(r)
            cols.append(program.index[name])
            vals.append(coef)
        lower[r] = constraint.rhs if constraint.sense in ("=", ">=") else -np.inf
        upper[r] = constraint.rhs if constraint.sense in ("=", "<=") else np.inf
    matrix = csr_matrix((vals, (rows, cols)), shape=(len(program.constraints), n))

    integrality = np.array([1 if v.kind == "binary" else 0 for v in program.variables])
    bounds = Bounds(
        np.array([v.lower for v in program.variables]),
        np.array([v.upper for v in program.variables]),
    )
    options = {} if time_limit is None else {"time_limit": time_limit}
    result = milp(
        costs,
        constraints=LinearConstraint(matrix, lower, upper),
        integrality=integrality,
        bounds=bounds,
        options=options,
    )
    status = _STATUS.get(result.status, "error")
    logger.info("[SOLVE] milp status=%s", status)
    if result.x is None:
        return LpResult(status, None, None)
    assignment = {v.name: float(x) for v, x in zip(program.variables, result.x)}
    return LpResult(status, assignment, float(result.fun))
