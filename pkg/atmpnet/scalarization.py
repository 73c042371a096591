"""Scalarizations of (W, C, V) used by every single-objective solver."""

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

from .instance import ObjectiveVector

OBJECTIVES = ("waiting_time", "cost", "coverage")

# Relative slack on epsilon caps, absorbs summation-order differences.
CAP_TOL = 1e-9


def cap_slack(cap: float) -> float:
    return CAP_TOL * max(1.0, abs(cap))


@dataclass(frozen=True)
class WeightedSum:
    """Minimise alpha*W + beta*C - lam*V."""

    alpha: float = 1.0
    beta: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        weights = (self.alpha, self.beta, self.lam)
        if any(not math.isfinite(w) or w < 0 for w in weights):
            raise ValueError(f"weights must be finite and >= 0, got {weights}")
        if all(w == 0 for w in weights):
            raise ValueError("weights must not all be zero")

    def value(self, waiting_time: float, cost: float, coverage: float) -> float:
        return self.alpha * waiting_time + self.beta * cost - self.lam * coverage

    def score(self, objective: ObjectiveVector) -> float:
        """Scalarized value of an objective vector."""
        return self.value(objective.waiting_time_hours, objective.cost, objective.coverage)

    def key(self, objective: ObjectiveVector) -> Tuple[float, ...]:
        return (self.score(objective),)

    def admits(self, objective: ObjectiveVector) -> bool:
        return True

    def describe(self) -> str:
        return f"weighted-sum {self.alpha:g}*W + {self.beta:g}*C - {self.lam:g}*V"


@dataclass(frozen=True)
class EpsilonConstraint:
    """Optimise one objective with the other two bounded.

    The primary objective's own bound must be unset. Ties on the primary are
    broken by the remaining objectives in (W, C, -V) order.
    """

    primary: str = "waiting_time"
    waiting_cap: Optional[float] = None
    cost_cap: Optional[float] = None
    coverage_floor: int = 0

    def __post_init__(self):
        if self.primary not in OBJECTIVES:
            raise ValueError(f"primary must be one of {', '.join(OBJECTIVES)}, got {self.primary}")
        if self.primary == "waiting_time" and self.waiting_cap is not None:
            raise ValueError("waiting_cap cannot bound the primary objective")
        if self.primary == "cost" and self.cost_cap is not None:
            raise ValueError("cost_cap cannot bound the primary objective")
        if self.primary == "coverage" and self.coverage_floor != 0:
            raise ValueError("coverage_floor cannot bound the primary objective")
        for name in ("waiting_cap", "cost_cap"):
            cap = getattr(self, name)
            if cap is not None and math.isnan(cap):
                raise ValueError(f"{name} must be a number")
        if self.coverage_floor < 0:
            raise ValueError("coverage_floor must be >= 0")

    def admits(self, objective: ObjectiveVector) -> bool:
        """True iff the objective vector satisfies every bound."""
        return self.admits_values(objective.waiting_time_hours, objective.cost, objective.coverage)

    def admits_values(self, waiting_time: float, cost: float, coverage: int) -> bool:
        if self.waiting_cap is not None and waiting_time > self.waiting_cap + cap_slack(self.waiting_cap):
            return False
        if self.cost_cap is not None and cost > self.cost_cap + cap_slack(self.cost_cap):
            return False
        return coverage >= self.coverage_floor

    def order(self, waiting_time: float, cost: float, coverage: float) -> Tuple[float, float, float]:
        """Lexicographic minimisation key: primary first."""
        parts = {"waiting_time": waiting_time, "cost": cost, "coverage": -coverage}
        rest = tuple(parts[name] for name in OBJECTIVES if name != self.primary)
        return (parts[self.primary],) + rest

    def key(self, objective: ObjectiveVector) -> Tuple[float, ...]:
        return self.order(objective.waiting_time_hours, objective.cost, objective.coverage)

    def score(self, objective: ObjectiveVector) -> float:
        """Value of the primary objective in minimisation sense."""
        return self.key(objective)[0]

    def tightened(self, **bounds) -> "EpsilonConstraint":
        return replace(self, **bounds)

    def describe(self) -> str:
        bounds = []
        if self.waiting_cap is not None:
            bounds.append(f"W <= {self.waiting_cap:g}")
        if self.cost_cap is not None:
            bounds.append(f"C <= {self.cost_cap:g}")
        if self.coverage_floor:
            bounds.append(f"V >= {self.coverage_floor}")
        return f"epsilon {self.primary}" + (f" s.t. {', '.join(bounds)}" if bounds else "")


Scalarization = Union[WeightedSum, EpsilonConstraint]


def parse_weights(text: str) -> WeightedSum:
    """Parse signed minimisation coefficients "a,b,c" of (W, C, V).

    The coverage coefficient must be <= 0: "1,1,-1000" rewards coverage.
    """
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError:
        raise ValueError(f"weights must be three numbers, got {text!r}")
    if len(values) != 3:
        raise ValueError(f"weights must be three numbers, got {text!r}")
    alpha, beta, coverage_coefficient = values
    if coverage_coefficient > 0:
        raise ValueError("coverage coefficient must be <= 0 (coverage is maximised)")
    return WeightedSum(alpha=alpha, beta=beta, lam=0.0 - coverage_coefficient)
