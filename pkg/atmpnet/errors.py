"""Exceptions raised by atmpnet."""

from typing import List, Sequence


class AtmpnetError(Exception):
    """Base class for all atmpnet errors."""


class SchemaError(AtmpnetError):
    """A document does not match the file schema."""

    def __init__(self, path: str, message: str):
        self.path = path or "$"
        self.message = message
        super().__init__(f"{self.path}: {message}")


class InstanceValidationError(AtmpnetError):
    """An instance document parsed but violates the instance invariants."""

    def __init__(self, violations: Sequence):
        self.violations = list(violations)
        details = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"invalid instance: {details}{more}")


class ShapeError(AtmpnetError):
    """Solution arrays are not shaped to the instance."""


class InfeasibleSolutionError(AtmpnetError):
    """An objective was requested for a solution that violates a constraint."""

    def __init__(self, violations: Sequence):
        self.violations: List = list(violations)
        tags = sorted({v.tag for v in self.violations})
        super().__init__(f"solution is infeasible: {', '.join(tags)}")


class EncodingError(AtmpnetError):
    """A variable assignment is inconsistent with the linear encoding."""


class EnumerationLimitError(AtmpnetError):
    """The oracle refused an instance whose enumeration exceeds the guard."""

    def __init__(self, bound: int, limit: int):
        self.bound = bound
        self.limit = limit
        super().__init__(f"enumeration needs {bound} solutions, limit is {limit}")


class CoverageInfeasibleError(AtmpnetError):
    """Some orders cannot be covered under a classical model's radii."""

    def __init__(self, order_ids: Sequence[int], reason: str = "not coverable"):
        self.order_ids = list(order_ids)
        super().__init__(f"orders {self.order_ids} {reason}")
