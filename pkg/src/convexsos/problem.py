"""Problem instances: a polynomial objective with inequality constraints.

A problem is ``min f(x)`` subject to ``g_i(x) <= 0``.  The JSON file format
uses string coefficients so that instances round-trip exactly into the
rational path:

    {
      "n": 1,
      "objective": {"n": 1, "terms": [{"exp": [1], "coef": "1"}]},
      "constraints": [ ...polynomial objects... ],
      "feasible_point": ["0"],
      "c": "1",
      "notes": "optional free text"
    }

``feasible_point`` and ``c`` (the objective cap used by the extended
relaxation) are optional.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .poly import (
    DimensionMismatch,
    Polynomial,
    Scalar,
    format_coefficient,
    parse_coefficient,
)


@dataclass
class Problem:
    objective: Polynomial
    constraints: tuple[Polynomial, ...] = ()
    feasible_point: tuple[Scalar, ...] | None = None
    cap: Scalar | None = None
    notes: str = ""
    structure: dict | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        self.constraints = tuple(self.constraints)
        for g in self.constraints:
            if g.n != self.objective.n:
                raise DimensionMismatch("constraint variable count differs from objective")
        if self.feasible_point is not None:
            point = tuple(self.feasible_point)
            if len(point) != self.objective.n:
                raise DimensionMismatch("feasible point length differs from variable count")
            self.feasible_point = point

    @property
    def n(self) -> int:
        return self.objective.n

    @property
    def m(self) -> int:
        return len(self.constraints)

    def constraint_violation(self, point: Sequence[Scalar]) -> float:
        """max_i g_i(point), negative when strictly inside the feasible set."""
        if not self.constraints:
            return 0.0
        return max(float(g.eval(point)) for g in self.constraints)

    def is_feasible(self, point: Sequence[Scalar], tol: float = 1e-7) -> bool:
        return self.constraint_violation(point) <= tol

    def lagrangian(self, multipliers: Sequence[Scalar]) -> Polynomial:
        """f + sum_i lambda_i g_i as a polynomial in x."""
        if len(multipliers) != self.m:
            raise DimensionMismatch("multiplier count differs from constraint count")
        total = self.objective
        for lam, g in zip(multipliers, self.constraints):
            if lam != 0:
                total = total + g.scale(lam)
        return total

    # ------------------------------------------------------------------
    # JSON round trip
    # ------------------------------------------------------------------

    def to_json_dict(self) -> dict:
        data: dict = {
            "n": self.n,
            "objective": self.objective.to_json_dict(),
            "constraints": [g.to_json_dict() for g in self.constraints],
        }
        if self.feasible_point is not None:
            data["feasible_point"] = [format_coefficient(v) for v in self.feasible_point]
        if self.cap is not None:
            data["c"] = format_coefficient(self.cap)
        if self.notes:
            data["notes"] = self.notes
        return data

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Problem":
        n = int(data["n"])
        objective = Polynomial.from_json_dict(data["objective"])
        if objective.n != n:
            raise DimensionMismatch("objective variable count differs from declared n")
        constraints = tuple(
            Polynomial.from_json_dict(entry) for entry in data.get("constraints", [])
        )
        feasible_point = None
        if data.get("feasible_point") is not None:
            feasible_point = tuple(
                _parse_point_entry(v) for v in data["feasible_point"]
            )
        cap = None
        if data.get("c") is not None:
            cap = _parse_point_entry(data["c"])
        return cls(
            objective=objective,
            constraints=constraints,
            feasible_point=feasible_point,
            cap=cap,
            notes=str(data.get("notes", "")),
        )

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_json_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, path) -> "Problem":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_json_dict(json.load(handle))


def _parse_point_entry(value) -> Scalar:
    if isinstance(value, str):
        return parse_coefficient(value)
    if isinstance(value, bool):
        raise TypeError("bool is not a coordinate")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    raise TypeError(f"unsupported coordinate type {type(value).__name__}")


@dataclass(frozen=True)
class SaddlePoint:
    """A Lagrangian saddle point candidate: primal point plus multipliers.

    ``hessian_min_eigenvalue`` is the smallest eigenvalue of the Hessian in x
    of the Lagrangian at the point; positive definiteness of that Hessian is
    what upgrades a saddle point to a finite-convergence certificate.
    """

    point: tuple[float, ...]
    multipliers: tuple[float, ...]
    lagrangian_value: float
    hessian_min_eigenvalue: float

    def to_json_dict(self) -> dict:
        return {
            "point": list(self.point),
            "multipliers": list(self.multipliers),
            "lagrangian_value": self.lagrangian_value,
            "hessian_min_eigenvalue": self.hessian_min_eigenvalue,
        }
