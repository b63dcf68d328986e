"""
Exact rational linear programming (two-phase tableau simplex, Bland's rule).

Every variable is nonnegative. Coefficients are ``fractions.Fraction``; no
floating point is involved anywhere, so optima are returned exactly.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

ZERO = Fraction(0)


class LPStatus(str, Enum):
    """Outcome of a linear program."""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: LPStatus
    values: Dict[str, Fraction] = field(default_factory=dict)
    objective: Optional[Fraction] = None


@dataclass(frozen=True)
class LPRow:
    coeffs: Tuple[Tuple[str, Fraction], ...]
    relation: str
    rhs: Fraction


class LinearProgram:
    """Minimise a linear objective over named nonnegative variables."""

    RELATIONS = (">=", "<=", "=")

    def __init__(self, variables: Sequence[str] = ()):
        self.variables: List[str] = []
        self._index: Dict[str, int] = {}
        self.rows: List[LPRow] = []
        for name in variables:
            self.add_variable(name)

    def add_variable(self, name: str) -> None:
        if name not in self._index:
            self._index[name] = len(self.variables)
            self.variables.append(name)

    def add_constraint(self, coeffs: Mapping[str, Fraction], relation: str, rhs) -> None:
        """
        Add ``Σ coeffs[v]·v  relation  rhs``.

        Args:
            coeffs: Variable coefficients; unknown variables are registered
            relation: One of ``>=``, ``<=``, ``=``
            rhs: Right-hand side constant
        """
        if relation not in self.RELATIONS:
            raise ValueError(f"unknown relation: {relation}")
        for name in coeffs:
            self.add_variable(name)
        row = tuple((name, Fraction(value)) for name, value in coeffs.items() if value != 0)
        self.rows.append(LPRow(row, relation, Fraction(rhs)))

    def is_feasible(self) -> bool:
        return self.minimize({}).status != LPStatus.INFEASIBLE

    def minimize(self, objective: Mapping[str, Fraction]) -> LPResult:
        for name in objective:
            self.add_variable(name)
        tableau = _Tableau(self)
        if not tableau.phase_one():
            return LPResult(LPStatus.INFEASIBLE)
        cost = [Fraction(objective.get(name, 0)) for name in self.variables]
        if not tableau.phase_two(cost):
            return LPResult(LPStatus.UNBOUNDED)
        values = tableau.solution()
        value = sum((cost[j] * values[j] for j in range(len(cost))), ZERO)
        named = {name: values[j] for j, name in enumerate(self.variables)}
        return LPResult(LPStatus.OPTIMAL, named, value)


class _Tableau:
    """Dense tableau in equality form with structural, slack and artificial columns."""

    def __init__(self, program: LinearProgram):
        n = len(program.variables)
        index = program._index
        rows: List[Tuple[Dict[int, Fraction], str, Fraction]] = []
        for row in program.rows:
            coeffs = {index[name]: value for name, value in row.coeffs}
            relation, rhs = row.relation, row.rhs
            if rhs < 0:
                coeffs = {j: -v for j, v in coeffs.items()}
                rhs = -rhs
                relation = {">=": "<=", "<=": ">=", "=": "="}[relation]
            rows.append((coeffs, relation, rhs))

        slack_count = sum(1 for _, relation, _ in rows if relation != "=")
        artificial_count = sum(1 for _, relation, _ in rows if relation != "<=")
        self.structural = n
        self.first_artificial = n + slack_count
        self.width = n + slack_count + artificial_count
        self.matrix: List[List[Fraction]] = []
        self.rhs: List[Fraction] = []
        self.basis: List[int] = []

        slack = n
        artificial = self.first_artificial
        for coeffs, relation, rhs in rows:
            line = [ZERO] * self.width
            for j, value in coeffs.items():
                line[j] = value
            if relation == "<=":
                line[slack] = Fraction(1)
                self.basis.append(slack)
                slack += 1
            else:
                if relation == ">=":
                    line[slack] = Fraction(-1)
                    slack += 1
                line[artificial] = Fraction(1)
                self.basis.append(artificial)
                artificial += 1
            self.matrix.append(line)
            self.rhs.append(rhs)
        self.allowed = self.width

    def _pivot(self, row: int, col: int) -> None:
        pivot_line = self.matrix[row]
        factor = pivot_line[col]
        if factor != 1:
            for j in range(self.width):
                if pivot_line[j] != 0:
                    pivot_line[j] /= factor
            self.rhs[row] /= factor
        support = [j for j in range(self.width) if pivot_line[j] != 0]
        for i, line in enumerate(self.matrix):
            if i == row:
                continue
            ratio = line[col]
            if ratio == 0:
                continue
            for j in support:
                line[j] -= ratio * pivot_line[j]
            self.rhs[i] -= ratio * self.rhs[row]
        self.basis[row] = col

    def _reduced_costs(self, cost: List[Fraction]) -> List[Fraction]:
        reduced = list(cost)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb == 0:
                continue
            line = self.matrix[i]
            for j in range(self.width):
                if line[j] != 0:
                    reduced[j] -= cb * line[j]
        return reduced

    def _optimize(self, cost: List[Fraction]) -> bool:
        """Run simplex iterations; False when unbounded."""
        iterations = 0
        while True:
            reduced = self._reduced_costs(cost)
            entering = next((j for j in range(self.allowed)
                             if reduced[j] < 0 and j not in self.basis), None)
            if entering is None:
                logger.debug(f"Simplex converged after {iterations} pivots")
                return True
            leaving = None
            best = None
            for i, line in enumerate(self.matrix):
                a = line[entering]
                if a > 0:
                    ratio = self.rhs[i] / a
                    if best is None or ratio < best or (ratio == best and self.basis[i] < self.basis[leaving]):
                        best = ratio
                        leaving = i
            if leaving is None:
                return False
            self._pivot(leaving, entering)
            iterations += 1

    def phase_one(self) -> bool:
        if self.first_artificial == self.width:
            return True
        cost = [ZERO] * self.width
        for j in range(self.first_artificial, self.width):
            cost[j] = Fraction(1)
        self._optimize(cost)
        infeasibility = sum((self.rhs[i] for i, b in enumerate(self.basis) if b >= self.first_artificial), ZERO)
        if infeasibility > 0:
            return False
        # drive zero-valued artificials out of the basis, dropping redundant rows
        i = 0
        while i < len(self.basis):
            if self.basis[i] >= self.first_artificial:
                col = next((j for j in range(self.first_artificial) if self.matrix[i][j] != 0), None)
                if col is None:
                    del self.matrix[i]
                    del self.rhs[i]
                    del self.basis[i]
                    continue
                self._pivot(i, col)
            i += 1
        self.allowed = self.first_artificial
        return True

    def phase_two(self, structural_cost: List[Fraction]) -> bool:
        cost = structural_cost + [ZERO] * (self.width - self.structural)
        return self._optimize(cost)

    def solution(self) -> List[Fraction]:
        values = [ZERO] * self.structural
        for i, b in enumerate(self.basis):
            if b < self.structural:
                values[b] = self.rhs[i]
        return values
