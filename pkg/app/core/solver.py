"""
Reduction of premise-conditioned cost inequalities to linear constraints over
nonnegative template coefficients, and their exact solution.

Pipeline: ``eliminate_cases`` (nat / Iverson / max case analysis) produces
``PolyInequality`` values, ``farkas_reduce`` turns each into affine constraints
over coefficient symbols and fresh nonnegative multipliers, and
``solve_linear`` solves the resulting ``LinearSystem`` with the exact simplex.
"""

import itertools
import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache, reduce
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import sympy

from app.core.exceptions import SolverInfeasibleError, UnsupportedCaseError
from app.core.linear_program import LinearProgram, LPStatus
from app.core.polynomials import (
    coeff_name, coeff_symbol, coefficient_symbols_of, int_to_sympy, is_coeff_symbol,
    program_symbols, to_fraction, var_symbol,
)
from app.core.syntax import (
    And, BExp, BoolLit, Coeff, Compare, CostAdd, CostConst, CostExpr, CostMax, CostMul,
    Iverson, Nat, Not, Or, Store, eval_bexp, eval_cost, free_vars, print_bexp, print_cost,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Linear atoms and DNF
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearAtom:
    """``Σ coeffs·vars + constant >= 0`` with integer coefficients, gcd-normalised."""
    coeffs: Tuple[Tuple[str, int], ...]
    constant: int

    @classmethod
    def from_sympy(cls, expr: sympy.Expr) -> "LinearAtom":
        """Normalise ``expr >= 0``; raises UnsupportedCaseError for nonlinear atoms."""
        expr = sympy.expand(expr)
        if coefficient_symbols_of(expr):
            raise UnsupportedCaseError(f"unsupported: comparison mentions template coefficients: {expr} >= 0")
        symbols = program_symbols(expr)
        if not symbols:
            return cls((), 0 if expr >= 0 else -1)
        poly = sympy.Poly(expr, *symbols)
        if poly.total_degree() > 1:
            raise UnsupportedCaseError(f"unsupported: nonlinear comparison {expr} >= 0")
        raw: Dict[str, Fraction] = {}
        constant = Fraction(0)
        for exponents, coeff in poly.terms():
            value = to_fraction(coeff)
            if any(exponents):
                raw[symbols[exponents.index(1)].name] = value
            else:
                constant = value
        scale = math.lcm(*(v.denominator for v in list(raw.values()) + [constant]))
        ints = {name: int(v * scale) for name, v in raw.items()}
        constant = constant * scale
        divisor = reduce(math.gcd, (abs(v) for v in ints.values()))
        coeffs = tuple(sorted((name, v // divisor) for name, v in ints.items()))
        return cls(coeffs, math.floor(constant / divisor))

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    @property
    def is_tautology(self) -> bool:
        return self.is_constant and self.constant >= 0

    @property
    def is_contradiction(self) -> bool:
        return self.is_constant and self.constant < 0

    def negated(self) -> "LinearAtom":
        """Integer negation: not (e >= 0) is -e - 1 >= 0."""
        return LinearAtom(tuple((name, -v) for name, v in self.coeffs), -self.constant - 1)

    @property
    def expr(self) -> sympy.Expr:
        return sum((v * var_symbol(name) for name, v in self.coeffs), sympy.Integer(self.constant))

    def value(self, store: Store) -> int:
        return sum(v * store.lookup(name) for name, v in self.coeffs) + self.constant

    def holds(self, store: Store) -> bool:
        return self.value(store) >= 0

    def __str__(self) -> str:
        return f"{sympy.sstr(self.expr)} >= 0"


Conjunction = Tuple[LinearAtom, ...]


def _compare_atoms(op: str, left, right) -> List[List[LinearAtom]]:
    a, b = int_to_sympy(left), int_to_sympy(right)
    if op == "<":
        return [[LinearAtom.from_sympy(b - a - 1)]]
    if op == "<=":
        return [[LinearAtom.from_sympy(b - a)]]
    if op == ">":
        return [[LinearAtom.from_sympy(a - b - 1)]]
    if op == ">=":
        return [[LinearAtom.from_sympy(a - b)]]
    if op == "=":
        return [[LinearAtom.from_sympy(a - b), LinearAtom.from_sympy(b - a)]]
    if op == "!=":
        return [[LinearAtom.from_sympy(a - b - 1)], [LinearAtom.from_sympy(b - a - 1)]]
    raise ValueError(f"unknown comparison operator: {op}")


NEGATED_OPERATOR = {"<": ">=", "<=": ">", "=": "!=", "!=": "=", ">=": "<", ">": "<="}

FEASIBILITY_CACHE_SIZE = 4096


def _dnf(expr: BExp, positive: bool) -> List[List[LinearAtom]]:
    match expr:
        case BoolLit(value):
            return [[]] if value == positive else []
        case Not(operand):
            return _dnf(operand, not positive)
        case Compare(op, left, right):
            return _compare_atoms(op if positive else NEGATED_OPERATOR[op], left, right)
        case And(left, right) | Or(left, right):
            conjunctive = isinstance(expr, And) == positive
            lcases, rcases = _dnf(left, positive), _dnf(right, positive)
            if conjunctive:
                return [l + r for l in lcases for r in rcases]
            return lcases + rcases
    raise TypeError(f"not a Boolean expression: {expr!r}")


def _clean(atoms: Iterable[LinearAtom]) -> Optional[Conjunction]:
    result: List[LinearAtom] = []
    for atom in atoms:
        if atom.is_contradiction:
            return None
        if atom.is_tautology or atom in result:
            continue
        result.append(atom)
    return tuple(result)


def conjunctive_cases(expr: BExp) -> List[Conjunction]:
    """
    Disjunctive normal form of a Boolean expression over normalised linear atoms.

    Returns:
        List[Conjunction]: Cases whose union is the expression; trivially false
        cases are dropped and trivially true atoms removed.

    Raises:
        UnsupportedCaseError: when a comparison is nonlinear
    """
    cases: List[Conjunction] = []
    for raw in _dnf(expr, True):
        cleaned = _clean(raw)
        if cleaned is not None and cleaned not in cases:
            cases.append(cleaned)
    return cases


def is_feasible(atoms: Iterable[LinearAtom]) -> bool:
    """Exact rational feasibility of a conjunction (sound for pruning integer cases)."""
    atoms = [a for a in atoms if not a.is_tautology]
    if any(a.is_contradiction for a in atoms):
        return False
    if not atoms:
        return True
    return _feasible_conjunction(frozenset(atoms))


@lru_cache(maxsize=FEASIBILITY_CACHE_SIZE)
def _feasible_conjunction(atoms: FrozenSet[LinearAtom]) -> bool:
    program = LinearProgram()
    for atom in atoms:
        coeffs: Dict[str, Fraction] = {}
        for name, v in atom.coeffs:
            coeffs[f"{name}+"] = Fraction(v)
            coeffs[f"{name}-"] = Fraction(-v)
        program.add_constraint(coeffs, ">=", -atom.constant)
    return program.is_feasible()


def entails(atoms: Sequence[LinearAtom], atom: LinearAtom) -> bool:
    return not is_feasible(list(atoms) + [atom.negated()])


# ---------------------------------------------------------------------------
# Constraints and polynomial inequalities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constraint:
    """``premise |= lhs <= rhs`` over all stores."""
    premise: BExp
    lhs: CostExpr
    rhs: CostExpr
    label: str = ""

    def holds_at(self, store: Store, coeffs: Optional[Mapping[str, Fraction]] = None) -> bool:
        if not eval_bexp(self.premise, store):
            return True
        return eval_cost(self.lhs, store, coeffs) <= eval_cost(self.rhs, store, coeffs)

    def variables(self) -> List[str]:
        return sorted(free_vars(self.premise) | free_vars(self.lhs) | free_vars(self.rhs))

    def __str__(self) -> str:
        return f"{print_bexp(self.premise)} |= {print_cost(self.lhs)} <= {print_cost(self.rhs)}"


@dataclass(frozen=True)
class PolyInequality:
    """``premise`` implies ``difference >= 0``; the difference is affine in the coefficients."""
    premise: Conjunction
    difference: sympy.Expr
    label: str = ""

    @cached_property
    def _terms(self) -> List[Tuple[Tuple[Tuple[str, bool, int], ...], Fraction]]:
        symbols = sorted(self.difference.free_symbols, key=lambda s: s.name)
        if not symbols:
            return [((), to_fraction(self.difference))]
        poly = sympy.Poly(self.difference, *symbols)
        terms = []
        for exponents, coeff in poly.terms():
            factors = tuple((coeff_name(s) if is_coeff_symbol(s) else s.name, is_coeff_symbol(s), e)
                            for s, e in zip(symbols, exponents) if e)
            terms.append((factors, to_fraction(coeff)))
        return terms

    def value_at(self, store: Store, coeffs: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for factors, coeff in self._terms:
            value = coeff
            for name, is_coeff, exponent in factors:
                base = Fraction(coeffs[name]) if is_coeff else store.lookup(name)
                value *= base ** exponent
            total += value
        return total

    def holds_at(self, store: Store, coeffs: Optional[Mapping[str, Fraction]] = None) -> bool:
        if not all(atom.holds(store) for atom in self.premise):
            return True
        return self.value_at(store, coeffs or {}) >= 0

    def __str__(self) -> str:
        premise = " and ".join(str(a) for a in self.premise) or "true"
        return f"{premise} |= {sympy.sstr(self.difference)} >= 0"


def _check_affine(difference: sympy.Expr) -> None:
    coefficient_syms = coefficient_symbols_of(difference)
    if not coefficient_syms:
        return
    poly = sympy.Poly(difference, *coefficient_syms)
    if poly.total_degree() > 1:
        raise UnsupportedCaseError(f"unsupported: inequality not affine in template coefficients: {difference}")


class _CaseEliminator:
    """Case analysis over one constraint: Iverson guards and nats first, then maxima."""

    def __init__(self, constraint: Constraint):
        self.constraint = constraint
        self.results: List[PolyInequality] = []

    def run(self) -> List[PolyInequality]:
        for case in conjunctive_cases(self.constraint.premise):
            if is_feasible(case):
                self._expand(case, {})
        unique: List[PolyInequality] = []
        for item in self.results:
            if item not in unique:
                unique.append(item)
        return unique

    # decision points ------------------------------------------------------

    def _pending_split(self, expr: CostExpr, decisions: Dict) -> Optional[CostExpr]:
        match expr:
            case Nat():
                return None if ("nat", expr) in decisions else expr
            case Iverson(cond, body):
                key = ("iv", cond)
                if key not in decisions:
                    return expr
                return self._pending_split(body, decisions) if decisions[key] else None
            case CostAdd(left, right) | CostMul(left, right) | CostMax(left, right):
                return self._pending_split(left, decisions) or self._pending_split(right, decisions)
        return None

    def _pending_max(self, expr: CostExpr, side: str, decisions: Dict) -> Optional[CostMax]:
        match expr:
            case CostMax(left, right):
                choice = decisions.get(("max", side, expr))
                if choice is None:
                    inner = self._pending_max(left, side, decisions) or self._pending_max(right, side, decisions)
                    return inner or expr
                return self._pending_max(left if choice == "left" else right, side, decisions)
            case Iverson(cond, body):
                return self._pending_max(body, side, decisions) if decisions.get(("iv", cond)) else None
            case CostAdd(left, right) | CostMul(left, right):
                return self._pending_max(left, side, decisions) or self._pending_max(right, side, decisions)
        return None

    # conversion -----------------------------------------------------------

    def _to_sympy(self, expr: CostExpr, side: str, decisions: Dict) -> sympy.Expr:
        match expr:
            case CostConst(value):
                return sympy.Rational(value.numerator, value.denominator)
            case Coeff(name):
                return coeff_symbol(name)
            case Nat(arg):
                return int_to_sympy(arg) if decisions[("nat", expr)] == "pos" else sympy.Integer(0)
            case Iverson(cond, body):
                return self._to_sympy(body, side, decisions) if decisions[("iv", cond)] else sympy.Integer(0)
            case CostAdd(left, right):
                return self._to_sympy(left, side, decisions) + self._to_sympy(right, side, decisions)
            case CostMul(left, right):
                return self._to_sympy(left, side, decisions) * self._to_sympy(right, side, decisions)
            case CostMax(left, right):
                chosen = left if decisions[("max", side, expr)] == "left" else right
                return self._to_sympy(chosen, side, decisions)
        raise TypeError(f"not a cost expression: {expr!r}")

    # recursion ------------------------------------------------------------

    def _branch(self, atoms: Conjunction, extra: Iterable[LinearAtom], decisions: Dict, key, value) -> None:
        extended = _clean(list(atoms) + list(extra))
        if extended is None or not is_feasible(extended):
            return
        self._expand(extended, {**decisions, key: value})

    def _expand(self, atoms: Conjunction, decisions: Dict) -> None:
        lhs, rhs = self.constraint.lhs, self.constraint.rhs
        node = self._pending_split(lhs, decisions) or self._pending_split(rhs, decisions)
        if isinstance(node, Iverson):
            key = ("iv", node.cond)
            for value, cond in ((True, node.cond), (False, Not(node.cond))):
                for case in conjunctive_cases(cond):
                    self._branch(atoms, case, decisions, key, value)
            return
        if isinstance(node, Nat):
            key = ("nat", node)
            atom = LinearAtom.from_sympy(int_to_sympy(node.arg))
            if atom.is_constant:
                self._expand(atoms, {**decisions, key: "pos" if atom.is_tautology else "zero"})
            elif entails(atoms, atom):
                self._expand(atoms, {**decisions, key: "pos"})
            elif not is_feasible(list(atoms) + [atom]):
                self._expand(atoms, {**decisions, key: "zero"})
            else:
                self._branch(atoms, [atom], decisions, key, "pos")
                self._branch(atoms, [atom.negated()], decisions, key, "zero")
            return

        node = self._pending_max(lhs, "lhs", decisions)
        if node is not None:
            key = ("max", "lhs", node)
            self._expand(atoms, {**decisions, key: "left"})
            self._expand(atoms, {**decisions, key: "right"})
            return
        node = self._pending_max(rhs, "rhs", decisions)
        if node is not None:
            key = ("max", "rhs", node)
            diff = sympy.expand(self._to_sympy(node.left, "rhs", decisions)
                                - self._to_sympy(node.right, "rhs", decisions))
            if coefficient_symbols_of(diff):
                raise UnsupportedCaseError(f"unsupported: maximum on the right-hand side depends on coefficients: {diff}")
            self._branch(atoms, [LinearAtom.from_sympy(diff)], decisions, key, "left")
            self._branch(atoms, [LinearAtom.from_sympy(-diff)], decisions, key, "right")
            return

        difference = sympy.expand(self._to_sympy(rhs, "rhs", decisions) - self._to_sympy(lhs, "lhs", decisions))
        _check_affine(difference)
        self.results.append(PolyInequality(atoms, difference, self.constraint.label))


def eliminate_cases(constraint: Constraint) -> List[PolyInequality]:
    """
    Reduce a constraint to polynomial inequalities by case elimination and distinction.

    Args:
        constraint: Premise-conditioned inequality over cost expressions

    Returns:
        List[PolyInequality]: Inequalities that jointly hold iff the constraint holds

    Raises:
        UnsupportedCaseError: for nonlinear premise atoms, nat arguments or guards
    """
    results = _CaseEliminator(constraint).run()
    logger.debug(f"Constraint {constraint.label or constraint} produced {len(results)} cases")
    return results


# ---------------------------------------------------------------------------
# Affine constraints, certificates and linear systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineConstraint:
    """``Σ coeffs·symbols + constant  relation  0`` with relation ``>=`` or ``=``."""
    coeffs: Tuple[Tuple[str, Fraction], ...]
    constant: Fraction
    relation: str = ">="
    label: str = ""

    def evaluate(self, values: Mapping[str, Fraction]) -> Fraction:
        return sum((c * Fraction(values.get(name, 0)) for name, c in self.coeffs), self.constant)

    def holds(self, values: Mapping[str, Fraction]) -> bool:
        value = self.evaluate(values)
        return value == 0 if self.relation == "=" else value >= 0

    def symbols(self) -> List[str]:
        return [name for name, _ in self.coeffs]

    def __str__(self) -> str:
        terms = " ".join(f"{'+' if c >= 0 else '-'} {abs(c)} {name}" for name, c in self.coeffs)
        terms = terms.lstrip("+ ") or "0"
        constant = f" {'+' if self.constant >= 0 else '-'} {abs(self.constant)}" if self.constant else ""
        return f"{terms}{constant} {self.relation} 0"


def _affine(expr: sympy.Expr, extra: Mapping[str, Fraction], label: str, relation: str) -> AffineConstraint:
    expr = sympy.expand(expr)
    coeffs: Dict[str, Fraction] = {}
    symbols = coefficient_symbols_of(expr)
    constant = expr
    for symbol in symbols:
        c = expr.coeff(symbol)
        if c.free_symbols:
            raise UnsupportedCaseError(f"unsupported: non-affine coefficient expression {expr}")
        coeffs[coeff_name(symbol)] = to_fraction(c)
        constant = constant - c * symbol
    constant = sympy.expand(constant)
    if constant.free_symbols:
        raise UnsupportedCaseError(f"unsupported: non-affine coefficient expression {expr}")
    for name, value in extra.items():
        coeffs[name] = coeffs.get(name, Fraction(0)) + value
    items = tuple((name, value) for name, value in coeffs.items() if value != 0)
    return AffineConstraint(items, to_fraction(constant), relation, label)


def farkas_reduce(inequality: PolyInequality, prefix: str = "λ") -> List[AffineConstraint]:
    """
    Certificate-based reduction of a polynomial inequality to affine constraints.

    Degree 1 uses Farkas' lemma: the difference must equal a nonnegative combination
    of 1 and the premise atoms. Degree 2 extends the basis with pairwise products of
    premise atoms (Handelman). Multipliers are fresh nonnegative unknowns named
    ``{prefix}{k}``.

    Args:
        inequality: Premise-conditioned polynomial inequality
        prefix: Name prefix for the multiplier unknowns

    Returns:
        List[AffineConstraint]: Constraints over coefficients and multipliers

    Raises:
        UnsupportedCaseError: when the difference has degree > 2 in program variables
    """
    difference = sympy.expand(inequality.difference)
    variables = sorted(set(program_symbols(difference))
                       | {s for atom in inequality.premise for s in program_symbols(atom.expr)},
                       key=lambda s: s.name)
    label = inequality.label
    diff_vars = program_symbols(difference)
    if not diff_vars:
        return [_affine(difference, {}, label, ">=")]
    degree = sympy.Poly(difference, *diff_vars).total_degree()
    if degree > 2:
        raise UnsupportedCaseError(f"unsupported: polynomial degree {degree} exceeds 2")

    basis: List[sympy.Expr] = [sympy.Integer(1)] + [atom.expr for atom in inequality.premise]
    if degree == 2:
        atoms = [atom.expr for atom in inequality.premise]
        basis += [sympy.expand(a * b) for a, b in itertools.combinations_with_replacement(atoms, 2)]
    multipliers = [f"{prefix}{k}" for k in range(len(basis))]

    target = sympy.Poly(difference, *variables)
    polys = [sympy.Poly(b, *variables) for b in basis]
    monomials = sorted(set(target.monoms()).union(*(set(p.monoms()) for p in polys)), reverse=True)
    constraints = []
    for monomial in monomials:
        extra = {}
        for name, poly in zip(multipliers, polys):
            c = poly.coeff_monomial(monomial)
            if c != 0:
                extra[name] = -to_fraction(c)
        constraints.append(_affine(target.coeff_monomial(monomial), extra, label, "="))
    return constraints


@dataclass
class LinearSystem:
    """
    Affine constraints over nonnegative unknowns.

    ``coefficients`` are the template symbols (the reported solution);
    every other symbol is an auxiliary multiplier. The default objective
    minimises the coefficient sum.
    """
    constraints: List[AffineConstraint] = field(default_factory=list)
    coefficients: List[str] = field(default_factory=list)
    objective: Optional[Dict[str, Fraction]] = None
    blocks: int = 0

    def add(self, constraint: AffineConstraint) -> None:
        self.constraints.append(constraint)

    def add_inequalities(self, inequalities: Iterable[PolyInequality]) -> None:
        for inequality in inequalities:
            for constraint in farkas_reduce(inequality, prefix=f"λ{self.blocks}_"):
                self.add(constraint)
            self.blocks += 1

    def symbols(self) -> List[str]:
        seen = list(self.coefficients)
        for constraint in self.constraints:
            for name in constraint.symbols():
                if name not in seen:
                    seen.append(name)
        return seen

    def effective_objective(self) -> Dict[str, Fraction]:
        if self.objective is not None:
            return dict(self.objective)
        return {name: Fraction(1) for name in self.coefficients}

    def to_lp_text(self) -> str:
        """LP-format dump for inspection with external solvers."""
        objective = " + ".join(f"{c} {name}" for name, c in self.effective_objective().items()) or "0"
        lines = ["Minimize", f"  obj: {objective}", "Subject To"]
        for i, constraint in enumerate(self.constraints):
            relation = "=" if constraint.relation == "=" else ">="
            terms = " ".join(f"{'+' if c >= 0 else '-'} {abs(c)} {name}" for name, c in constraint.coeffs) or "0"
            lines.append(f"  c{i}: {terms} {relation} {-constraint.constant}")
        lines.append("Bounds")
        for name in self.symbols():
            lines.append(f"  {name} >= 0")
        lines.append("End")
        return "\n".join(lines)


def _program_for(system: LinearSystem) -> LinearProgram:
    program = LinearProgram(system.symbols())
    for constraint in system.constraints:
        program.add_constraint(dict(constraint.coeffs), constraint.relation, -constraint.constant)
    return program


def solve_linear(system: LinearSystem, tie_break: bool = True) -> Dict[str, Fraction]:
    """
    Solve a linear system exactly, minimising its objective.

    Args:
        system: Constraints, coefficient symbols and optional objective
        tie_break: Minimise coefficients one by one, in ``system.coefficients`` order,
            among optimal solutions

    Returns:
        Dict[str, Fraction]: Nonnegative value for every coefficient symbol

    Raises:
        SolverInfeasibleError: when no nonnegative solution exists
    """
    program = _program_for(system)
    objective = system.effective_objective()
    result = program.minimize(objective)
    if result.status == LPStatus.INFEASIBLE:
        labels = sorted({c.label for c in system.constraints if c.label})
        raise SolverInfeasibleError(f"linear system with {len(system.constraints)} constraints is infeasible", labels)
    if result.status == LPStatus.UNBOUNDED:
        raise ValueError("objective is unbounded below")
    values = result.values
    if tie_break and system.coefficients:
        program.add_constraint(objective, "=", result.objective)
        for name in system.coefficients:
            step = program.minimize({name: Fraction(1)})
            program.add_constraint({name: Fraction(1)}, "=", step.values[name])
            values = step.values
    solution = {name: values.get(name, Fraction(0)) for name in system.coefficients}
    for constraint in system.constraints:
        if not constraint.holds({**values, **solution}):
            raise AssertionError(f"solver returned an assignment violating {constraint}")
    logger.debug(f"Solved system with {len(system.constraints)} constraints: {solution}")
    return solution


# ---------------------------------------------------------------------------
# Numeric refutation
# ---------------------------------------------------------------------------

def _boundary_stores(constraint: Constraint, variables: Sequence[str]) -> List[Store]:
    stores: List[Store] = [Store({name: 0 for name in variables})]
    try:
        cases = conjunctive_cases(constraint.premise)
    except UnsupportedCaseError:
        cases = []
    for case in cases:
        for atom in case:
            for name, coeff in atom.coeffs:
                root = Fraction(-atom.constant, coeff)
                for value in (math.floor(root) - 1, math.floor(root), math.ceil(root), math.ceil(root) + 1):
                    stores.append(Store({**{v: 0 for v in variables}, name: value}))
    if len(variables) <= 3:
        for values in itertools.product(range(-2, 3), repeat=len(variables)):
            stores.append(Store(dict(zip(variables, values))))
    unique: List[Store] = []
    seen: Set[Store] = set()
    for store in stores:
        if store not in seen:
            seen.add(store)
            unique.append(store)
    return unique


def numeric_refute(
    constraint: Constraint,
    assignment: Optional[Mapping[str, Fraction]] = None,
    samples: int = 10000,
    seed: int = 0,
    low: int = -50,
    high: int = 50,
) -> Optional[Store]:
    """
    Search for a store violating a constraint under a coefficient assignment.

    Boundary stores derived from the premise atoms are tried first, then
    ``samples`` pseudo-random stores with values in ``[low, high]``.

    Returns:
        Optional[Store]: The first counterexample found, or None when every sample passes
    """
    coeffs = assignment or {}
    variables = constraint.variables()
    for store in _boundary_stores(constraint, variables):
        if not constraint.holds_at(store, coeffs):
            return store
    rng = random.Random(seed)
    for _ in range(samples if variables else 0):
        store = Store({name: rng.randint(low, high) for name in variables})
        if not constraint.holds_at(store, coeffs):
            return store
    return None
