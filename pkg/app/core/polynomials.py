"""
Bridges between syntax trees and sympy polynomials, and polynomials over norm vectors.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import sympy

from app.core.syntax import (
    CostConst, CostExpr, IntAdd, IntExpr, IntMul, IntSub, Nat, Num, Var, ZERO,
    cost_product, cost_sum,
)

COEFF_PREFIX = "?"


def var_symbol(name: str) -> sympy.Symbol:
    return sympy.Symbol(name)


def coeff_symbol(name: str) -> sympy.Symbol:
    return sympy.Symbol(COEFF_PREFIX + name)


def is_coeff_symbol(symbol: sympy.Symbol) -> bool:
    return symbol.name.startswith(COEFF_PREFIX)


def coeff_name(symbol: sympy.Symbol) -> str:
    return symbol.name[len(COEFF_PREFIX):]


def program_symbols(expr: sympy.Expr) -> List[sympy.Symbol]:
    return sorted((s for s in expr.free_symbols if not is_coeff_symbol(s)), key=lambda s: s.name)


def coefficient_symbols_of(expr: sympy.Expr) -> List[sympy.Symbol]:
    return sorted((s for s in expr.free_symbols if is_coeff_symbol(s)), key=lambda s: s.name)


def to_fraction(value) -> Fraction:
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


def int_to_sympy(expr: IntExpr) -> sympy.Expr:
    match expr:
        case Var(name):
            return var_symbol(name)
        case Num(value):
            return sympy.Integer(value)
        case IntAdd(left, right):
            return int_to_sympy(left) + int_to_sympy(right)
        case IntSub(left, right):
            return int_to_sympy(left) - int_to_sympy(right)
        case IntMul(left, right):
            return int_to_sympy(left) * int_to_sympy(right)
    raise TypeError(f"not an integer expression: {expr!r}")


def _monomial(symbols: Sequence[sympy.Symbol], exponents: Sequence[int]) -> IntExpr:
    factors: List[IntExpr] = []
    for symbol, exponent in zip(symbols, exponents):
        factors.extend([Var(symbol.name)] * exponent)
    return reduce(IntMul, factors[1:], factors[0])


def sympy_to_int(expr: sympy.Expr) -> IntExpr:
    """
    Rebuild an integer expression from an integer-coefficient polynomial.

    Positive terms come first (variables in name order, then the constant),
    negative terms are subtracted afterwards, e.g. ``1 - x`` or ``x + 1 - y``.
    """
    expr = sympy.expand(expr)
    symbols = program_symbols(expr)
    if not symbols:
        return Num(int(expr))
    poly = sympy.Poly(expr, *symbols)
    positive: List[IntExpr] = []
    negative: List[IntExpr] = []
    constant = 0
    for exponents, coeff in poly.terms():
        value = int(coeff)
        if not any(exponents):
            constant = value
            continue
        term = _monomial(symbols, exponents)
        if abs(value) != 1:
            term = IntMul(Num(abs(value)), term)
        (positive if value > 0 else negative).append(term)
    if constant > 0:
        positive.append(Num(constant))
    elif constant < 0:
        negative.append(Num(-constant))
    result: IntExpr = positive[0] if positive else Num(0)
    for term in positive[1:]:
        result = IntAdd(result, term)
    for term in negative:
        result = IntSub(result, term)
    return result


def canonical_int(expr: IntExpr) -> IntExpr:
    return sympy_to_int(int_to_sympy(expr))


Monomial = Tuple[int, ...]


@dataclass(frozen=True)
class NormPolynomial:
    """
    Polynomial over a vector of norm values.

    Monomials are sorted tuples of norm indices (``()`` is the constant,
    ``(0, 1)`` is n0*n1, ``(0, 0)`` is n0 squared).
    """
    terms: Tuple[Tuple[Monomial, Fraction], ...]
    arity: int

    @classmethod
    def of(cls, terms: Mapping[Monomial, Fraction], arity: int) -> "NormPolynomial":
        cleaned = tuple(sorted((tuple(sorted(m)), Fraction(c)) for m, c in terms.items() if c != 0))
        return cls(cleaned, arity)

    @property
    def degree(self) -> int:
        return max((len(m) for m, _ in self.terms), default=0)

    def evaluate(self, vector: Sequence[Fraction]) -> Fraction:
        total = Fraction(0)
        for monomial, coeff in self.terms:
            value = coeff
            for index in monomial:
                value *= vector[index]
            total += value
        return total

    def compose(self, values: Sequence[CostExpr]) -> CostExpr:
        """The cost expression obtained by substituting ``values`` for the norms."""
        if not self.terms:
            return ZERO
        summands = []
        for monomial, coeff in self.terms:
            factors = [values[i] for i in monomial]
            if coeff != 1 or not factors:
                factors.insert(0, CostConst(coeff))
            summands.append(cost_product(factors))
        return cost_sum(summands)

    def to_cost(self, norms: Sequence[IntExpr]) -> CostExpr:
        return self.compose([Nat(expr) for expr in norms])

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for monomial, coeff in self.terms:
            names = "*".join(f"n{i}" for i in monomial)
            if not names:
                parts.append(str(coeff))
            elif coeff == 1:
                parts.append(names)
            else:
                parts.append(f"{coeff}*{names}")
        return " + ".join(parts)


def norm_polynomial(terms: Iterable[Tuple[Monomial, Fraction]], arity: int) -> NormPolynomial:
    combined: Dict[Monomial, Fraction] = {}
    for monomial, coeff in terms:
        key = tuple(sorted(monomial))
        combined[key] = combined.get(key, Fraction(0)) + Fraction(coeff)
    return NormPolynomial.of(combined, arity)
