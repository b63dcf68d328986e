"""
Expectation transformers: the symbolic transformer over cost expressions, the
fuel-bounded semantic transformer over store functions, and cost-expression simplification.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Callable, Dict, List, Mapping, Optional, Tuple

from app.core.models import CostMode, StrategyKind
from app.core.syntax import (
    ONE, TRUE, ZERO, Abort, And, Assign, BExp, BoolLit, Coeff, Command, Compare, CostAdd,
    CostConst, CostExpr, CostMax, CostMul, If, IntAdd, IntExpr, IntMul, IntSub, Iverson, Nat,
    NdChoice, Not, Num, Or, PChoice, Seq, Skip, Store, Tick, Var, While, compare_values,
    eval_bexp, eval_cost, eval_dist,
)

if TYPE_CHECKING:
    from app.core.analysis import LoopAnalyzer
    from app.core.semantics import Configuration

logger = logging.getLogger(__name__)

Expectation = Callable[[Store], Fraction]


@dataclass(frozen=True)
class LoopStrategy:
    """How a while loop is bounded: decomposition, an upper-invariant template, or unrolling."""
    kind: StrategyKind
    degree: int = 1
    fuel: int = 16

    def __post_init__(self):
        if self.kind == StrategyKind.UNROLL and self.fuel < 1:
            raise ValueError("unroll fuel must be at least 1")
        if self.degree not in (1, 2):
            raise ValueError("template degree must be 1 or 2")

    def __str__(self) -> str:
        if self.kind == StrategyKind.UNROLL:
            return f"unroll({self.fuel})"
        return f"{self.kind.value}(degree {self.degree})"


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------

def subst_int(expr: IntExpr, var: str, value: IntExpr) -> IntExpr:
    match expr:
        case Var(name):
            return value if name == var else expr
        case Num():
            return expr
        case IntAdd(left, right):
            return IntAdd(subst_int(left, var, value), subst_int(right, var, value))
        case IntSub(left, right):
            return IntSub(subst_int(left, var, value), subst_int(right, var, value))
        case IntMul(left, right):
            return IntMul(subst_int(left, var, value), subst_int(right, var, value))
    raise TypeError(f"not an integer expression: {expr!r}")


def subst_bexp(expr: BExp, var: str, value: IntExpr) -> BExp:
    match expr:
        case BoolLit():
            return expr
        case Compare(op, left, right):
            return Compare(op, subst_int(left, var, value), subst_int(right, var, value))
        case And(left, right):
            return And(subst_bexp(left, var, value), subst_bexp(right, var, value))
        case Or(left, right):
            return Or(subst_bexp(left, var, value), subst_bexp(right, var, value))
        case Not(operand):
            return Not(subst_bexp(operand, var, value))
    raise TypeError(f"not a Boolean expression: {expr!r}")


def subst(f: CostExpr, var: str, value: IntExpr) -> CostExpr:
    """Replace ``var`` by ``value`` inside nat arguments and Iverson guards."""
    match f:
        case CostConst() | Coeff():
            return f
        case Nat(arg):
            return Nat(subst_int(arg, var, value))
        case Iverson(cond, body):
            return Iverson(subst_bexp(cond, var, value), subst(body, var, value))
        case CostAdd(left, right):
            return CostAdd(subst(left, var, value), subst(right, var, value))
        case CostMul(left, right):
            return CostMul(subst(left, var, value), subst(right, var, value))
        case CostMax(left, right):
            return CostMax(subst(left, var, value), subst(right, var, value))
    raise TypeError(f"not a cost expression: {f!r}")


def instantiate_coefficients(f: CostExpr, assignment: Mapping[str, Fraction]) -> CostExpr:
    match f:
        case Coeff(name):
            return CostConst(Fraction(assignment[name])) if name in assignment else f
        case CostConst() | Nat():
            return f
        case Iverson(cond, body):
            return Iverson(cond, instantiate_coefficients(body, assignment))
        case CostAdd(left, right):
            return CostAdd(instantiate_coefficients(left, assignment), instantiate_coefficients(right, assignment))
        case CostMul(left, right):
            return CostMul(instantiate_coefficients(left, assignment), instantiate_coefficients(right, assignment))
        case CostMax(left, right):
            return CostMax(instantiate_coefficients(left, assignment), instantiate_coefficients(right, assignment))
    raise TypeError(f"not a cost expression: {f!r}")


# ---------------------------------------------------------------------------
# Simplification
# ---------------------------------------------------------------------------

def simplify_int(expr: IntExpr) -> IntExpr:
    match expr:
        case Var() | Num():
            return expr
        case IntAdd(left, right):
            left, right = simplify_int(left), simplify_int(right)
            if isinstance(left, Num) and isinstance(right, Num):
                return Num(left.value + right.value)
            if left == Num(0):
                return right
            if right == Num(0):
                return left
            return IntAdd(left, right)
        case IntSub(left, right):
            left, right = simplify_int(left), simplify_int(right)
            if isinstance(left, Num) and isinstance(right, Num):
                return Num(left.value - right.value)
            if right == Num(0):
                return left
            return IntSub(left, right)
        case IntMul(left, right):
            left, right = simplify_int(left), simplify_int(right)
            if isinstance(left, Num) and isinstance(right, Num):
                return Num(left.value * right.value)
            if Num(0) in (left, right):
                return Num(0)
            if left == Num(1):
                return right
            if right == Num(1):
                return left
            return IntMul(left, right)
    raise TypeError(f"not an integer expression: {expr!r}")


def simplify_bexp(expr: BExp) -> BExp:
    match expr:
        case BoolLit():
            return expr
        case Compare(op, left, right):
            left, right = simplify_int(left), simplify_int(right)
            if isinstance(left, Num) and isinstance(right, Num):
                return BoolLit(compare_values(op, left.value, right.value))
            return Compare(op, left, right)
        case And(left, right):
            left, right = simplify_bexp(left), simplify_bexp(right)
            if BoolLit(False) in (left, right):
                return BoolLit(False)
            if left == TRUE:
                return right
            if right == TRUE or left == right:
                return left
            return And(left, right)
        case Or(left, right):
            left, right = simplify_bexp(left), simplify_bexp(right)
            if TRUE in (left, right):
                return TRUE
            if left == BoolLit(False):
                return right
            if right == BoolLit(False) or left == right:
                return left
            return Or(left, right)
        case Not(operand):
            operand = simplify_bexp(operand)
            if isinstance(operand, BoolLit):
                return BoolLit(not operand.value)
            if isinstance(operand, Not):
                return operand.operand
            return Not(operand)
    raise TypeError(f"not a Boolean expression: {expr!r}")


def _split_scalar(expr: CostExpr) -> Tuple[Fraction, Optional[CostExpr]]:
    """Write a simplified term as ``scalar * rest``; ``rest`` is None for constants."""
    if isinstance(expr, CostConst):
        return expr.value, None
    if isinstance(expr, CostMul) and isinstance(expr.left, CostConst):
        return expr.left.value, expr.right
    return Fraction(1), expr


def _scaled(scalar: Fraction, rest: Optional[CostExpr]) -> CostExpr:
    if rest is None:
        return CostConst(scalar)
    if scalar == 1:
        return rest
    return CostMul(CostConst(scalar), rest)


def _flatten(expr: CostExpr, kind) -> List[CostExpr]:
    if isinstance(expr, kind):
        return _flatten(expr.left, kind) + _flatten(expr.right, kind)
    return [expr]


def _rebuild(items: List[CostExpr], kind) -> CostExpr:
    result = items[0]
    for item in items[1:]:
        result = kind(result, item)
    return result


def _simplify_sum(left: CostExpr, right: CostExpr) -> CostExpr:
    order: List[Optional[CostExpr]] = []
    scalars: Dict[Optional[CostExpr], Fraction] = {}
    for term in _flatten(left, CostAdd) + _flatten(right, CostAdd):
        scalar, rest = _split_scalar(term)
        if scalar == 0:
            continue
        if rest not in scalars:
            order.append(rest)
            scalars[rest] = Fraction(0)
        scalars[rest] += scalar
    terms = [_scaled(scalars[rest], rest) for rest in order if scalars[rest] != 0]
    return _rebuild(terms, CostAdd) if terms else ZERO


def _simplify_product(left: CostExpr, right: CostExpr) -> CostExpr:
    scalar = Fraction(1)
    factors: List[CostExpr] = []
    for factor in _flatten(left, CostMul) + _flatten(right, CostMul):
        if isinstance(factor, CostConst):
            scalar *= factor.value
        else:
            factors.append(factor)
    if scalar == 0:
        return ZERO
    if not factors:
        return CostConst(scalar)
    if len(factors) == 1 and isinstance(factors[0], CostAdd) and scalar != 1:
        # distribute scalars over sums so that like terms can merge
        return simplify(_rebuild([CostMul(CostConst(scalar), t) for t in _flatten(factors[0], CostAdd)], CostAdd))
    return _scaled(scalar, _rebuild(factors, CostMul))


def _simplify_max(left: CostExpr, right: CostExpr) -> CostExpr:
    items: List[CostExpr] = []
    constant: Optional[Fraction] = None
    for item in _flatten(left, CostMax) + _flatten(right, CostMax):
        if isinstance(item, CostConst):
            constant = item.value if constant is None else max(constant, item.value)
        elif item not in items:
            items.append(item)
    if constant is not None and (constant > 0 or not items):
        items.append(CostConst(constant))
    return _rebuild(items, CostMax)


def simplify(c: CostExpr) -> CostExpr:
    """
    Semantics-preserving rewriting: constant folding, nat of constants, units for + and *,
    Iverson brackets with literal guards, flattening of + and max, merging of like terms.
    """
    match c:
        case CostConst() | Coeff():
            return c
        case Nat(arg):
            arg = simplify_int(arg)
            if isinstance(arg, Num):
                return CostConst(Fraction(max(0, arg.value)))
            return Nat(arg)
        case Iverson(cond, body):
            cond, body = simplify_bexp(cond), simplify(body)
            if cond == TRUE:
                return body
            if cond == BoolLit(False) or body == ZERO:
                return ZERO
            if isinstance(body, Iverson) and body.cond == cond:
                return body
            return Iverson(cond, body)
        case CostAdd(left, right):
            return _simplify_sum(simplify(left), simplify(right))
        case CostMul(left, right):
            return _simplify_product(simplify(left), simplify(right))
        case CostMax(left, right):
            return _simplify_max(simplify(left), simplify(right))
    raise TypeError(f"not a cost expression: {c!r}")


def guard_and(inv: BExp, guard: BExp) -> BExp:
    return simplify_bexp(And(inv, guard))


def guard_and_not(inv: BExp, guard: BExp) -> BExp:
    return simplify_bexp(And(inv, Not(guard)))


# ---------------------------------------------------------------------------
# Symbolic transformer
# ---------------------------------------------------------------------------

def et_symbolic(
    mode: CostMode,
    cmd: Command,
    f: CostExpr,
    strategy: Optional[LoopStrategy] = None,
    analyzer: Optional["LoopAnalyzer"] = None,
) -> CostExpr:
    """
    Symbolic expectation transformer over cost expressions.

    Args:
        mode: ``CostMode.COST`` counts ticks, ``CostMode.VALUE`` ignores them
        cmd: Command to transform through
        f: Post-expectation
        strategy: Restrict loop analysis to a single strategy
        analyzer: Loop analyzer session; a fresh one is created when omitted

    Returns:
        CostExpr: Upper bound on the transformer (exact for loop-free commands)

    Raises:
        LoopAnalysisError: when a loop cannot be bounded
    """
    if analyzer is None:
        from app.core.analysis import LoopAnalyzer
        analyzer = LoopAnalyzer(strategies=[strategy] if strategy else None)
    return simplify(_et(mode, cmd, f, analyzer))


def _et(mode: CostMode, cmd: Command, f: CostExpr, analyzer: "LoopAnalyzer") -> CostExpr:
    match cmd:
        case Skip():
            return f
        case Abort():
            return ZERO
        case Tick(rate):
            return simplify(CostAdd(CostConst(rate), f)) if mode == CostMode.COST else f
        case Assign(var, dist):
            terms = [CostMul(CostConst(p), subst(f, var, a)) for p, a in dist.branches]
            return simplify(_rebuild(terms, CostAdd))
        case If(inv, guard, then, orelse):
            return simplify(CostAdd(
                Iverson(guard_and(inv, guard), _et(mode, then, f, analyzer)),
                Iverson(guard_and_not(inv, guard), _et(mode, orelse, f, analyzer)),
            ))
        case NdChoice(left, right):
            return simplify(CostMax(_et(mode, left, f, analyzer), _et(mode, right, f, analyzer)))
        case PChoice(prob, left, right):
            return simplify(CostAdd(
                CostMul(CostConst(prob), _et(mode, left, f, analyzer)),
                CostMul(CostConst(1 - prob), _et(mode, right, f, analyzer)),
            ))
        case Seq(first, second):
            return _et(mode, first, _et(mode, second, f, analyzer), analyzer)
        case While():
            return analyzer.bound(mode, cmd, simplify(f))
    raise TypeError(f"not a command: {cmd!r}")


def unroll_symbolic(mode: CostMode, loop: While, f: CostExpr, fuel: int, analyzer: "LoopAnalyzer") -> CostExpr:
    """``fuel`` Kleene iterations from 0; a lower approximation, never a certified bound."""
    approximation: CostExpr = ZERO
    for _ in range(fuel):
        approximation = simplify(CostAdd(
            Iverson(guard_and(loop.inv, loop.guard), _et(mode, loop.body, approximation, analyzer)),
            Iverson(guard_and_not(loop.inv, loop.guard), f),
        ))
    return approximation


# ---------------------------------------------------------------------------
# Semantic transformer
# ---------------------------------------------------------------------------

def _memo(function: Expectation) -> Expectation:
    cache: Dict[Store, Fraction] = {}

    def wrapped(store: Store) -> Fraction:
        value = cache.get(store)
        if value is None:
            value = function(store)
            cache[store] = value
        return value

    return wrapped


def et_semantic(mode: CostMode, cmd: Command, f: Expectation, fuel: int) -> Expectation:
    """
    Semantic expectation transformer with loops approximated by ``fuel`` Kleene iterations.

    Args:
        mode: Cost or value mode
        cmd: Command
        f: Post-expectation as a function of the store
        fuel: Number of fixpoint iterations per loop, starting from the zero expectation

    Returns:
        Expectation: Pre-expectation; exact for loop-free commands, monotone in ``fuel``
    """
    if fuel < 1:
        raise ValueError("fuel must be positive")
    match cmd:
        case Skip():
            return f
        case Abort():
            return lambda store: Fraction(0)
        case Tick(rate):
            if mode == CostMode.COST:
                return lambda store: rate + f(store)
            return f
        case Assign(var, dist):
            def assign(store: Store) -> Fraction:
                return sum((p * f(store.assign(var, v)) for v, p in eval_dist(dist, store).items()), Fraction(0))
            return assign
        case If(inv, guard, then, orelse):
            then_t = et_semantic(mode, then, f, fuel)
            else_t = et_semantic(mode, orelse, f, fuel)

            def branch(store: Store) -> Fraction:
                if not eval_bexp(inv, store):
                    return Fraction(0)
                return then_t(store) if eval_bexp(guard, store) else else_t(store)
            return branch
        case NdChoice(left, right):
            left_t, right_t = et_semantic(mode, left, f, fuel), et_semantic(mode, right, f, fuel)
            return lambda store: max(left_t(store), right_t(store))
        case PChoice(prob, left, right):
            left_t, right_t = et_semantic(mode, left, f, fuel), et_semantic(mode, right, f, fuel)
            return lambda store: prob * left_t(store) + (1 - prob) * right_t(store)
        case Seq(first, second):
            return et_semantic(mode, first, _memo(et_semantic(mode, second, f, fuel)), fuel)
        case While(inv, guard, body):
            iterate: Expectation = lambda store: Fraction(0)
            for _ in range(fuel):
                inner = et_semantic(mode, body, iterate, fuel)

                def step(store: Store, inner=inner) -> Fraction:
                    if not eval_bexp(inv, store):
                        return Fraction(0)
                    return inner(store) if eval_bexp(guard, store) else f(store)
                iterate = _memo(step)
            return iterate
    raise TypeError(f"not a command: {cmd!r}")


def expectation_of(f: CostExpr) -> Expectation:
    return lambda store: eval_cost(f, store)


def et_configuration(mode: CostMode, config: "Configuration", f: Expectation, fuel: int = 16) -> Fraction:
    """The transformer lifted to configurations: running, halted and aborted."""
    from app.core.semantics import Halted, Running
    if isinstance(config, Running):
        return et_semantic(mode, config.cmd, f, fuel)(config.store)
    if isinstance(config, Halted):
        return f(config.store)
    return Fraction(0)
