"""
Abstract syntax of pWhile programs and cost expressions, and their evaluation on stores.

All nodes are immutable values. Rationals are ``fractions.Fraction`` throughout;
integers are Python ints (arbitrary precision).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Set, Tuple, Union

from app.core.exceptions import UnboundCoefficientError


# ---------------------------------------------------------------------------
# Integer expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class IntAdd:
    left: "IntExpr"
    right: "IntExpr"


@dataclass(frozen=True)
class IntSub:
    left: "IntExpr"
    right: "IntExpr"


@dataclass(frozen=True)
class IntMul:
    left: "IntExpr"
    right: "IntExpr"


IntExpr = Union[Var, Num, IntAdd, IntSub, IntMul]


# ---------------------------------------------------------------------------
# Boolean expressions
# ---------------------------------------------------------------------------

COMPARISON_OPERATORS = ("<", "<=", "=", ">=", ">", "!=")


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Compare:
    op: str
    left: IntExpr
    right: IntExpr


@dataclass(frozen=True)
class And:
    left: "BExp"
    right: "BExp"


@dataclass(frozen=True)
class Or:
    left: "BExp"
    right: "BExp"


@dataclass(frozen=True)
class Not:
    operand: "BExp"


BExp = Union[BoolLit, Compare, And, Or, Not]

TRUE = BoolLit(True)
FALSE = BoolLit(False)


# ---------------------------------------------------------------------------
# Distributions and commands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dist:
    """Finite distribution over integer expressions; probabilities sum to 1."""
    branches: Tuple[Tuple[Fraction, IntExpr], ...]

    @classmethod
    def dirac(cls, expr: IntExpr) -> "Dist":
        return cls(((Fraction(1), expr),))


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Abort:
    pass


@dataclass(frozen=True)
class Tick:
    rate: Fraction


@dataclass(frozen=True)
class Assign:
    var: str
    dist: Dist


@dataclass(frozen=True)
class If:
    inv: BExp
    guard: BExp
    then: "Command"
    orelse: "Command"


@dataclass(frozen=True)
class While:
    inv: BExp
    guard: BExp
    body: "Command"
    label: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class NdChoice:
    left: "Command"
    right: "Command"


@dataclass(frozen=True)
class PChoice:
    prob: Fraction
    left: "Command"
    right: "Command"


@dataclass(frozen=True)
class Seq:
    first: "Command"
    second: "Command"


Command = Union[Skip, Abort, Tick, Assign, If, While, NdChoice, PChoice, Seq]


# ---------------------------------------------------------------------------
# Cost expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CostConst:
    value: Fraction


@dataclass(frozen=True)
class Nat:
    arg: IntExpr


@dataclass(frozen=True)
class Iverson:
    cond: BExp
    body: "CostExpr"


@dataclass(frozen=True)
class CostAdd:
    left: "CostExpr"
    right: "CostExpr"


@dataclass(frozen=True)
class CostMul:
    left: "CostExpr"
    right: "CostExpr"


@dataclass(frozen=True)
class CostMax:
    left: "CostExpr"
    right: "CostExpr"


@dataclass(frozen=True)
class Coeff:
    """Undetermined nonnegative template coefficient."""
    name: str


CostExpr = Union[CostConst, Nat, Iverson, CostAdd, CostMul, CostMax, Coeff]

ZERO = CostConst(Fraction(0))
ONE = CostConst(Fraction(1))

Node = Union[Command, IntExpr, BExp, CostExpr, Dist]


def const(value) -> CostConst:
    return CostConst(Fraction(value))


def seq(*commands: Command) -> Command:
    """Right-associated sequence, the shape the parser produces."""
    if not commands:
        return Skip()
    result = commands[-1]
    for command in reversed(commands[:-1]):
        result = Seq(command, result)
    return result


def cost_sum(terms: Iterable[CostExpr]) -> CostExpr:
    terms = list(terms)
    if not terms:
        return ZERO
    result = terms[0]
    for term in terms[1:]:
        result = CostAdd(result, term)
    return result


def cost_product(factors: Iterable[CostExpr]) -> CostExpr:
    factors = list(factors)
    if not factors:
        return ONE
    result = factors[0]
    for factor in factors[1:]:
        result = CostMul(result, factor)
    return result


# ---------------------------------------------------------------------------
# Stores
# ---------------------------------------------------------------------------

class Store:
    """Immutable finite map from variables to integers; unbound variables read as 0."""

    __slots__ = ("_bindings", "_hash")

    def __init__(self, bindings: Optional[Mapping[str, int]] = None):
        self._bindings: Dict[str, int] = dict(bindings or {})
        self._hash = hash(frozenset(self._nonzero()))

    @classmethod
    def of(cls, **bindings: int) -> "Store":
        return cls(bindings)

    def _nonzero(self) -> Iterator[Tuple[str, int]]:
        return ((name, value) for name, value in self._bindings.items() if value != 0)

    def lookup(self, name: str) -> int:
        return self._bindings.get(name, 0)

    def assign(self, name: str, value: int) -> "Store":
        bindings = dict(self._bindings)
        bindings[name] = value
        return Store(bindings)

    def extend(self, names: Iterable[str]) -> "Store":
        """Store with every name in ``names`` bound explicitly (default 0)."""
        bindings = {name: self.lookup(name) for name in names}
        bindings.update(self._bindings)
        return Store(bindings)

    def restrict(self, names: Iterable[str]) -> "Store":
        keep = set(names)
        return Store({name: value for name, value in self._bindings.items() if name in keep})

    def items(self) -> List[Tuple[str, int]]:
        return sorted(self._bindings.items())

    def as_dict(self) -> Dict[str, int]:
        return dict(self.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Store):
            return NotImplemented
        return dict(self._nonzero()) == dict(other._nonzero())

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(f"{name}: {value}" for name, value in self.items())
        return "{" + inner + "}"


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def eval_int(expr: IntExpr, store: Store) -> int:
    match expr:
        case Var(name):
            return store.lookup(name)
        case Num(value):
            return value
        case IntAdd(left, right):
            return eval_int(left, store) + eval_int(right, store)
        case IntSub(left, right):
            return eval_int(left, store) - eval_int(right, store)
        case IntMul(left, right):
            return eval_int(left, store) * eval_int(right, store)
    raise TypeError(f"not an integer expression: {expr!r}")


def compare_values(op: str, left, right) -> bool:
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == "=":
        return left == right
    if op == ">=":
        return left >= right
    if op == ">":
        return left > right
    if op == "!=":
        return left != right
    raise ValueError(f"unknown comparison operator: {op}")


def eval_bexp(expr: BExp, store: Store) -> bool:
    match expr:
        case BoolLit(value):
            return value
        case Compare(op, left, right):
            return compare_values(op, eval_int(left, store), eval_int(right, store))
        case And(left, right):
            return eval_bexp(left, store) and eval_bexp(right, store)
        case Or(left, right):
            return eval_bexp(left, store) or eval_bexp(right, store)
        case Not(operand):
            return not eval_bexp(operand, store)
    raise TypeError(f"not a Boolean expression: {expr!r}")


def eval_dist(dist: Dist, store: Store) -> Dict[int, Fraction]:
    """Evaluate every branch and merge equal outcomes, keeping first-occurrence order."""
    outcomes: Dict[int, Fraction] = {}
    for prob, expr in dist.branches:
        value = eval_int(expr, store)
        outcomes[value] = outcomes.get(value, Fraction(0)) + prob
    return outcomes


def eval_cost(expr: CostExpr, store: Store, coeffs: Optional[Mapping[str, Fraction]] = None) -> Fraction:
    match expr:
        case CostConst(value):
            return value
        case Nat(arg):
            return Fraction(max(0, eval_int(arg, store)))
        case Iverson(cond, body):
            return eval_cost(body, store, coeffs) if eval_bexp(cond, store) else Fraction(0)
        case CostAdd(left, right):
            return eval_cost(left, store, coeffs) + eval_cost(right, store, coeffs)
        case CostMul(left, right):
            return eval_cost(left, store, coeffs) * eval_cost(right, store, coeffs)
        case CostMax(left, right):
            return max(eval_cost(left, store, coeffs), eval_cost(right, store, coeffs))
        case Coeff(name):
            if coeffs is None or name not in coeffs:
                raise UnboundCoefficientError(name)
            return Fraction(coeffs[name])
    raise TypeError(f"not a cost expression: {expr!r}")


# ---------------------------------------------------------------------------
# Syntactic queries
# ---------------------------------------------------------------------------

def free_vars(node: Node) -> Set[str]:
    """Exact syntactic variable set of a command or expression."""
    match node:
        case Var(name):
            return {name}
        case Num() | BoolLit() | CostConst() | Coeff() | Skip() | Abort() | Tick():
            return set()
        case IntAdd(left, right) | IntSub(left, right) | IntMul(left, right):
            return free_vars(left) | free_vars(right)
        case Compare(_, left, right) | And(left, right) | Or(left, right):
            return free_vars(left) | free_vars(right)
        case Not(operand):
            return free_vars(operand)
        case Dist(branches):
            result: Set[str] = set()
            for _, expr in branches:
                result |= free_vars(expr)
            return result
        case Assign(var, dist):
            return {var} | free_vars(dist)
        case If(inv, guard, then, orelse):
            return free_vars(inv) | free_vars(guard) | free_vars(then) | free_vars(orelse)
        case While(inv, guard, body):
            return free_vars(inv) | free_vars(guard) | free_vars(body)
        case NdChoice(left, right) | PChoice(_, left, right) | Seq(left, right):
            return free_vars(left) | free_vars(right)
        case Nat(arg):
            return free_vars(arg)
        case Iverson(cond, body):
            return free_vars(cond) | free_vars(body)
        case CostAdd(left, right) | CostMul(left, right) | CostMax(left, right):
            return free_vars(left) | free_vars(right)
    raise TypeError(f"unsupported node: {node!r}")


def coefficient_symbols(expr: CostExpr) -> Set[str]:
    match expr:
        case Coeff(name):
            return {name}
        case CostConst() | Nat():
            return set()
        case Iverson(_, body):
            return coefficient_symbols(body)
        case CostAdd(left, right) | CostMul(left, right) | CostMax(left, right):
            return coefficient_symbols(left) | coefficient_symbols(right)
    raise TypeError(f"not a cost expression: {expr!r}")


def nat_atoms(expr: CostExpr) -> List[IntExpr]:
    """Arguments of every ``nat`` node, left to right, duplicates removed."""
    found: List[IntExpr] = []

    def walk(node: CostExpr) -> None:
        match node:
            case Nat(arg):
                if arg not in found:
                    found.append(arg)
            case Iverson(_, body):
                walk(body)
            case CostAdd(left, right) | CostMul(left, right) | CostMax(left, right):
                walk(left)
                walk(right)

    walk(expr)
    return found


def assigned_vars(cmd: Command) -> Set[str]:
    match cmd:
        case Assign(var, _):
            return {var}
        case If(_, _, then, orelse):
            return assigned_vars(then) | assigned_vars(orelse)
        case While(_, _, body):
            return assigned_vars(body)
        case NdChoice(left, right) | PChoice(_, left, right) | Seq(left, right):
            return assigned_vars(left) | assigned_vars(right)
    return set()


def is_probabilistic(cmd: Command) -> bool:
    """True when the command can branch probabilistically."""
    match cmd:
        case Assign(_, dist):
            return len(dist.branches) > 1
        case PChoice(prob, left, right):
            return 0 < prob < 1 or is_probabilistic(left) or is_probabilistic(right)
        case If(_, _, then, orelse):
            return is_probabilistic(then) or is_probabilistic(orelse)
        case While(_, _, body):
            return is_probabilistic(body)
        case NdChoice(left, right) | Seq(left, right):
            return is_probabilistic(left) or is_probabilistic(right)
    return False


def while_loops(cmd: Command) -> List[While]:
    """All while loops in pre-order."""
    match cmd:
        case While(_, _, body):
            return [cmd] + while_loops(body)
        case If(_, _, then, orelse):
            return while_loops(then) + while_loops(orelse)
        case NdChoice(left, right) | PChoice(_, left, right) | Seq(left, right):
            return while_loops(left) + while_loops(right)
    return []


def label_loops(cmd: Command) -> Command:
    """Attach labels ``loop0``, ``loop1``, ... to while loops in pre-order."""
    counter = iter(range(1 << 30))

    def walk(node: Command) -> Command:
        match node:
            case While(inv, guard, body):
                label = f"loop{next(counter)}"
                return While(inv, guard, walk(body), label)
            case If(inv, guard, then, orelse):
                return If(inv, guard, walk(then), walk(orelse))
            case NdChoice(left, right):
                return NdChoice(walk(left), walk(right))
            case PChoice(prob, left, right):
                return PChoice(prob, walk(left), walk(right))
            case Seq(first, second):
                return Seq(walk(first), walk(second))
        return node

    return walk(cmd)


def contains_loop(cmd: Command) -> bool:
    return bool(while_loops(cmd))


def head_command(cmd: Command) -> Command:
    """The command executed by the next reduction step."""
    while isinstance(cmd, Seq):
        cmd = cmd.first
    return cmd


# ---------------------------------------------------------------------------
# Printing (inverse of the concrete grammar for right-associated sequences)
# ---------------------------------------------------------------------------

def format_rational(value: Fraction) -> str:
    return str(Fraction(value))


def _int_prec(expr: IntExpr) -> int:
    if isinstance(expr, (IntAdd, IntSub)):
        return 1
    if isinstance(expr, IntMul):
        return 2
    return 3


def _wrap(text: str, prec: int, minimum: int) -> str:
    return f"({text})" if prec < minimum else text


def print_int(expr: IntExpr) -> str:
    match expr:
        case Var(name):
            return name
        case Num(value):
            return str(value)
        case IntAdd(left, right):
            return f"{_wrap(print_int(left), _int_prec(left), 1)} + {_wrap(print_int(right), _int_prec(right), 2)}"
        case IntSub(left, right):
            return f"{_wrap(print_int(left), _int_prec(left), 1)} - {_wrap(print_int(right), _int_prec(right), 2)}"
        case IntMul(left, right):
            return f"{_wrap(print_int(left), _int_prec(left), 2)} * {_wrap(print_int(right), _int_prec(right), 3)}"
    raise TypeError(f"not an integer expression: {expr!r}")


def _bexp_prec(expr: BExp) -> int:
    if isinstance(expr, Or):
        return 1
    if isinstance(expr, And):
        return 2
    if isinstance(expr, Not):
        return 3
    return 4


def print_bexp(expr: BExp) -> str:
    match expr:
        case BoolLit(value):
            return "true" if value else "false"
        case Compare(op, left, right):
            return f"{print_int(left)} {op} {print_int(right)}"
        case And(left, right):
            return f"{_wrap(print_bexp(left), _bexp_prec(left), 2)} and {_wrap(print_bexp(right), _bexp_prec(right), 3)}"
        case Or(left, right):
            return f"{_wrap(print_bexp(left), _bexp_prec(left), 1)} or {_wrap(print_bexp(right), _bexp_prec(right), 2)}"
        case Not(operand):
            return f"not {_wrap(print_bexp(operand), _bexp_prec(operand), 3)}"
    raise TypeError(f"not a Boolean expression: {expr!r}")


def print_dist(dist: Dist) -> str:
    if len(dist.branches) == 1 and dist.branches[0][0] == 1:
        return print_int(dist.branches[0][1])
    inner = ", ".join(f"{format_rational(p)}: {print_int(e)}" for p, e in dist.branches)
    return "{" + inner + "}"


def print_command(cmd: Command) -> str:
    match cmd:
        case Skip():
            return "skip"
        case Abort():
            return "abort"
        case Tick(rate):
            return f"tick({format_rational(rate)})"
        case Assign(var, dist):
            return f"{var} := {print_dist(dist)}"
        case If(inv, guard, then, orelse):
            return (f"if [{print_bexp(inv)}] ({print_bexp(guard)}) "
                    f"{{ {print_command(then)} }} {{ {print_command(orelse)} }}")
        case While(inv, guard, body):
            return f"while [{print_bexp(inv)}] ({print_bexp(guard)}) {{ {print_command(body)} }}"
        case NdChoice(left, right):
            return f"{{ {print_command(left)} }} <> {{ {print_command(right)} }}"
        case PChoice(prob, left, right):
            return f"{{ {print_command(left)} }} [{format_rational(prob)}] {{ {print_command(right)} }}"
        case Seq(first, second):
            return f"{print_command(first)}; {print_command(second)}"
    raise TypeError(f"not a command: {cmd!r}")


def _cost_prec(expr: CostExpr) -> int:
    if isinstance(expr, CostAdd):
        return 1
    if isinstance(expr, CostMul):
        return 2
    return 3


def print_cost(expr: CostExpr) -> str:
    match expr:
        case CostConst(value):
            return format_rational(value)
        case Nat(arg):
            return f"nat({print_int(arg)})"
        case Iverson(cond, body):
            return f"[{print_bexp(cond)}]*{_wrap(print_cost(body), _cost_prec(body), 3)}"
        case CostAdd(left, right):
            return f"{_wrap(print_cost(left), _cost_prec(left), 1)} + {_wrap(print_cost(right), _cost_prec(right), 2)}"
        case CostMul(left, right):
            return f"{_wrap(print_cost(left), _cost_prec(left), 2)} * {_wrap(print_cost(right), _cost_prec(right), 3)}"
        case CostMax(left, right):
            return f"max({print_cost(left)}, {print_cost(right)})"
        case Coeff(name):
            return f"?{name}"
    raise TypeError(f"not a cost expression: {expr!r}")
