"""
Loop bound inference: norm selection, templates, the decomposition rule,
upper-invariant checking and the concavity side conditions it relies on.
"""

import itertools
import logging
import random
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from app.core.exceptions import (
    ConcavityViolationError, LoopAnalysisError, NoNormsError, SolverInfeasibleError,
    UnsupportedCaseError,
)
from app.core.models import DEFAULT_GRID, CostMode, RunConfig, StrategyKind, Verdict
from app.core.polynomials import Monomial, NormPolynomial, canonical_int, norm_polynomial
from app.core.solver import (
    Constraint, LinearSystem, eliminate_cases, numeric_refute, solve_linear,
)
from app.core.syntax import (
    ZERO, And, BExp, Coeff, Command, Compare, CostAdd, CostExpr, IntAdd, IntExpr, IntSub, Nat,
    Not, Num, Or, Store, While, assigned_vars, coefficient_symbols, contains_loop, cost_product,
    cost_sum, eval_cost, eval_int, free_vars, is_probabilistic, nat_atoms, print_cost, print_int,
    while_loops,
)
from app.core.transformer import (
    LoopStrategy, et_symbolic, guard_and, guard_and_not, instantiate_coefficients, simplify,
    unroll_symbolic,
)

logger = logging.getLogger(__name__)

MIX_PROBABILITIES = (Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(3, 4))


def loop_label(loop: While) -> str:
    return loop.label or "loop"


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Norm:
    """A store abstraction ``nat(expr)``."""
    expr: IntExpr

    def as_cost(self) -> CostExpr:
        return Nat(self.expr)

    def __str__(self) -> str:
        return f"nat({print_int(self.expr)})"


def _comparison_norms(op: str, left: IntExpr, right: IntExpr) -> List[IntExpr]:
    match op:
        case ">":
            return [IntSub(left, right)]
        case "<":
            return [IntSub(right, left)]
        case ">=":
            return [IntAdd(IntSub(left, right), Num(1)), IntSub(left, right)]
        case "<=":
            return _comparison_norms(">=", right, left)
        case "=":
            return _comparison_norms(">=", left, right) + _comparison_norms(">=", right, left)
        case "!=":
            return [IntSub(left, right), IntSub(right, left)]
    raise ValueError(f"unknown comparison operator: {op}")


def _condition_norms(expr: BExp) -> List[IntExpr]:
    match expr:
        case Compare(op, left, right):
            return _comparison_norms(op, left, right)
        case And(left, right) | Or(left, right):
            return _condition_norms(left) + _condition_norms(right)
        case Not(operand):
            return _condition_norms(operand)
    return []


def select_norms(loop: While, f: Optional[CostExpr] = None) -> List[Norm]:
    """
    Heuristic norms for a loop.

    Candidates come from the guard, then the invariant, then the guards and
    invariants of inner loops, then the ``nat`` atoms of the continuation ``f``.
    Each candidate is put in canonical form; constants and duplicates are dropped.

    Args:
        loop: The while loop
        f: Continuation expectation, if any

    Returns:
        List[Norm]: Norms in a deterministic order
    """
    candidates = _condition_norms(loop.guard) + _condition_norms(loop.inv)
    for inner in while_loops(loop.body):
        candidates += _condition_norms(inner.guard) + _condition_norms(inner.inv)
    if f is not None:
        candidates += nat_atoms(f)
    norms: List[Norm] = []
    for candidate in candidates:
        expr = canonical_int(candidate)
        if isinstance(expr, Num):
            continue
        norm = Norm(expr)
        if norm not in norms:
            norms.append(norm)
    return norms


# ---------------------------------------------------------------------------
# Templates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Template:
    """``Σ q_m · Π_{i∈m} n_i`` over norms, one fresh coefficient symbol per monomial."""
    norms: Tuple[Norm, ...]
    monomials: Tuple[Monomial, ...]
    symbols: Tuple[str, ...]

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.monomials), default=0)

    def instantiate(self, values: Sequence[CostExpr]) -> CostExpr:
        """The template with ``values[i]`` substituted for norm ``i``."""
        return cost_sum(
            cost_product([Coeff(symbol)] + [values[i] for i in monomial])
            for monomial, symbol in zip(self.monomials, self.symbols)
        )

    def shape(self) -> CostExpr:
        return self.instantiate([norm.as_cost() for norm in self.norms])

    def polynomial(self, assignment: Dict[str, Fraction]) -> NormPolynomial:
        return norm_polynomial(
            ((monomial, assignment.get(symbol, Fraction(0))) for monomial, symbol in zip(self.monomials, self.symbols)),
            len(self.norms),
        )

    def bound(self, assignment: Dict[str, Fraction]) -> CostExpr:
        return simplify(self.polynomial(assignment).to_cost([norm.expr for norm in self.norms]))


def build_template(
    norms: Sequence[Norm],
    degree: int,
    prefix: str,
    squares: bool = False,
    pair_allowed: Optional[Callable[[int, int], bool]] = None,
) -> Template:
    """
    Build a template over norms.

    Args:
        norms: Norms the template ranges over
        degree: 1 for affine templates, 2 to add products
        prefix: Coefficient symbol prefix, unique per derivation
        squares: Admit ``n_i·n_i`` monomials
        pair_allowed: Filter for products of distinct norms

    Returns:
        Template: Constant, linear and admitted product monomials
    """
    k = len(norms)
    monomials: List[Monomial] = [()] + [(i,) for i in range(k)]
    if degree >= 2:
        for i, j in itertools.combinations_with_replacement(range(k), 2):
            if i == j and not squares:
                continue
            if i != j and pair_allowed is not None and not pair_allowed(i, j):
                continue
            monomials.append((i, j))
    symbols = tuple(f"{prefix}{index}" for index in range(len(monomials)))
    return Template(tuple(norms), tuple(monomials), symbols)


def grid_weights(template: Template, grid: Sequence[int] = DEFAULT_GRID) -> Dict[str, Fraction]:
    """Objective weight per coefficient: 1 plus the monomial's value summed over a diagonal store grid."""
    variables = sorted(set().union(*(free_vars(norm.expr) for norm in template.norms)))
    vectors = []
    for value in grid:
        store = Store({name: value for name in variables})
        vectors.append([Fraction(max(0, eval_int(norm.expr, store))) for norm in template.norms])
    weights: Dict[str, Fraction] = {}
    for monomial, symbol in zip(template.monomials, template.symbols):
        total = Fraction(1)
        for vector in vectors:
            value = Fraction(1)
            for index in monomial:
                value *= vector[index]
            total += value
        weights[symbol] = total
    return weights


# ---------------------------------------------------------------------------
# Derivations
# ---------------------------------------------------------------------------

@dataclass
class LoopBoundDerivation:
    """Audit record of how one loop bound was obtained."""
    ident: str
    loop: While
    mode: CostMode
    strategy: LoopStrategy
    post: CostExpr
    norms: List[Norm]
    bound: CostExpr
    body_cost: Optional[CostExpr] = None
    expected_norms: List[CostExpr] = field(default_factory=list)
    template: Optional[Template] = None
    coefficients: Dict[str, Fraction] = field(default_factory=dict)
    constraints: List[Constraint] = field(default_factory=list)
    depends_on: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def label(self) -> str:
        return loop_label(self.loop)

    @property
    def certified(self) -> bool:
        return self.strategy.kind != StrategyKind.UNROLL

    def __str__(self) -> str:
        return f"{self.ident} [{self.mode.value}, {self.strategy}] {print_cost(self.bound)}"


@dataclass
class ReplayResult:
    verified: bool
    failures: List[str] = field(default_factory=list)


def _certificate_failure(constraint: Constraint) -> Optional[str]:
    """Re-derive a certificate for a coefficient-free constraint."""
    try:
        system = LinearSystem()
        system.add_inequalities(eliminate_cases(constraint))
        solve_linear(system, tie_break=False)
    except (SolverInfeasibleError, UnsupportedCaseError) as e:
        return f"{constraint.label}: no certificate ({e})"
    return None


def replay_derivation(derivation: LoopBoundDerivation, samples: int = 2000, seed: int = 0) -> ReplayResult:
    """
    Re-verify every constraint of a derivation under its solved coefficients.

    Each constraint is instantiated and certified again through case elimination
    and the linear solver, then sampled by numeric refutation.
    """
    if not derivation.certified:
        return ReplayResult(False, [f"{derivation.ident}: {derivation.strategy} carries no certificate"])
    failures = []
    for constraint in derivation.constraints:
        instantiated = Constraint(
            constraint.premise,
            instantiate_coefficients(constraint.lhs, derivation.coefficients),
            instantiate_coefficients(constraint.rhs, derivation.coefficients),
            constraint.label,
        )
        failure = _certificate_failure(instantiated)
        if failure:
            failures.append(failure)
            continue
        witness = numeric_refute(constraint, derivation.coefficients, samples=samples, seed=seed)
        if witness is not None:
            failures.append(f"{constraint.label}: counterexample {witness}")
    if failures:
        logger.error(f"Replay of {derivation.ident} failed: {failures}")
    return ReplayResult(not failures, failures)


# ---------------------------------------------------------------------------
# Loop analyzer session
# ---------------------------------------------------------------------------

def default_strategies(
    order: Sequence[StrategyKind] = (StrategyKind.DECOMPOSE, StrategyKind.INVARIANT, StrategyKind.UNROLL),
    max_degree: int = 2,
    unroll_fuel: int = 16,
) -> List[LoopStrategy]:
    strategies = []
    for kind in order:
        if kind == StrategyKind.UNROLL:
            strategies.append(LoopStrategy(kind, fuel=unroll_fuel))
        else:
            strategies.extend(LoopStrategy(kind, degree) for degree in range(1, max_degree + 1))
    return strategies


class LoopAnalyzer:
    """
    Bounds while loops on demand for the symbolic transformer.

    Results are cached per (mode, loop, post-expectation); every successful
    attempt is kept as a derivation together with the derivations it used.
    """

    def __init__(
        self,
        strategies: Optional[Sequence[LoopStrategy]] = None,
        max_degree: int = 2,
        unroll_fuel: int = 16,
        grid_values: Sequence[int] = DEFAULT_GRID,
        refute_samples: int = 2000,
        seed: int = 0,
    ):
        self.strategies = list(strategies) if strategies else default_strategies(max_degree=max_degree,
                                                                                 unroll_fuel=unroll_fuel)
        self.grid_values = list(grid_values)
        self.refute_samples = refute_samples
        self.seed = seed
        self.derivations: List[LoopBoundDerivation] = []
        self._cache: Dict[Tuple[CostMode, While, CostExpr], LoopBoundDerivation] = {}
        self._frames: List[List[str]] = []
        self._attempts = 0

    @classmethod
    def from_config(cls, config: RunConfig) -> "LoopAnalyzer":
        return cls(
            strategies=default_strategies(config.strategy_order, config.max_degree, config.unroll_fuel),
            grid_values=config.grid_values,
            refute_samples=config.refute_samples,
            seed=config.seed,
        )

    @contextmanager
    def recording(self) -> Iterator[List[str]]:
        """Collect the identifiers of derivations used while the block runs."""
        frame: List[str] = []
        self._frames.append(frame)
        try:
            yield frame
        finally:
            self._frames.pop()

    def next_ident(self, loop: While) -> str:
        self._attempts += 1
        return f"{loop_label(loop)}#{self._attempts}"

    def bound(self, mode: CostMode, loop: While, f: CostExpr) -> CostExpr:
        key = (mode, loop, f)
        derivation = self._cache.get(key)
        if derivation is None:
            derivation = self.analyze(mode, loop, f)
            self._cache[key] = derivation
        if self._frames and derivation.ident not in self._frames[-1]:
            self._frames[-1].append(derivation.ident)
        return derivation.bound

    def analyze(self, mode: CostMode, loop: While, f: CostExpr) -> LoopBoundDerivation:
        """
        Try each strategy in order and keep the first derivation that succeeds.

        Raises:
            LoopAnalysisError: when every strategy fails, or when the certifying
                strategies all failed on unsupported constraints
        """
        label = loop_label(loop)
        reasons: Dict[str, str] = {}
        for strategy in self.strategies:
            if strategy.kind == StrategyKind.UNROLL and reasons and all(
                    reason.startswith("unsupported") for reason in reasons.values()):
                break
            try:
                _, derivation = analyze_loop(mode, loop, f, strategy, analyzer=self)
            except LoopAnalysisError as e:
                if e.loop != label:
                    raise
                reasons[str(strategy)] = str(e)[len(label) + 2:]
                logger.warning(f"{label}: {strategy} failed: {reasons[str(strategy)]}")
                continue
            except (SolverInfeasibleError, UnsupportedCaseError) as e:
                reasons[str(strategy)] = str(e)
                logger.warning(f"{label}: {strategy} failed: {e}")
                continue
            self.derivations.append(derivation)
            logger.info(f"Bounded {derivation}")
            return derivation
        raise LoopAnalysisError(label, "no strategy produced a bound", reasons)


# ---------------------------------------------------------------------------
# Strategies
# ---------------------------------------------------------------------------

def _solve(constraints: Sequence[Constraint], template: Template, grid: Sequence[int]) -> Dict[str, Fraction]:
    system = LinearSystem(coefficients=list(template.symbols), objective=grid_weights(template, grid))
    for constraint in constraints:
        system.add_inequalities(eliminate_cases(constraint))
    return solve_linear(system)


def _confirm(label: str, constraints: Sequence[Constraint], assignment: Dict[str, Fraction],
             analyzer: LoopAnalyzer) -> None:
    for constraint in constraints:
        witness = numeric_refute(constraint, assignment, samples=analyzer.refute_samples, seed=analyzer.seed)
        if witness is not None:
            raise LoopAnalysisError(label, f"solved coefficients violate {constraint.label} at {witness}")


def _jensen_filter(loop: While, norms: Sequence[Norm]) -> Optional[Callable[[int, int], bool]]:
    """Products of norms whose variables the body changes are admitted only without randomness."""
    if not is_probabilistic(loop.body):
        return None
    changed = assigned_vars(loop.body)
    touched = [bool(free_vars(norm.expr) & changed) for norm in norms]
    return lambda i, j: not (touched[i] and touched[j])


def _decompose(mode: CostMode, loop: While, f: CostExpr, strategy: LoopStrategy,
               analyzer: LoopAnalyzer) -> LoopBoundDerivation:
    label = loop_label(loop)
    ident = analyzer.next_ident(loop)
    norms = select_norms(loop, f)
    if not norms:
        raise NoNormsError(label, "no norms available for decomposition")
    with analyzer.recording() as used:
        body_cost = et_symbolic(mode, loop.body, ZERO, analyzer=analyzer)
        expected = [et_symbolic(CostMode.VALUE, loop.body, norm.as_cost(), analyzer=analyzer) for norm in norms]
    template = build_template(norms, strategy.degree, f"{ident.replace('#', '_')}_q",
                              pair_allowed=_jensen_filter(loop, norms))
    if strategy.degree == 2 and template.degree < 2:
        raise SolverInfeasibleError("degree-2 template admits no products")
    shape = template.shape()
    constraints = [
        Constraint(guard_and(loop.inv, loop.guard), CostAdd(body_cost, template.instantiate(expected)), shape,
                   f"{ident}:step"),
        Constraint(guard_and_not(loop.inv, loop.guard), f, shape, f"{ident}:exit"),
    ]
    assignment = _solve(constraints, template, analyzer.grid_values)
    verdict = concavity_check(template.polynomial(assignment), seed=analyzer.seed)
    if not verdict.passed:
        raise ConcavityViolationError(label, f"template is not concave and monotone ({verdict.witness})")
    _confirm(label, constraints, assignment, analyzer)
    return LoopBoundDerivation(
        ident=ident, loop=loop, mode=mode, strategy=strategy, post=f, norms=norms,
        bound=template.bound(assignment), body_cost=body_cost, expected_norms=expected,
        template=template, coefficients=assignment, constraints=constraints, depends_on=list(used),
    )


def _invariant(mode: CostMode, loop: While, f: CostExpr, strategy: LoopStrategy,
               analyzer: LoopAnalyzer) -> LoopBoundDerivation:
    label = loop_label(loop)
    if contains_loop(loop.body):
        raise LoopAnalysisError(label, "invariant templates need a loop-free body")
    ident = analyzer.next_ident(loop)
    norms = select_norms(loop, f)
    template = build_template(norms, strategy.degree, f"{ident.replace('#', '_')}_q", squares=True)
    shape = template.shape()
    constraints = [
        Constraint(guard_and(loop.inv, loop.guard), et_symbolic(mode, loop.body, shape, analyzer=analyzer), shape,
                   f"{ident}:step"),
        Constraint(guard_and_not(loop.inv, loop.guard), f, shape, f"{ident}:exit"),
    ]
    assignment = _solve(constraints, template, analyzer.grid_values)
    _confirm(label, constraints, assignment, analyzer)
    return LoopBoundDerivation(
        ident=ident, loop=loop, mode=mode, strategy=strategy, post=f, norms=norms,
        bound=template.bound(assignment), template=template, coefficients=assignment, constraints=constraints,
    )


def _unroll(mode: CostMode, loop: While, f: CostExpr, strategy: LoopStrategy,
            analyzer: LoopAnalyzer) -> LoopBoundDerivation:
    ident = analyzer.next_ident(loop)
    with analyzer.recording() as used:
        bound = unroll_symbolic(mode, loop, f, strategy.fuel, analyzer)
    return LoopBoundDerivation(
        ident=ident, loop=loop, mode=mode, strategy=strategy, post=f, norms=[], bound=bound,
        depends_on=list(used), notes=[f"lower approximation after {strategy.fuel} iterations, not certified"],
    )


def analyze_loop(
    mode: CostMode,
    loop: While,
    f: CostExpr,
    strategy: LoopStrategy,
    analyzer: Optional[LoopAnalyzer] = None,
) -> Tuple[CostExpr, LoopBoundDerivation]:
    """
    Bound ``et[loop](f)`` with one strategy.

    Args:
        mode: Transformer mode
        loop: The while loop
        f: Continuation expectation
        strategy: Decompose, invariant template or unroll, with its degree or fuel
        analyzer: Session used for inner loops; a fresh one when omitted

    Returns:
        Tuple[CostExpr, LoopBoundDerivation]: The bound and its derivation

    Raises:
        NoNormsError: decomposition without any norm
        SolverInfeasibleError: no template instance satisfies the constraints
        ConcavityViolationError: the solved decomposition template is not concave
        UnsupportedCaseError: constraints outside the linear fragment
    """
    analyzer = analyzer or LoopAnalyzer()
    match strategy.kind:
        case StrategyKind.DECOMPOSE:
            derivation = _decompose(mode, loop, f, strategy, analyzer)
        case StrategyKind.INVARIANT:
            derivation = _invariant(mode, loop, f, strategy, analyzer)
        case _:
            derivation = _unroll(mode, loop, f, strategy, analyzer)
    return derivation.bound, derivation


# ---------------------------------------------------------------------------
# Upper invariants
# ---------------------------------------------------------------------------

@dataclass
class InvariantVerdict:
    verdict: Verdict
    witness: Optional[Store] = None
    detail: str = ""
    constraints: List[Constraint] = field(default_factory=list)


def _search_order(variables: Sequence[str]) -> Iterator[Store]:
    radius = {0: 0, 1: 10, 2: 10, 3: 4}.get(len(variables), 2 if len(variables) <= 6 else 0)
    points = itertools.product(range(-radius, radius + 1), repeat=len(variables))
    ordered = sorted(points, key=lambda values: (sum(abs(v) for v in values), [(abs(v), v < 0) for v in values]))
    for values in ordered:
        yield Store(dict(zip(variables, values)))


def _find_witness(constraints: Sequence[Constraint], samples: int, seed: int) -> Optional[Store]:
    variables = sorted(set().union(*(constraint.variables() for constraint in constraints)))
    rng = random.Random(seed)
    random_stores = (Store({name: rng.randint(-50, 50) for name in variables}) for _ in range(samples))
    for store in itertools.chain(_search_order(variables), random_stores):
        if not all(constraint.holds_at(store) for constraint in constraints):
            return store
    return None


def check_upper_invariant(
    mode: CostMode,
    loop: While,
    f: CostExpr,
    invariant: CostExpr,
    analyzer: Optional[LoopAnalyzer] = None,
    samples: int = 2000,
    seed: int = 0,
) -> InvariantVerdict:
    """
    Check ``[ψ∧φ]·et[body](I) + [ψ∧¬φ]·f ≤ I`` for a candidate upper invariant I.

    A certificate from case elimination and the linear solver certifies I.
    Otherwise, when the body is loop-free (so the transformer is exact), a
    violating store is searched for; without one the verdict is unknown.

    Args:
        mode: Transformer mode
        loop: The while loop
        f: Continuation expectation
        invariant: Coefficient-free candidate I
        analyzer: Session for inner loops of the body
        samples: Random stores tried after the enumeration around 0
        seed: Seed for the random stores

    Returns:
        InvariantVerdict: certified, refuted with a witness, or unknown
    """
    if coefficient_symbols(invariant):
        raise ValueError("invariant must not contain coefficient symbols")
    label = loop_label(loop)
    analyzer = analyzer or LoopAnalyzer()
    try:
        body = et_symbolic(mode, loop.body, invariant, analyzer=analyzer)
    except LoopAnalysisError as e:
        return InvariantVerdict(Verdict.UNKNOWN, detail=f"body not analysable: {e}")
    constraints = [
        Constraint(guard_and(loop.inv, loop.guard), body, invariant, f"{label}:step"),
        Constraint(guard_and_not(loop.inv, loop.guard), f, invariant, f"{label}:exit"),
    ]
    detail = ""
    try:
        system = LinearSystem()
        for constraint in constraints:
            system.add_inequalities(eliminate_cases(constraint))
        solve_linear(system, tie_break=False)
        logger.info(f"{label}: {print_cost(invariant)} certified as upper invariant")
        return InvariantVerdict(Verdict.CERTIFIED, constraints=constraints)
    except SolverInfeasibleError:
        detail = "no certificate found"
    except UnsupportedCaseError as e:
        detail = str(e)
    if not contains_loop(loop.body):
        witness = _find_witness(constraints, samples, seed)
        if witness is not None:
            logger.info(f"{label}: {print_cost(invariant)} refuted at {witness}")
            return InvariantVerdict(Verdict.REFUTED, witness=witness, detail=detail, constraints=constraints)
    return InvariantVerdict(Verdict.UNKNOWN, detail=detail, constraints=constraints)


# ---------------------------------------------------------------------------
# Concavity and the expected-value composition gap
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConcavityWitness:
    kind: str
    r: Tuple[Fraction, ...]
    s: Tuple[Fraction, ...]
    p: Optional[Fraction] = None

    def __str__(self) -> str:
        r = ", ".join(str(v) for v in self.r)
        s = ", ".join(str(v) for v in self.s)
        mix = f", p={self.p}" if self.p is not None else ""
        return f"{self.kind}: r=({r}), s=({s}){mix}"


@dataclass(frozen=True)
class ConcavityVerdict:
    passed: bool
    witness: Optional[ConcavityWitness] = None


def _mix_violation(h: NormPolynomial, base: List[Fraction], index: int,
                   r_value: Fraction, s_value: Fraction, p: Fraction) -> Optional[ConcavityWitness]:
    r = list(base)
    s = list(base)
    mixed = list(base)
    r[index], s[index] = r_value, s_value
    mixed[index] = p * r_value + (1 - p) * s_value
    if h.evaluate(mixed) < p * h.evaluate(r) + (1 - p) * h.evaluate(s):
        return ConcavityWitness("concavity", tuple(r), tuple(s), p)
    return None


def concavity_check(h: NormPolynomial, trials: int = 200, seed: int = 0) -> ConcavityVerdict:
    """
    Sampled check that ``h`` is concave along each coordinate and weakly monotone.

    Affine shapes are decided from their coefficients. Otherwise deterministic
    checks (mixing 0 and 2 at p = 1/2 on each coordinate) run first, followed
    by ``trials`` random coordinate mixes and monotonicity comparisons over
    nonnegative rationals.
    """
    k = h.arity
    zero = [Fraction(0)] * k
    if h.degree <= 1:
        for monomial, coeff in h.terms:
            if monomial and coeff < 0:
                bigger = list(zero)
                bigger[monomial[0]] = Fraction(1)
                return ConcavityVerdict(False, ConcavityWitness("monotonicity", tuple(bigger), tuple(zero)))
        return ConcavityVerdict(True)
    for index in range(k):
        witness = _mix_violation(h, zero, index, Fraction(0), Fraction(2), Fraction(1, 2))
        if witness:
            return ConcavityVerdict(False, witness)
    rng = random.Random(seed)
    for _ in range(trials):
        base = [Fraction(rng.randint(0, 10)) for _ in range(k)]
        index = rng.randrange(k)
        witness = _mix_violation(h, base, index, Fraction(rng.randint(0, 10)), Fraction(rng.randint(0, 10)),
                                 rng.choice(MIX_PROBABILITIES))
        if witness:
            return ConcavityVerdict(False, witness)
        larger = [value + rng.randint(0, 3) for value in base]
        if h.evaluate(larger) < h.evaluate(base):
            return ConcavityVerdict(False, ConcavityWitness("monotonicity", tuple(larger), tuple(base)))
    return ConcavityVerdict(True)


@dataclass(frozen=True)
class GapRow:
    store: Store
    lhs: Fraction
    rhs: Fraction

    @property
    def gap(self) -> Fraction:
        return self.rhs - self.lhs


@dataclass
class GapReport:
    rows: List[GapRow]

    @property
    def violations(self) -> List[GapRow]:
        return [row for row in self.rows if row.lhs > row.rhs]

    @property
    def max_gap(self) -> Optional[Fraction]:
        return max((row.gap for row in self.rows), default=None)


def lemma1_gap(cmd: Command, shape: NormPolynomial, norms: Sequence[IntExpr], stores: Iterable[Store]) -> GapReport:
    """
    Compare ``ect[C](h∘g)`` with ``ect[C](0) + h∘(evt[C](g_1), …)`` at each store.

    Args:
        cmd: Loop-free command
        shape: Polynomial h over the norm vector
        norms: Norm arguments g_i
        stores: Stores to evaluate at

    Returns:
        GapReport: Pointwise sides; violations are rows where lhs exceeds rhs
    """
    if contains_loop(cmd):
        raise ValueError("composition gap needs a loop-free command")
    lhs = et_symbolic(CostMode.COST, cmd, shape.to_cost(norms))
    expected = [et_symbolic(CostMode.VALUE, cmd, Nat(norm)) for norm in norms]
    rhs = simplify(CostAdd(et_symbolic(CostMode.COST, cmd, ZERO), shape.compose(expected)))
    rows = [GapRow(store, eval_cost(lhs, store), eval_cost(rhs, store)) for store in stores]
    return GapReport(rows)
