#!/usr/bin/env python3
"""
Tests for the expectation transformers and cost-expression simplification.
"""

import random
from fractions import Fraction

import pytest

from app.core.models import CostMode
from app.core.semantics import (
    Running, expected_cost_oracle, expected_value_oracle, step,
)
from app.core.syntax import (
    FALSE, ONE, TRUE, ZERO, Compare, CostAdd, CostConst, CostMax, CostMul, Iverson, Nat, NdChoice,
    Num, Skip, Store, Var, While, eval_cost, free_vars, head_command, print_cost,
)
from app.core.transformer import (
    et_configuration, et_semantic, et_symbolic, expectation_of, simplify, subst,
)
from app.infrastructure.program_parser import parse_cost_expr, parse_program

X, Y = Var("x"), Var("y")

POSTS = [
    ZERO,
    Nat(X),
    CostAdd(Nat(X), ONE),
    Iverson(Compare(">", X, Num(0)), Nat(Y)),
    CostMax(Nat(X), Nat(Y)),
    CostMul(Nat(X), Nat(Y)),
]


def random_stores(rng: random.Random, count: int):
    return [Store({name: rng.randint(-3, 3) for name in ("x", "y", "z")}) for _ in range(count)]


def test_substitution():
    """Test substitution into cost expressions."""
    assert subst(parse_cost_expr("nat(x - y)"), "x", parse_program("x := x + 1").dist.branches[0][1]) \
        == parse_cost_expr("nat((x + 1) - y)")
    assert subst(CostConst(Fraction(5)), "x", Num(0)) == CostConst(Fraction(5))
    assert subst(parse_cost_expr("[x > 0]*nat(x)"), "x", Num(0)) == Iverson(Compare(">", Num(0), Num(0)), Nat(Num(0)))


def test_simplify():
    """Test constant folding, Iverson literals and idempotent maxima."""
    assert simplify(parse_cost_expr("1/2 * nat(0) + 1/2 * nat(2)")) == ONE
    body = Nat(X)
    assert simplify(Iverson(TRUE, body)) == body
    assert simplify(Iverson(FALSE, body)) == ZERO
    assert simplify(CostMax(body, body)) == body
    assert simplify(parse_cost_expr("nat(x) + nat(x)")) == CostMul(CostConst(Fraction(2)), Nat(X))
    assert simplify(parse_cost_expr("0 * nat(x) + 3")) == CostConst(Fraction(3))


def test_simplify_preserves_values():
    """Test that simplification never changes the value of an expression."""
    texts = [
        "1/2 * (nat(x) + 2) + 1/2 * nat(x - 1)",
        "max(nat(x), 3) + max(1, 2) * nat(y)",
        "[x > 0]*([x > 0]*nat(x) + 1)",
        "[1 > 0]*nat(3 - 5) + max(nat(y), nat(y))",
        "2 * (nat(x) + nat(y)) * 1",
    ]
    rng = random.Random(3)
    for text in texts:
        expr = parse_cost_expr(text)
        for store in random_stores(rng, 20):
            assert eval_cost(simplify(expr), store) == eval_cost(expr, store), text


def test_symbolic_examples():
    """Test the transformer on single commands."""
    tick = parse_program("tick(2)")
    assert et_symbolic(CostMode.COST, tick, ZERO) == CostConst(Fraction(2))
    assert et_symbolic(CostMode.VALUE, tick, Nat(X)) == Nat(X)
    assert et_symbolic(CostMode.VALUE, parse_program("x := {1/2: 0, 1/2: 2}"), Nat(X)) == ONE
    sequence = parse_program("tick(2); { tick(1) } [1/3] { tick(4) }")
    assert et_symbolic(CostMode.COST, sequence, ZERO) == CostConst(Fraction(5))


def test_symbolic_nondeterminism_takes_maximum():
    """Test that nondeterministic choice becomes a maximum."""
    result = et_symbolic(CostMode.COST, parse_program("{ tick(1) } <> { x := x + 1 }"), Nat(X))
    assert eval_cost(result, Store.of(x=0)) == 1
    assert eval_cost(result, Store.of(x=5)) == 6


def test_symbolic_abort_and_failed_invariant():
    """Test that aborting paths contribute nothing."""
    assert et_symbolic(CostMode.COST, parse_program("abort; tick(1)"), ZERO) == ZERO
    assert et_symbolic(CostMode.COST, parse_program("tick(1); abort"), ZERO) == ONE
    cmd = parse_program("if [x >= 0] (x > 1) { tick(2) } { tick(1) }")
    result = et_symbolic(CostMode.COST, cmd, ZERO)
    assert [eval_cost(result, Store.of(x=v)) for v in (-1, 0, 2)] == [0, 1, 2]


def test_symbolic_matches_cost_oracle(program_factory):
    """Test the symbolic transformer against the exhaustive oracle on random loop-free programs."""
    rng = random.Random(11)
    for cmd in program_factory(1).programs(200):
        bound = et_symbolic(CostMode.COST, cmd, ZERO)
        for store in random_stores(rng, 20):
            oracle = expected_cost_oracle(cmd, store, horizon=60)
            assert oracle.exact
            assert eval_cost(bound, store) == oracle.lower, print_cost(bound)


def test_symbolic_matches_value_oracle(program_factory):
    """Test value mode against the expected value oracle, two post-expectations per program."""
    rng = random.Random(12)
    for cmd in program_factory(2).programs(200):
        for f in rng.sample(POSTS, 2):
            value = et_symbolic(CostMode.VALUE, cmd, f)
            for store in random_stores(rng, 20):
                assert eval_cost(value, store) == expected_value_oracle(cmd, store, f, horizon=60).lower


def test_cost_and_value_agree_without_ticks(program_factory):
    """Test that both modes coincide on programs that never tick."""
    rng = random.Random(15)
    for cmd in program_factory(5, ticks=False).programs(100):
        for f in POSTS:
            cost = et_symbolic(CostMode.COST, cmd, f)
            value = et_symbolic(CostMode.VALUE, cmd, f)
            for store in random_stores(rng, 5):
                assert eval_cost(cost, store) == eval_cost(value, store)


# pairs (f, g) with f <= g at every store
ORDERED_POSTS = [
    (ZERO, Nat(Y)),
    (Nat(X), CostAdd(Nat(X), ONE)),
    (Nat(X), CostMax(Nat(X), Nat(Y))),
    (Iverson(Compare(">", X, Num(0)), Nat(Y)), Nat(Y)),
    (CostMul(Nat(X), Nat(Y)), CostMul(CostAdd(Nat(X), ONE), Nat(Y))),
]


@pytest.mark.parametrize("mode", [CostMode.COST, CostMode.VALUE])
def test_symbolic_monotone_in_post(program_factory, mode):
    """Test that a larger post-expectation never yields a smaller expectation."""
    rng = random.Random(16)
    for cmd in program_factory(6).programs(100):
        for smaller, larger in ORDERED_POSTS:
            low = et_symbolic(mode, cmd, smaller)
            high = et_symbolic(mode, cmd, larger)
            for store in random_stores(rng, 5):
                assert eval_cost(low, store) <= eval_cost(high, store)


def test_symbolic_matches_semantic(program_factory):
    """Test that both transformers agree on loop-free programs."""
    rng = random.Random(13)
    for cmd in program_factory(3).programs(60):
        for f in (ZERO, Nat(X), CostMax(Nat(X), Nat(Y))):
            symbolic = et_symbolic(CostMode.COST, cmd, f)
            semantic = et_semantic(CostMode.COST, cmd, expectation_of(f), fuel=4)
            for store in random_stores(rng, 5):
                assert eval_cost(symbolic, store) == semantic(store)


def test_semantic_countdown(load_program):
    """Test the fuel-bounded transformer on the countdown loop."""
    program = load_program("countdown.pw")
    assert et_semantic(CostMode.COST, program, expectation_of(ZERO), fuel=10)(Store.of(x=3)) == 3


def test_semantic_monotone_in_fuel(load_program):
    """Test that more fuel never lowers the approximation."""
    program = load_program("biased_walk.pw")
    for x in range(0, 6):
        values = [et_semantic(CostMode.COST, program, expectation_of(ZERO), fuel=k)(Store.of(x=x))
                  for k in range(1, 12)]
        assert values == sorted(values)


def test_semantic_skip_is_identity():
    """Test that skip passes the post-expectation through."""
    f = expectation_of(Nat(X))
    assert et_semantic(CostMode.VALUE, Skip(), f, fuel=3)(Store.of(x=9)) == 9


def test_semantic_rejects_zero_fuel():
    """Test fuel validation."""
    with pytest.raises(ValueError):
        et_semantic(CostMode.COST, Skip(), expectation_of(ZERO), fuel=0)


def _reachable(cmd, store, depth):
    frontier = [Running(cmd, store)]
    seen = list(frontier)
    for _ in range(depth):
        following = []
        for config in frontier:
            for rule in step(config):
                for _, target in rule.target:
                    if target not in seen:
                        seen.append(target)
                        following.append(target)
        frontier = following
    return seen


def test_transformer_decreases_along_steps(program_factory):
    """
    Test the one-step decrease property on loop-free programs.

    Every rule satisfies weight + expected successor value <= value of the
    configuration, with equality unless a nondeterministic choice is at the head.
    """
    rng = random.Random(14)
    f = expectation_of(Nat(X))
    for cmd in program_factory(4).programs(40):
        for store in random_stores(rng, 2):
            for config in _reachable(cmd, store, 6):
                value = et_configuration(CostMode.COST, config, f, fuel=2)
                for rule in step(config):
                    after = rule.weight + sum(p * et_configuration(CostMode.COST, target, f, fuel=2)
                                              for p, target in rule.target)
                    assert after <= value
                    if not isinstance(head_command(config.cmd), NdChoice):
                        assert after == value


def test_loop_in_symbolic_transformer(load_program):
    """Test that a loop is bounded through the analyzer."""
    bound = et_symbolic(CostMode.COST, load_program("countdown.pw"), ZERO)
    assert print_cost(bound) == "nat(x)"
    assert free_vars(bound) == {"x"}


def test_loop_with_false_guard_returns_post():
    """Test that a loop whose guard never holds is bounded by its post-expectation."""
    loop = While(TRUE, FALSE, Skip(), "loop0")
    assert et_symbolic(CostMode.COST, loop, Nat(X)) == Nat(X)
