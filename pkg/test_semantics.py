#!/usr/bin/env python3
"""
Tests for the operational semantics, the exhaustive oracles and sampling.
"""

import random
from fractions import Fraction

import pytest

from app.core.exceptions import StateSpaceLimitError
from app.core.semantics import (
    ABORTED, Aborted, Halted, MultiDistribution, Running, Scheduler, convex_union, expected_cost_oracle,
    expected_value_oracle, format_trace, sample_run, step, step_multi, trace_run,
)
from app.core.syntax import Abort, Nat, Skip, Store, Tick, Var
from app.infrastructure.program_parser import parse_program

HALF = Fraction(1, 2)
SIGMA = Store.of(x=4)


def test_step_tick():
    """Test that a tick is one rule weighted by its rate."""
    rules = step(Running(Tick(Fraction(3, 2)), SIGMA))
    assert len(rules) == 1
    assert rules[0].weight == Fraction(3, 2)
    assert rules[0].target == MultiDistribution.of((1, Halted(SIGMA)))


def test_step_probabilistic_choice():
    """Test that a probabilistic choice yields both branches with their probabilities."""
    cmd = parse_program("{ tick(1) } [1/4] { skip }")
    (rule,) = step(Running(cmd, SIGMA))
    assert rule.weight == 0
    assert rule.target == MultiDistribution.of(
        (Fraction(1, 4), Running(Tick(Fraction(1)), SIGMA)), (Fraction(3, 4), Running(Skip(), SIGMA)))


def test_step_while_aborts_when_invariant_fails():
    """Test that a loop whose invariant is false aborts."""
    cmd = parse_program("while [x < 0] (x > 0) { skip }")
    (rule,) = step(Running(cmd, SIGMA))
    assert rule.target == MultiDistribution.of((1, ABORTED))


def test_step_assign_distribution():
    """Test a random assignment."""
    (rule,) = step(Running(parse_program("x := {1/2: 0, 1/2: 2}"), SIGMA))
    assert rule.target == MultiDistribution.of((HALF, Halted(Store.of(x=0))), (HALF, Halted(Store.of(x=2))))


def test_step_nondeterministic_choice():
    """Test that a nondeterministic choice has one rule per branch."""
    rules = step(Running(parse_program("{ tick(1) } <> { tick(3) }"), SIGMA))
    assert len(rules) == 2
    assert [rule.target.entries[0][1].cmd for rule in rules] == [Tick(Fraction(1)), Tick(Fraction(3))]


def test_step_terminal_configurations():
    """Test that halted and aborted configurations do not step."""
    assert step(Halted(SIGMA)) == []
    assert step(ABORTED) == []


def test_convex_union_keeps_duplicates():
    """Test the scaled multiset union."""
    a, b = Halted(Store.of(x=1)), Halted(Store.of(x=2))
    union = convex_union([
        (HALF, MultiDistribution.of((1, a))),
        (HALF, MultiDistribution.of((Fraction(1, 3), a), (HALF, b))),
    ])
    expected = MultiDistribution.of((HALF, a), (Fraction(1, 6), a), (Fraction(1, 4), b))
    assert union.same_multiset(expected)
    assert len(union) == 3
    assert convex_union([(1, MultiDistribution.of((1, a)))]).same_multiset(MultiDistribution.of((1, a)))
    assert len(convex_union([])) == 0


def test_step_multi():
    """Test multidistribution steps and the stutter rule."""
    running = Running(Tick(Fraction(2)), SIGMA)
    weight, mu = step_multi(MultiDistribution.of((1, running)), Scheduler.left())
    assert weight == 2
    assert mu.same_multiset(MultiDistribution.of((1, Halted(SIGMA))))

    weight, mu = step_multi(MultiDistribution.of((HALF, running), (HALF, Halted(SIGMA))), Scheduler.left())
    assert weight == 1
    assert mu.same_multiset(MultiDistribution.of((HALF, Halted(SIGMA)), (HALF, Halted(SIGMA))))

    weight, mu = step_multi(MultiDistribution.of((1, Halted(SIGMA))), Scheduler.left())
    assert weight == 0
    assert mu.same_multiset(MultiDistribution.of((1, Halted(SIGMA))))


def test_schedulers_pick_branches():
    """Test the left, right and seeded schedulers."""
    cmd = parse_program("{ tick(1) } <> { tick(3) }")
    assert step_multi(MultiDistribution.of((1, Running(cmd, SIGMA))), Scheduler.left())[1].entries[0][1].cmd \
        == Tick(Fraction(1))
    assert step_multi(MultiDistribution.of((1, Running(cmd, SIGMA))), Scheduler.right())[1].entries[0][1].cmd \
        == Tick(Fraction(3))
    seeded = Scheduler.seeded(5)
    rules = step(Running(cmd, SIGMA))
    assert seeded.select(Running(cmd, SIGMA), rules) is seeded.select(Running(cmd, SIGMA), rules)
    with pytest.raises(ValueError):
        Scheduler.demonic().select(Running(cmd, SIGMA), rules)


@pytest.mark.parametrize("n", range(0, 21))
def test_countdown_oracle(load_program, n):
    """Test that the countdown loop costs exactly n from x = n."""
    result = expected_cost_oracle(load_program("countdown.pw"), Store.of(x=n), horizon=80)
    assert result.lower == n
    assert result.live_mass == 0
    assert result.exact


def test_countdown_oracle_short_horizon(load_program):
    """Test the small-horizon countdown example."""
    result = expected_cost_oracle(load_program("countdown.pw"), Store.of(x=3), horizon=20)
    assert (result.lower, result.live_mass) == (3, 0)


def test_geometric_oracle(load_program):
    """Test the geometric loop converges to 2 from x = 1."""
    result = expected_cost_oracle(load_program("geometric.pw"), Store.of(x=1), horizon=200)
    assert 2 - result.lower <= Fraction(1, 2 ** 40)
    assert result.live_mass <= Fraction(1, 2 ** 40)
    assert result.lower <= 2


def test_biased_walk_oracle(load_program):
    """Test the biased walk against its drift value 2x."""
    result = expected_cost_oracle(load_program("biased_walk.pw"), Store.of(x=3), horizon=400)
    assert 6 - result.lower <= Fraction(1, 1000)
    assert result.lower <= 6


def test_oracle_takes_demonic_maximum():
    """Test that nondeterminism is resolved towards the larger cost."""
    result = expected_cost_oracle(parse_program("{ tick(1) } <> { tick(3) }"), Store(), horizon=2)
    assert (result.lower, result.live_mass) == (3, 0)


def test_value_oracle():
    """Test the expected value oracle on small programs."""
    assert expected_value_oracle(parse_program("x := {1/2: 0, 1/2: 2}"), Store(), Nat(Var("x")), horizon=2).lower == 1
    aborted = expected_value_oracle(Abort(), Store.of(x=5), Nat(Var("x")), horizon=5)
    assert (aborted.lower, aborted.live_mass) == (0, 0)
    skipped = expected_value_oracle(Skip(), Store.of(x=5), Nat(Var("x")), horizon=5)
    assert (skipped.lower, skipped.live_mass) == (5, 0)


def test_oracle_live_mass_at_horizon(load_program):
    """Test that truncation reports the running mass."""
    result = expected_cost_oracle(load_program("countdown.pw"), Store.of(x=10), horizon=5)
    assert result.live_mass == 1
    assert result.lower < 10


def test_oracle_configuration_budget(load_program):
    """Test that the exploration budget is enforced."""
    with pytest.raises(StateSpaceLimitError):
        expected_cost_oracle(load_program("biased_walk.pw"), Store.of(x=3), horizon=400, max_configurations=10)


def test_oracle_rejects_nonpositive_horizon():
    """Test horizon validation."""
    with pytest.raises(ValueError):
        expected_cost_oracle(Skip(), Store(), horizon=0)


def test_sample_run_countdown(load_program):
    """Test that a deterministic program has the same cost for every seed."""
    program = load_program("countdown.pw")
    for seed in range(5):
        outcome = sample_run(program, Store.of(x=3), seed, Scheduler.left())
        assert outcome.cost == 3
        assert outcome.outcome == Halted(Store.of(x=0))


def test_sample_run_abort_and_timeout(load_program):
    """Test aborted and timed-out runs."""
    aborted = sample_run(Abort(), Store(), 0, Scheduler.left())
    assert aborted.aborted and aborted.cost == 0
    timed_out = sample_run(load_program("countdown.pw"), Store.of(x=100), 0, Scheduler.left(), max_steps=10)
    assert timed_out.timed_out


def test_sample_run_is_deterministic(load_program):
    """Test that the same seed reproduces the same run."""
    program = load_program("geometric.pw")
    first = [sample_run(program, Store.of(x=1), seed, Scheduler.seeded(0)).cost for seed in range(20)]
    second = [sample_run(program, Store.of(x=1), seed, Scheduler.seeded(0)).cost for seed in range(20)]
    assert first == second


def test_geometric_sample_mean(load_program):
    """Test that the Monte Carlo mean of the geometric loop is close to 2."""
    program = load_program("geometric.pw")
    runs = 20000
    total = sum(sample_run(program, Store.of(x=1), seed, Scheduler.left()).cost for seed in range(runs))
    assert 1.9 <= float(total / runs) <= 2.1


def test_trace_run(load_program):
    """Test the multidistribution trace of the countdown loop."""
    trace = trace_run(load_program("countdown.pw"), Store.of(x=1), Scheduler.left(), steps=50)
    assert trace[0].distribution.running_mass == 1
    assert sum(item.weight for item in trace) == 1
    assert trace[-1].distribution.running_mass == 0
    assert len(trace) == 5
    lines = format_trace(trace).splitlines()
    assert lines[0].startswith("0\t0\t1: <while")
    assert lines[-1] == "4\t0\t1: {x: 0}"


def random_stores(rng: random.Random, count: int):
    return [Store({name: rng.randint(-2, 3) for name in ("x", "y", "z")}) for _ in range(count)]


@pytest.mark.parametrize("name, x", [("countdown.pw", 6), ("geometric.pw", 1), ("biased_walk.pw", 2)])
def test_oracle_lower_grows_with_horizon(load_program, name, x):
    """Test that a longer horizon never lowers the oracle value on the corpus loops."""
    program = load_program(name)
    values = [expected_cost_oracle(program, Store.of(x=x), horizon=h).lower for h in range(1, 41)]
    assert values == sorted(values)


def test_oracle_lower_grows_with_horizon_random(program_factory):
    """Test horizon monotonicity on random loop-free programs."""
    rng = random.Random(21)
    for cmd in program_factory(21).programs(60):
        for store in random_stores(rng, 3):
            values = [expected_cost_oracle(cmd, store, horizon=h).lower for h in range(1, 12)]
            assert values == sorted(values)


def _trace_cost(cmd, store, sched, steps):
    return sum(item.weight for item in trace_run(cmd, store, sched, steps))


@pytest.mark.parametrize("scheduler", [Scheduler.left(), Scheduler.right(), Scheduler.seeded(3)],
                         ids=["left", "right", "seeded"])
def test_concrete_scheduler_below_demonic_oracle(program_factory, scheduler):
    """Test that any fixed scheduler accumulates at most the demonic value over the same horizon."""
    rng = random.Random(22)
    for cmd in program_factory(22).programs(80):
        for store in random_stores(rng, 3):
            assert _trace_cost(cmd, store, scheduler, 30) <= expected_cost_oracle(cmd, store, horizon=30).lower


@pytest.mark.parametrize("scheduler", [Scheduler.left(), Scheduler.right(), Scheduler.seeded(3)],
                         ids=["left", "right", "seeded"])
def test_concrete_scheduler_below_demonic_oracle_on_loops(load_program, scheduler):
    """Test the scheduler bound on the corpus loops at a truncated horizon."""
    for name in ("countdown.pw", "geometric.pw", "biased_walk.pw"):
        program = load_program(name)
        for x in range(-1, 4):
            store = Store.of(x=x)
            assert _trace_cost(program, store, scheduler, 25) <= expected_cost_oracle(program, store, horizon=25).lower


def test_step_multi_conserves_mass(program_factory):
    """Test that halted, running and aborted mass always sum to one."""
    rng = random.Random(23)
    for cmd in program_factory(23).programs(80):
        for store in random_stores(rng, 2):
            for item in trace_run(cmd, store, Scheduler.seeded(1), 30):
                mu = item.distribution
                halted = sum((p for p, c in mu if isinstance(c, Halted)), Fraction(0))
                aborted = sum((p for p, c in mu if isinstance(c, Aborted)), Fraction(0))
                assert halted + aborted + mu.running_mass == 1
                assert mu.mass == 1
