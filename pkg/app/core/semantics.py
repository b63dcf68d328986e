"""
Operational semantics: the weighted one-step reduction over configurations,
multidistribution reduction, exhaustive expected cost / value oracles and
Monte Carlo sampling.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

from app.core.exceptions import StateSpaceLimitError
from app.core.syntax import (
    Abort, Assign, Command, CostExpr, If, NdChoice, PChoice, Seq, Skip, Store, Tick, While,
    eval_bexp, eval_cost, eval_dist, print_command,
)

logger = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Configurations, multidistributions, rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Running:
    cmd: Command
    store: Store

    def __str__(self) -> str:
        return f"<{print_command(self.cmd)}>({self.store!r})"


@dataclass(frozen=True)
class Halted:
    store: Store

    def __str__(self) -> str:
        return repr(self.store)


@dataclass(frozen=True)
class Aborted:
    def __str__(self) -> str:
        return "⊥"


Configuration = Union[Running, Halted, Aborted]
ABORTED = Aborted()


@dataclass(frozen=True)
class MultiDistribution:
    """Finite multiset of probability-weighted configurations; duplicates stay distinct."""
    entries: Tuple[Tuple[Fraction, Configuration], ...] = ()

    @classmethod
    def of(cls, *entries: Tuple[Fraction, Configuration]) -> "MultiDistribution":
        return cls(tuple((Fraction(p), c) for p, c in entries if p != 0))

    @property
    def mass(self) -> Fraction:
        return sum((p for p, _ in self.entries), ZERO)

    @property
    def running_mass(self) -> Fraction:
        return sum((p for p, c in self.entries if isinstance(c, Running)), ZERO)

    def __iter__(self) -> Iterator[Tuple[Fraction, Configuration]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def same_multiset(self, other: "MultiDistribution") -> bool:
        remaining = list(other.entries)
        for entry in self.entries:
            if entry not in remaining:
                return False
            remaining.remove(entry)
        return not remaining

    def __str__(self) -> str:
        return "{{" + ", ".join(f"{p}: {c}" for p, c in self.entries) + "}}"


@dataclass(frozen=True)
class WeightedRule:
    weight: Fraction
    target: MultiDistribution


def _dirac(weight, config: Configuration) -> List[WeightedRule]:
    return [WeightedRule(Fraction(weight), MultiDistribution.of((ONE, config)))]


def _lift(config: Configuration, continuation: Command) -> Configuration:
    if isinstance(config, Running):
        return Running(Seq(config.cmd, continuation), config.store)
    if isinstance(config, Halted):
        return Running(continuation, config.store)
    return config


def step(config: Configuration) -> List[WeightedRule]:
    """
    All one-step reductions of a configuration.

    Returns:
        List[WeightedRule]: Two rules for a nondeterministic choice at the head,
        one rule for every other running configuration, none for halted or aborted ones
    """
    if not isinstance(config, Running):
        return []
    cmd, store = config.cmd, config.store
    match cmd:
        case Skip():
            return _dirac(0, Halted(store))
        case Abort():
            return _dirac(0, ABORTED)
        case Tick(rate):
            return _dirac(rate, Halted(store))
        case Assign(var, dist):
            outcomes = eval_dist(dist, store)
            target = MultiDistribution.of(*((p, Halted(store.assign(var, v))) for v, p in outcomes.items()))
            return [WeightedRule(ZERO, target)]
        case If(inv, guard, then, orelse):
            if not eval_bexp(inv, store):
                return _dirac(0, ABORTED)
            return _dirac(0, Running(then if eval_bexp(guard, store) else orelse, store))
        case While(inv, guard, body):
            if not eval_bexp(inv, store):
                return _dirac(0, ABORTED)
            if eval_bexp(guard, store):
                return _dirac(0, Running(Seq(body, cmd), store))
            return _dirac(0, Halted(store))
        case NdChoice(left, right):
            return _dirac(0, Running(left, store)) + _dirac(0, Running(right, store))
        case PChoice(prob, left, right):
            target = MultiDistribution.of((prob, Running(left, store)), (ONE - prob, Running(right, store)))
            return [WeightedRule(ZERO, target)]
        case Seq(first, second):
            rules = []
            for rule in step(Running(first, store)):
                lifted = tuple((p, _lift(c, second)) for p, c in rule.target)
                rules.append(WeightedRule(rule.weight, MultiDistribution(lifted)))
            return rules
    raise TypeError(f"not a command: {cmd!r}")


def convex_union(parts: Sequence[Tuple[Fraction, MultiDistribution]]) -> MultiDistribution:
    """Scaled multiset union; equal entries are kept apart."""
    entries = []
    for prob, dist in parts:
        for p, config in dist:
            entries.append((Fraction(prob) * p, config))
    return MultiDistribution(tuple(entries))


# ---------------------------------------------------------------------------
# Schedulers
# ---------------------------------------------------------------------------

class Scheduler:
    """
    Resolves nondeterministic choice.

    A concrete scheduler maps a configuration and its rules to the index of the
    selected rule; the demonic scheduler is symbolic and only meaningful to the oracles.
    """

    def __init__(self, name: str, choose: Optional[Callable[[Configuration, List[WeightedRule]], int]] = None):
        self.name = name
        self._choose = choose

    @property
    def is_demonic(self) -> bool:
        return self._choose is None

    def select(self, config: Configuration, rules: List[WeightedRule]) -> WeightedRule:
        if self._choose is None:
            raise ValueError("the demonic scheduler cannot drive a concrete run")
        if len(rules) == 1:
            return rules[0]
        return rules[self._choose(config, rules)]

    @classmethod
    def demonic(cls) -> "Scheduler":
        return cls("demonic")

    @classmethod
    def left(cls) -> "Scheduler":
        return cls("left", lambda config, rules: 0)

    @classmethod
    def right(cls) -> "Scheduler":
        return cls("right", lambda config, rules: len(rules) - 1)

    @classmethod
    def seeded(cls, seed: int) -> "Scheduler":
        """Deterministic per configuration: the choice depends only on the seed and the configuration."""
        def choose(config: Configuration, rules: List[WeightedRule]) -> int:
            return random.Random(f"{seed}|{config}").randrange(len(rules))
        return cls(f"seeded({seed})", choose)

    def __repr__(self) -> str:
        return f"Scheduler({self.name})"


def step_multi(mu: MultiDistribution, sched: Scheduler) -> Tuple[Fraction, MultiDistribution]:
    """Advance every running entry by its scheduled rule; terminal entries stutter."""
    weight = ZERO
    entries = []
    for p, config in mu:
        rules = step(config)
        if not rules:
            entries.append((p, config))
            continue
        rule = sched.select(config, rules)
        weight += p * rule.weight
        entries.extend((p * q, target) for q, target in rule.target)
    return weight, MultiDistribution(tuple(entries))


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleResult:
    """Accumulated expectation after ``horizon`` steps and the mass still running."""
    lower: Fraction
    live_mass: Fraction

    @property
    def exact(self) -> bool:
        return self.live_mass == 0


class _Explorer:
    """Layered forward exploration followed by backward value iteration."""

    def __init__(self, max_configurations: int):
        self.max_configurations = max_configurations
        self._rules: Dict[Configuration, List[WeightedRule]] = {}

    def rules(self, config: Configuration) -> List[WeightedRule]:
        rules = self._rules.get(config)
        if rules is None:
            rules = step(config)
            self._rules[config] = rules
        return rules

    def run(self, start: Configuration, horizon: int, terminal: Callable[[Store], Fraction],
            count_cost: bool) -> OracleResult:
        layers: List[List[Configuration]] = [[start]]
        total = 1
        for _ in range(horizon):
            seen: Dict[Configuration, None] = {}
            for config in layers[-1]:
                if not isinstance(config, Running):
                    continue
                for rule in self.rules(config):
                    for _, target in rule.target:
                        if isinstance(target, Running):
                            seen.setdefault(target)
            if not seen:
                break
            total += len(seen)
            if total > self.max_configurations:
                raise StateSpaceLimitError(
                    f"oracle exploration exceeded {self.max_configurations} configurations")
            layers.append(list(seen))

        def leaf(config: Configuration) -> Tuple[Fraction, Fraction]:
            if isinstance(config, Halted):
                return terminal(config.store), ZERO
            return ZERO, ZERO

        later: Dict[Configuration, Tuple[Fraction, Fraction]] = {}
        for depth in range(len(layers) - 1, -1, -1):
            remaining = horizon - depth
            current: Dict[Configuration, Tuple[Fraction, Fraction]] = {}
            for config in layers[depth]:
                if not isinstance(config, Running):
                    current[config] = leaf(config)
                    continue
                if remaining == 0:
                    current[config] = (ZERO, ONE)
                    continue
                best_value, best_live = None, None
                for rule in self.rules(config):
                    value = rule.weight if count_cost else ZERO
                    live = ZERO
                    for p, target in rule.target:
                        if isinstance(target, Running):
                            v, l = later.get(target, (ZERO, ONE))
                        else:
                            v, l = leaf(target)
                        value += p * v
                        live += p * l
                    best_value = value if best_value is None else max(best_value, value)
                    best_live = live if best_live is None else max(best_live, live)
                current[config] = (best_value, best_live)
            later = current
        value, live = later[start]
        logger.debug(f"Oracle explored {total} configurations over {len(layers) - 1} layers")
        return OracleResult(value, live)


def expected_cost_oracle(cmd: Command, store: Store, horizon: int = 200,
                         max_configurations: int = 200000) -> OracleResult:
    """
    Expected cost of ``cmd`` from ``store`` under demonic nondeterminism, truncated at ``horizon`` steps.

    Args:
        cmd: Program
        store: Initial store
        horizon: Number of multidistribution steps
        max_configurations: Exploration budget

    Returns:
        OracleResult: Lower bound on the expected cost and the running mass at the horizon
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    return _Explorer(max_configurations).run(Running(cmd, store), horizon, lambda _: ZERO, True)


def expected_value_oracle(cmd: Command, store: Store, f: CostExpr, horizon: int = 200,
                          max_configurations: int = 200000) -> OracleResult:
    """Expected value of ``f`` over normally halted mass, truncated at ``horizon`` steps."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    return _Explorer(max_configurations).run(
        Running(cmd, store), horizon, lambda s: eval_cost(f, s), False)


# ---------------------------------------------------------------------------
# Sampling and traces
# ---------------------------------------------------------------------------

TIMEOUT = "timeout"


@dataclass(frozen=True)
class SampleOutcome:
    cost: Fraction
    outcome: Union[Halted, Aborted, str]

    @property
    def aborted(self) -> bool:
        return isinstance(self.outcome, Aborted)

    @property
    def timed_out(self) -> bool:
        return self.outcome == TIMEOUT


def _draw(rng: random.Random, target: MultiDistribution) -> Configuration:
    denominator = lcm(*(p.denominator for p, _ in target))
    ticket = rng.randrange(denominator)
    cumulative = 0
    for p, config in target:
        cumulative += p.numerator * (denominator // p.denominator)
        if ticket < cumulative:
            return config
    return target.entries[-1][1]


def sample_run(cmd: Command, store: Store, seed: int, sched: Scheduler, max_steps: int = 10000) -> SampleOutcome:
    """One pseudo-random trajectory; deterministic given ``seed`` and ``sched``."""
    rng = random.Random(seed)
    config: Configuration = Running(cmd, store)
    cost = ZERO
    for _ in range(max_steps):
        if not isinstance(config, Running):
            return SampleOutcome(cost, config)
        rule = sched.select(config, step(config))
        cost += rule.weight
        config = _draw(rng, rule.target)
    if isinstance(config, Running):
        return SampleOutcome(cost, TIMEOUT)
    return SampleOutcome(cost, config)


@dataclass(frozen=True)
class TraceStep:
    index: int
    weight: Fraction
    distribution: MultiDistribution


def trace_run(cmd: Command, store: Store, sched: Scheduler, steps: int) -> List[TraceStep]:
    """Multidistribution trajectory from ``{{1: <cmd>(store)}}``, stopping early once nothing runs."""
    mu = MultiDistribution.of((ONE, Running(cmd, store)))
    trace = [TraceStep(0, ZERO, mu)]
    for index in range(1, steps + 1):
        if mu.running_mass == 0:
            break
        weight, mu = step_multi(mu, sched)
        trace.append(TraceStep(index, weight, mu))
    return trace


def format_trace(trace: Sequence[TraceStep]) -> str:
    lines = []
    for item in trace:
        entries = "; ".join(f"{p}: {c}" for p, c in item.distribution)
        lines.append(f"{item.index}\t{item.weight}\t{entries}")
    return "\n".join(lines)
