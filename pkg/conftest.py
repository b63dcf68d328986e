"""
Shared fixtures for the analyzer test suite.
"""

import os
import random
from fractions import Fraction
from typing import Callable, List

import pytest

from app.core.analysis import LoopAnalyzer
from app.core.analysis_service import AnalysisService
from app.core.models import RunConfig
from app.core.syntax import (
    TRUE, Abort, And, Assign, Command, Compare, Dist, If, IntAdd, IntExpr, IntMul, IntSub,
    NdChoice, Not, Num, PChoice, Skip, Tick, Var, seq,
)
from app.infrastructure.program_parser import parse_program

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")

VARIABLES = ("x", "y", "z")

DISTRIBUTIONS = (
    (Fraction(1, 2), Fraction(1, 2)),
    (Fraction(1, 3), Fraction(2, 3)),
    (Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)),
)

PROBABILITIES = (Fraction(0), Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(1))


class ProgramFactory:
    """
    Random loop-free programs with right-associated sequences.

    ``ticks=False`` replaces ticks by skip; ``aborts=False`` drops abort and
    keeps conditional invariants true, so that every run halts.
    """

    def __init__(self, seed: int, ticks: bool = True, aborts: bool = True):
        self.rng = random.Random(seed)
        self.ticks = ticks
        self.aborts = aborts

    def int_expr(self, depth: int = 2) -> IntExpr:
        rng = self.rng
        if depth == 0 or rng.random() < 0.4:
            return Var(rng.choice(VARIABLES)) if rng.random() < 0.6 else Num(rng.randint(0, 3))
        kind = rng.choice((IntAdd, IntSub, IntMul))
        if kind is IntMul:
            return IntMul(Num(rng.randint(0, 2)), self.int_expr(depth - 1))
        return kind(self.int_expr(depth - 1), self.int_expr(depth - 1))

    def condition(self):
        rng = self.rng
        atom = Compare(rng.choice(("<", "<=", "=", ">=", ">", "!=")), Var(rng.choice(VARIABLES)),
                       Num(rng.randint(-1, 2)))
        roll = rng.random()
        if roll < 0.15:
            return Not(atom)
        if roll < 0.3:
            return And(atom, Compare(">=", Var(rng.choice(VARIABLES)), Num(rng.randint(-2, 1))))
        return atom

    def dist(self) -> Dist:
        if self.rng.random() < 0.5:
            return Dist.dirac(self.int_expr())
        probabilities = self.rng.choice(DISTRIBUTIONS)
        return Dist(tuple((p, self.int_expr()) for p in probabilities))

    def statement(self, depth: int) -> Command:
        rng = self.rng
        simple = ("skip", "tick", "assign", "assign", "abort")
        kinds = simple if depth == 0 else simple + ("if", "nd", "prob", "prob")
        kind = rng.choice(kinds)
        if kind == "abort" and (rng.random() < 0.7 or not self.aborts):
            kind = "tick"
        if kind == "tick" and not self.ticks:
            kind = "skip"
        match kind:
            case "skip":
                return Skip()
            case "abort":
                return Abort()
            case "tick":
                return Tick(Fraction(rng.randint(0, 4), rng.choice((1, 2))))
            case "assign":
                return Assign(rng.choice(VARIABLES), self.dist())
            case "if":
                inv = TRUE
                if rng.random() >= 0.8 and self.aborts:
                    inv = Compare(">=", Var(rng.choice(VARIABLES)), Num(-1))
                return If(inv, self.condition(), self.block(depth - 1), self.block(depth - 1))
            case "nd":
                return NdChoice(self.block(depth - 1), self.block(depth - 1))
        return PChoice(rng.choice(PROBABILITIES), self.block(depth - 1), self.block(depth - 1))

    def block(self, depth: int = 2) -> Command:
        return seq(*(self.statement(depth) for _ in range(self.rng.randint(1, 3))))

    def programs(self, count: int, depth: int = 2) -> List[Command]:
        return [self.block(depth) for _ in range(count)]


@pytest.fixture
def program_factory() -> Callable[[int], ProgramFactory]:
    return ProgramFactory


@pytest.fixture
def load_program() -> Callable[[str], Command]:
    def load(name: str) -> Command:
        with open(os.path.join(DATA_DIR, name), "r", encoding="utf-8") as file:
            return parse_program(file.read())
    return load


@pytest.fixture
def data_path() -> Callable[[str], str]:
    return lambda name: os.path.join(DATA_DIR, name)


@pytest.fixture
def run_config() -> RunConfig:
    """Small grid and sample counts so that end-to-end runs stay quick."""
    return RunConfig(grid_values=[0, 1, 2, 3, 5], refute_samples=300, max_grid_stores=36)


@pytest.fixture
def service(run_config: RunConfig) -> AnalysisService:
    return AnalysisService(run_config)


@pytest.fixture
def analyzer() -> LoopAnalyzer:
    return LoopAnalyzer(refute_samples=500)
