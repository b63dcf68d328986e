"""
Concrete syntax of pWhile programs and cost expressions, parsed with lark.
"""

import logging
from fractions import Fraction
from typing import List, Optional, Tuple

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, VisitError

from app.core.exceptions import ProgramSyntaxError
from app.core.syntax import (
    Abort, And, Assign, BoolLit, Coeff, Command, Compare, CostAdd, CostConst, CostExpr,
    CostMax, CostMul, Dist, If, IntAdd, IntMul, IntSub, Iverson, Nat, NdChoice, Not, Num,
    Or, PChoice, Seq, Skip, Tick, Var, While, label_loops,
)

logger = logging.getLogger(__name__)

GRAMMAR = r"""
    program: cmd

    cmd: stmt (";" stmt)* ";"?

    ?stmt: "skip"                                        -> skip
         | "abort"                                       -> abort
         | "tick" "(" rat ")"                            -> tick
         | NAME ":=" dist                                -> assign
         | "if" "[" bexp "]" "(" bexp ")" block block    -> if_
         | "while" "[" bexp "]" "(" bexp ")" block       -> while_
         | block "<>" block                              -> ndchoice
         | block "[" rat "]" block                       -> pchoice

    block: "{" cmd "}"

    dist: iexp                                           -> dirac
        | "{" branch ("," branch)* "}"                   -> finite

    branch: rat ":" iexp

    rat: INT                                             -> integer
       | INT "/" INT                                     -> ratio

    ?iexp: iexp "+" term                                 -> add
         | iexp "-" term                                 -> sub
         | term

    ?term: term "*" unary                                -> mul
         | unary

    ?unary: "-" unary                                    -> neg
          | iatom

    ?iatom: NAME                                         -> var
          | INT                                          -> num
          | "(" iexp ")"

    ?bexp: bexp "or" bconj                               -> or_
         | bconj

    ?bconj: bconj "and" bneg                             -> and_
          | bneg

    ?bneg: "not" bneg                                    -> not_
         | batom

    ?batom: "true"                                       -> true
          | "false"                                      -> false
          | iexp CMP iexp                                -> compare
          | "(" bexp ")"

    costexpr: cexp

    ?cexp: cexp "+" cprod                                -> cadd
         | cprod

    ?cprod: cprod "*" cunit                              -> cmul
          | cunit

    ?cunit: "[" bexp "]" "*" cunit                       -> iverson
          | catom

    ?catom: rat                                          -> cconst
          | "nat" "(" iexp ")"                           -> nat
          | "max" "(" cexp "," cexp ")"                  -> cmax
          | COEFF                                        -> coeff
          | "(" cexp ")"

    NAME: /(?!(skip|abort|tick|if|while|true|false|and|or|not|nat|max)\b)[a-zA-Z_][a-zA-Z0-9_]*/
    COEFF: /\?[a-zA-Z_][a-zA-Z0-9_]*/
    CMP: "<=" | ">=" | "!=" | "<" | ">" | "="
    COMMENT: /#[^\n]*/

    %import common.INT
    %import common.WS
    %ignore WS
    %ignore COMMENT
"""


def _position(meta) -> Tuple[Optional[int], Optional[int]]:
    if meta is None or getattr(meta, "empty", True):
        return None, None
    return meta.line, meta.column


class _AstBuilder(Transformer):
    """Turns lark parse trees into syntax nodes, validating probabilities on the way."""

    # rationals -------------------------------------------------------------

    @v_args(inline=True)
    def integer(self, token):
        return Fraction(int(token))

    @v_args(inline=True)
    def ratio(self, numerator, denominator):
        if int(denominator) == 0:
            raise ProgramSyntaxError("division by zero in rational literal",
                                     denominator.line, denominator.column)
        return Fraction(int(numerator), int(denominator))

    # integer expressions ---------------------------------------------------

    @v_args(inline=True)
    def var(self, token):
        return Var(str(token))

    @v_args(inline=True)
    def num(self, token):
        return Num(int(token))

    @v_args(inline=True)
    def add(self, left, right):
        return IntAdd(left, right)

    @v_args(inline=True)
    def sub(self, left, right):
        return IntSub(left, right)

    @v_args(inline=True)
    def mul(self, left, right):
        return IntMul(left, right)

    @v_args(inline=True)
    def neg(self, operand):
        if isinstance(operand, Num):
            return Num(-operand.value)
        return IntSub(Num(0), operand)

    # Boolean expressions ---------------------------------------------------

    def true(self, _children):
        return BoolLit(True)

    def false(self, _children):
        return BoolLit(False)

    @v_args(inline=True)
    def compare(self, left, op, right):
        return Compare(str(op), left, right)

    @v_args(inline=True)
    def and_(self, left, right):
        return And(left, right)

    @v_args(inline=True)
    def or_(self, left, right):
        return Or(left, right)

    @v_args(inline=True)
    def not_(self, operand):
        return Not(operand)

    # distributions ---------------------------------------------------------

    @v_args(inline=True)
    def dirac(self, expr):
        return Dist.dirac(expr)

    @v_args(inline=True)
    def branch(self, prob, expr):
        return prob, expr

    @v_args(meta=True)
    def finite(self, meta, branches):
        line, column = _position(meta)
        for prob, _ in branches:
            if prob <= 0 or prob > 1:
                raise ProgramSyntaxError(f"distribution probability {prob} outside (0, 1]", line, column)
        total = sum((prob for prob, _ in branches), Fraction(0))
        if total != 1:
            raise ProgramSyntaxError(f"distribution probabilities sum to {total}, expected 1", line, column)
        return Dist(tuple(branches))

    # commands --------------------------------------------------------------

    def skip(self, _children):
        return Skip()

    def abort(self, _children):
        return Abort()

    @v_args(inline=True)
    def tick(self, rate):
        return Tick(rate)

    @v_args(inline=True)
    def assign(self, name, dist):
        return Assign(str(name), dist)

    @v_args(inline=True)
    def if_(self, inv, guard, then, orelse):
        return If(inv, guard, then, orelse)

    @v_args(inline=True)
    def while_(self, inv, guard, body):
        return While(inv, guard, body)

    @v_args(inline=True)
    def ndchoice(self, left, right):
        return NdChoice(left, right)

    @v_args(meta=True)
    def pchoice(self, meta, children):
        left, prob, right = children
        if prob < 0 or prob > 1:
            line, column = _position(meta)
            raise ProgramSyntaxError(f"choice probability {prob} outside [0, 1]", line, column)
        return PChoice(prob, left, right)

    @v_args(inline=True)
    def block(self, cmd):
        return cmd

    def cmd(self, statements: List[Command]) -> Command:
        result = statements[-1]
        for statement in reversed(statements[:-1]):
            result = Seq(statement, result)
        return result

    @v_args(inline=True)
    def program(self, cmd):
        return cmd

    # cost expressions ------------------------------------------------------

    @v_args(inline=True)
    def cconst(self, value):
        return CostConst(value)

    @v_args(inline=True)
    def nat(self, arg):
        return Nat(arg)

    @v_args(inline=True)
    def iverson(self, cond, body):
        return Iverson(cond, body)

    @v_args(inline=True)
    def cadd(self, left, right):
        return CostAdd(left, right)

    @v_args(inline=True)
    def cmul(self, left, right):
        return CostMul(left, right)

    @v_args(inline=True)
    def cmax(self, left, right):
        return CostMax(left, right)

    @v_args(inline=True)
    def coeff(self, token):
        return Coeff(str(token)[1:])

    @v_args(inline=True)
    def costexpr(self, expr):
        return expr


class ProgramParser:
    """Handles parsing of program and cost-expression sources."""

    _lark: Optional[Lark] = None

    @classmethod
    def _parser(cls) -> Lark:
        if cls._lark is None:
            cls._lark = Lark(GRAMMAR, start=["program", "costexpr"], propagate_positions=True)
        return cls._lark

    @classmethod
    def _parse(cls, text: str, start: str):
        try:
            tree = cls._parser().parse(text, start=start)
            return _AstBuilder().transform(tree)
        except VisitError as e:
            if isinstance(e.orig_exc, ProgramSyntaxError):
                raise e.orig_exc from None
            raise
        except UnexpectedEOF as e:
            lines = text.splitlines() or [""]
            raise ProgramSyntaxError("unexpected end of input", len(lines), len(lines[-1]) + 1) from None
        except UnexpectedCharacters as e:
            raise ProgramSyntaxError(f"unexpected character {e.char!r}",
                                     e.line, e.column) from None
        except UnexpectedInput as e:
            line = getattr(e, "line", None)
            column = getattr(e, "column", None)
            token = getattr(e, "token", None)
            message = f"unexpected token {str(token)!r}" if token is not None else "unexpected input"
            raise ProgramSyntaxError(message, line, column) from None

    @classmethod
    def parse_program(cls, text: str) -> Command:
        """
        Parse program source into a command with labelled loops.

        Args:
            text: Program source

        Returns:
            Command: Parsed program; loops carry labels ``loop0``, ``loop1``, ... in pre-order
        """
        cmd = label_loops(cls._parse(text, "program"))
        logger.debug(f"Parsed program with {len(text.splitlines())} source lines")
        return cmd

    @classmethod
    def parse_cost_expr(cls, text: str) -> CostExpr:
        """Parse a cost expression such as ``1/2*nat(x) + [x > 0]*?q``."""
        return cls._parse(text, "costexpr")


def parse_program(text: str) -> Command:
    return ProgramParser.parse_program(text)


def parse_cost_expr(text: str) -> CostExpr:
    return ProgramParser.parse_cost_expr(text)
