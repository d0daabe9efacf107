"""Expression grammar for coefficient functions and boundary pairs.

Users write p, q, Delta as functions of ``x`` and the pair entries C0, C1 as
functions of ``lambda``. The grammar supports numeric literals, the constant
``pi``, the operators ``+ - * / ^`` (``^`` binds tighter than unary minus and
is right-associative), the functions sin, cos, tan, exp, sqrt, abs, and
``indicator(lo, hi)``, which is 1 on the closed interval [lo, hi] and 0
elsewhere.

Trees are frozen dataclasses, so they are hashable, comparable and safe to
share between workers.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Callable, Union

import numpy as np
import pyparsing as pp

from .errors import (
    EvaluationError,
    ExprError,
    ExprSyntaxError,
    IndicatorRangeError,
    SlotError,
    UnknownIdentifierError,
)

FUNCTIONS = ("sin", "cos", "tan", "exp", "sqrt", "abs")
SYMBOLS = ("x", "lambda")
CONSTANTS = {"pi": math.pi}


class Slot(StrEnum):
    COEFFICIENT = "coefficient"  # p, q, Delta: functions of x
    PAIR = "pair"  # C0, C1: functions of lambda


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: Expr


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call:
    fn: str
    arg: Expr


@dataclass(frozen=True)
class Indicator:
    lo: float
    hi: float


Expr = Union[Num, Sym, Const, Neg, BinOp, Call, Indicator]


# Unresolved nodes produced by the grammar; positions are kept out of equality.

@dataclass(frozen=True)
class _Name:
    name: str
    pos: int = field(compare=False)


@dataclass(frozen=True)
class _RawCall:
    name: str
    args: tuple
    pos: int = field(compare=False)


def _fold_left(tokens):
    items = list(tokens)
    node = items[0]
    for op, rhs in zip(items[1::2], items[2::2]):
        node = BinOp(op, node, rhs)
    return node


def _power_action(tokens):
    if len(tokens) == 2:
        return BinOp("^", tokens[0], tokens[1])
    return tokens[0]


@functools.cache
def _grammar() -> pp.ParserElement:
    expr = pp.Forward()
    lpar, rpar = pp.Suppress("("), pp.Suppress(")")

    number = pp.Regex(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?").set_name("number")
    number.set_parse_action(lambda s, loc, t: Num(float(t[0])))

    ident = pp.Word(pp.alphas + "_", pp.alphanums + "_").set_name("identifier")
    call = ident + lpar + pp.Group(pp.Optional(pp.DelimitedList(expr))) + rpar
    call.set_parse_action(lambda s, loc, t: _RawCall(t[0], tuple(t[1]), loc))
    name = ident.copy().set_parse_action(lambda s, loc, t: _Name(t[0], loc))

    atom = number | call | name | (lpar + expr + rpar)

    unary = pp.Forward()
    power = atom + pp.Optional(pp.Suppress("^") + unary)
    power.set_parse_action(_power_action)
    negation = (pp.Suppress("-") + unary).set_parse_action(lambda t: Neg(t[0]))
    unary <<= negation | power

    term = (unary + pp.ZeroOrMore(pp.one_of("* /") + unary)).set_parse_action(_fold_left)
    expr <<= (term + pp.ZeroOrMore(pp.one_of("+ -") + term)).set_parse_action(_fold_left)
    return expr


def _byte_offset(src: str, loc: int) -> int:
    return len(src[:loc].encode("utf-8"))


def _resolve(node, src: str) -> Expr:
    """Turn grammar placeholders into final nodes, validating names."""
    match node:
        case Num(value):
            if not math.isfinite(value):
                raise EvaluationError(f"non-finite literal {value!r}")
            return node
        case _Name(name, pos):
            if name in SYMBOLS:
                return Sym(name)
            if name in CONSTANTS:
                return Const(name)
            raise UnknownIdentifierError(name, _byte_offset(src, pos))
        case _RawCall(name, args, pos):
            if name == "indicator":
                if len(args) != 2:
                    raise ExprError(f"indicator expects 2 arguments, got {len(args)}")
                lo, hi = (_resolve(a, src) for a in args)
                if symbols(lo) or symbols(hi):
                    raise ExprError("indicator bounds must be constant")
                lo_val, hi_val = float(eval_real(lo, 0.0)), float(eval_real(hi, 0.0))
                if lo_val >= hi_val:
                    raise IndicatorRangeError(f"indicator needs lo < hi, got [{lo_val}, {hi_val}]")
                return Indicator(lo_val, hi_val)
            if name in FUNCTIONS:
                if len(args) != 1:
                    raise ExprError(f"{name} expects 1 argument, got {len(args)}")
                return Call(name, _resolve(args[0], src))
            raise UnknownIdentifierError(name, _byte_offset(src, pos))
        case Neg(operand):
            inner = _resolve(operand, src)
            # negative literals are stored as Num so to_source round-trips them
            return Num(-inner.value) if isinstance(inner, Num) else Neg(inner)
        case BinOp(op, left, right):
            return BinOp(op, _resolve(left, src), _resolve(right, src))
    raise ExprError(f"unexpected node {node!r}")


def parse(src: str, slot: Slot | None = None) -> Expr:
    """Parse an expression string, optionally validating it for a slot.

    Raises:
        ExprSyntaxError: with the byte offset and the expected token.
        UnknownIdentifierError, IndicatorRangeError, SlotError.
    """
    if not src or not src.strip():
        raise ExprSyntaxError(0, "an expression", src)
    try:
        raw = _grammar().parse_string(src, parse_all=True)[0]
    except pp.ParseException as e:
        raise ExprSyntaxError(_byte_offset(src, e.loc), e.msg.removeprefix("Expected "), src) from None
    tree = _resolve(raw, src)
    if slot is not None:
        check_slot(tree, slot)
    return tree


def check_slot(expr: Expr, slot: Slot) -> None:
    used = symbols(expr)
    if slot is Slot.COEFFICIENT and "lambda" in used:
        raise SlotError("lambda not allowed here")
    if slot is Slot.PAIR and ("x" in used or has_indicator(expr)):
        raise SlotError("x not allowed here")


def symbols(expr: Expr) -> frozenset[str]:
    match expr:
        case Sym(name):
            return frozenset({name})
        case Neg(operand) | Call(_, operand):
            return symbols(operand)
        case BinOp(_, left, right):
            return symbols(left) | symbols(right)
    return frozenset()


def has_indicator(expr: Expr) -> bool:
    match expr:
        case Indicator():
            return True
        case Neg(operand) | Call(_, operand):
            return has_indicator(operand)
        case BinOp(_, left, right):
            return has_indicator(left) or has_indicator(right)
    return False


def breakpoints(expr: Expr) -> list[float]:
    """Sorted discontinuity candidates: every indicator edge in the tree."""
    found: set[float] = set()

    def walk(node: Expr) -> None:
        match node:
            case Indicator(lo, hi):
                found.update((lo, hi))
            case Neg(operand) | Call(_, operand):
                walk(operand)
            case BinOp(_, left, right):
                walk(left)
                walk(right)

    walk(expr)
    return sorted(found)


_PRECEDENCE_SAFE = (Num, Sym, Const, Call, Indicator)


def _wrap(node: Expr) -> str:
    text = to_source(node)
    negative = isinstance(node, Num) and math.copysign(1.0, node.value) < 0
    return text if isinstance(node, _PRECEDENCE_SAFE) and not negative else f"({text})"


def to_source(expr: Expr) -> str:
    """Print a tree back to grammar text that re-parses to the same tree."""
    match expr:
        case Num(value):
            return repr(value)
        case Sym(name) | Const(name):
            return name
        case Neg(operand):
            return f"-{_wrap(operand)}"
        case BinOp(op, left, right):
            return f"{_wrap(left)} {op} {_wrap(right)}"
        case Call(fn, arg):
            return f"{fn}({to_source(arg)})"
        case Indicator(lo, hi):
            return f"indicator({lo!r}, {hi!r})"
    raise ExprError(f"unexpected node {expr!r}")


# Evaluation -----------------------------------------------------------------

_COMPLEX_FUNCS: dict[str, Callable] = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs,
}


def _real_sqrt(v):
    if np.any(np.asarray(v) < 0):
        raise EvaluationError("sqrt of a negative number")
    return np.sqrt(v)


_REAL_FUNCS: dict[str, Callable] = {**_COMPLEX_FUNCS, "sqrt": _real_sqrt}


def _divide(a, b):
    if np.any(np.asarray(b) == 0):
        raise EvaluationError("division by zero")
    return a / b


_BINARY: dict[str, Callable] = {
    "+": np.add, "-": np.subtract, "*": np.multiply, "/": _divide, "^": np.power,
}


def _build(node: Expr, symbol: str, complex_mode: bool) -> Callable:
    match node:
        case Num(value):
            const = complex(value) if complex_mode else value
            return lambda v: const
        case Const(name):
            const = complex(CONSTANTS[name]) if complex_mode else CONSTANTS[name]
            return lambda v: const
        case Sym(name):
            if name != symbol:
                raise SlotError(f"{name} not allowed here")
            return lambda v: v
        case Neg(operand):
            inner = _build(operand, symbol, complex_mode)
            return lambda v: -inner(v)
        case BinOp(op, left, right):
            f, g, fn = _build(left, symbol, complex_mode), _build(right, symbol, complex_mode), _BINARY[op]
            if op == "^" and not complex_mode:
                return lambda v: np.power(np.asarray(f(v), dtype=float), g(v))
            return lambda v: fn(f(v), g(v))
        case Call(name, arg):
            inner = _build(arg, symbol, complex_mode)
            fn = (_COMPLEX_FUNCS if complex_mode else _REAL_FUNCS)[name]
            return lambda v: fn(inner(v))
        case Indicator(lo, hi):
            if symbol != "x":
                raise SlotError("x not allowed here")
            if complex_mode:
                return lambda v: ((np.real(v) >= lo) & (np.real(v) <= hi)) * (1.0 + 0j)
            return lambda v: ((v >= lo) & (v <= hi)) * 1.0
    raise ExprError(f"unexpected node {node!r}")


def _checked(fn: Callable) -> Callable:
    def evaluate(v):
        with np.errstate(all="ignore"):
            out = fn(v)
        if not np.all(np.isfinite(out)):
            raise EvaluationError("non-finite result")
        return out
    return evaluate


@functools.lru_cache(maxsize=256)
def compile_real(expr: Expr, symbol: str = "x") -> Callable:
    """Vectorized real evaluator for ``expr`` bound to ``symbol``."""
    return _checked(_build(expr, symbol, complex_mode=False))


@functools.lru_cache(maxsize=256)
def compile_complex(expr: Expr, symbol: str = "lambda") -> Callable:
    """Vectorized complex evaluator; sqrt uses the principal branch."""
    return _checked(_build(expr, symbol, complex_mode=True))


def eval_real(expr: Expr, value, symbol: str = "x"):
    return compile_real(expr, symbol)(value)


def eval_complex(expr: Expr, value, symbol: str = "lambda"):
    return compile_complex(expr, symbol)(np.asarray(value, dtype=complex) if np.ndim(value) else complex(value))
