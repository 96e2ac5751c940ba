"""Scalar expression language for metric and tensor components.

Grammar (whitespace ignored)::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | power
    power    := atom ('^' ['-'] NUMBER)?
    atom     := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Exponents are numeric literals, so ``z^0.5`` and ``z^-1`` are fine but
``z^x`` is not.  There is no implicit multiplication: ``2z`` is an error.

Domain predicates, used for chart domains, are conjunctions of comparisons::

    predicate := comparison ('and' comparison)*
    comparison := expr ('>' | '<') expr
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import jets
from .jets import Jet, JetDomainError

FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos", "tan")


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, text: str, offset: int, expected: str | None = None):
        self.text = text
        self.offset = offset
        self.expected = expected
        detail = f"{message} at offset {offset}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(f"{detail}: {text!r}")


class UnknownFunctionError(ExprSyntaxError):
    pass


class UnboundNameError(ExprError):
    pass


class ExprDomainError(ExprError):
    def __init__(self, subexpr: str, cause: JetDomainError):
        self.subexpr = subexpr
        self.cause = cause
        super().__init__(f"in {subexpr!r}: {cause}")


# AST ----------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: float


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]


@dataclass(frozen=True)
class Comparison:
    op: str  # '>' or '<'
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Predicate:
    terms: tuple[Comparison, ...]


# tokenizer ----------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()<>])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, name, op, end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _fail(self, expected: str):
        tok = self.tok
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"unexpected {what}", self.text, tok.pos, expected)

    def _accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def _expect(self, text: str) -> None:
        if not self._accept(text):
            self._fail(repr(text))

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self._accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self._accept("^"):
            sign = -1.0 if self._accept("-") else 1.0
            if self.tok.kind != "num":
                self._fail("numeric exponent")
            exponent = sign * float(self.tok.text)
            self.i += 1
            if self.tok.kind == "op" and self.tok.text == "^":
                self._fail("operator; chained exponents need parentheses")
            return Pow(base, exponent)
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            node: Expr = Num(float(tok.text))
        elif tok.kind == "name":
            self.i += 1
            if self._accept("("):
                if tok.text not in FUNCTIONS:
                    raise UnknownFunctionError(
                        f"unknown function {tok.text!r}", self.text, tok.pos, ", ".join(FUNCTIONS)
                    )
                arg = self.expr()
                self._expect(")")
                node = Call(tok.text, arg)
            else:
                node = Var(tok.text)
        elif self._accept("("):
            node = self.expr()
            self._expect(")")
        else:
            self._fail("number, name or '('")
        if self.tok.kind in ("num", "name") or (self.tok.kind == "op" and self.tok.text == "("):
            self._fail("operator (implicit multiplication is not supported)")
        return node

    def comparison(self) -> Comparison:
        left = self.expr()
        if self.tok.kind == "op" and self.tok.text in "<>":
            op = self.tok.text
            self.i += 1
        else:
            self._fail("'>' or '<'")
        return Comparison(op, left, self.expr())

    def finish(self) -> None:
        if self.tok.kind != "end":
            self._fail("operator or end of input")


def parse(text: str) -> Expr:
    p = _Parser(text)
    node = p.expr()
    p.finish()
    return node


def parse_predicate(text: str) -> Predicate:
    # 'and' is a keyword only at the predicate level
    pieces = re.split(r"\band\b", text)
    terms = []
    offset = 0
    for piece in pieces:
        try:
            p = _Parser(piece)
            terms.append(p.comparison())
            p.finish()
        except ExprSyntaxError as exc:
            raise ExprSyntaxError(
                "bad domain predicate", text, offset + exc.offset, exc.expected
            ) from None
        offset += len(piece) + 3
    return Predicate(tuple(terms))


# printing -----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def _num(value: float) -> str:
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def to_string(node: Expr) -> str:
    if isinstance(node, Num):
        return _num(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_string(node.arg)})"
    if isinstance(node, Neg):
        inner = to_string(node.arg)
        return f"-({inner})" if _prec(node.arg) < 3 else f"-{inner}"
    if isinstance(node, Pow):
        base = to_string(node.base)
        if _prec(node.base) < 5:
            base = f"({base})"
        return f"{base}^{_num(node.exponent)}"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        left = to_string(node.left)
        right = to_string(node.right)
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an expression node: {node!r}")


def predicate_to_string(pred: Predicate) -> str:
    return " and ".join(f"{to_string(c.left)} {c.op} {to_string(c.right)}" for c in pred.terms)


# analysis -----------------------------------------------------------------

def names(node: Expr) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, (Neg, Call)):
        return names(node.arg)
    if isinstance(node, Pow):
        return names(node.base)
    if isinstance(node, BinOp):
        return names(node.left) | names(node.right)
    raise TypeError(f"not an expression node: {node!r}")


def bind(node: Expr, coords: Sequence[str]) -> Expr:
    """Check that every identifier is a declared coordinate; returns ``node``."""
    unknown = names(node) - set(coords)
    if unknown:
        raise UnboundNameError(
            f"undeclared coordinate(s) {sorted(unknown)} in {to_string(node)!r}; "
            f"declared: {list(coords)}"
        )
    return node


def is_zero(node: Expr) -> bool:
    return isinstance(node, Num) and node.value == 0.0


# evaluation ---------------------------------------------------------------

def _eval(node: Expr, env: dict[str, Jet], proto: Jet) -> Jet:
    if isinstance(node, Num):
        return Jet.constant(node.value, proto.nvars, proto.order)
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise UnboundNameError(f"undeclared coordinate {node.name!r}") from None
    if isinstance(node, Neg):
        return -_eval(node.arg, env, proto)
    if isinstance(node, BinOp):
        a = _eval(node.left, env, proto)
        b = _eval(node.right, env, proto)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        try:
            return a / b
        except JetDomainError as exc:
            raise ExprDomainError(to_string(node), exc) from None
    try:
        if isinstance(node, Pow):
            return jets.power(_eval(node.base, env, proto), node.exponent)
        if isinstance(node, Call):
            return jets.FUNCTIONS[node.func](_eval(node.arg, env, proto))
    except JetDomainError as exc:
        raise ExprDomainError(to_string(node), exc) from None
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Expr, point: Sequence[float], coords: Sequence[str], order: int) -> Jet:
    """Jet of ``node`` at ``point``; ``coords`` names the jet variables in order."""
    if len(point) != len(coords):
        raise ValueError(f"point has {len(point)} entries but there are {len(coords)} coordinates")
    seeds = jets.variables(point, order)
    env = dict(zip(coords, seeds))
    return _eval(node, env, seeds[0])


def evaluate_many(nodes, point: Sequence[float], coords: Sequence[str], order: int) -> Jet:
    """Evaluate an array (nested lists / object ndarray) of expressions into one jet array."""
    arr = np.asarray(nodes, dtype=object)
    seeds = jets.variables(point, order)
    env = dict(zip(coords, seeds))
    proto = seeds[0]
    out = np.zeros(arr.shape + (proto.coeffs.shape[-1],))
    cache: dict[Expr, Jet] = {}
    for idx in np.ndindex(arr.shape):
        node = arr[idx]
        if is_zero(node):
            continue
        jet = cache.get(node)
        if jet is None:
            jet = _eval(node, env, proto)
            cache[node] = jet
        out[idx] = jet.coeffs
    return Jet(out, len(coords), order)


def value(node: Expr, point: Sequence[float], coords: Sequence[str]) -> float:
    return evaluate(node, point, coords, 0).value


def predicate_margin(pred: Predicate, point: Sequence[float], coords: Sequence[str]) -> float:
    """Smallest signed slack over the comparisons (positive when all hold)."""
    slack = np.inf
    for c in pred.terms:
        left = value(c.left, point, coords)
        right = value(c.right, point, coords)
        s = left - right if c.op == ">" else right - left
        slack = min(slack, s)
    return float(slack)


def parse_number(text: str) -> float:
    """Parse a constant expression such as ``-2.5`` or ``1/3`` to a float."""
    node = parse(text)
    if names(node):
        raise ExprError(f"expected a constant, got {text!r}")
    return evaluate(node, [0.0], ["_"], 0).value
