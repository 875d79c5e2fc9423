"""A tiny arithmetic grammar for coefficients and admissibility constraints.

Supported: numbers, parameter names, ``+ - * / ^`` (power is
right-associative), parentheses, ``abs(...)``, and chained comparisons with
``<`` and ``<=`` for constraints.  That is enough to express every
coefficient and constraint in the inequality catalog while staying
trivially portable.

Arithmetic expressions evaluate to floats, comparison chains to booleans.
``expand_polynomial`` turns an expression that happens to be a polynomial
with rational coefficients into a canonical monomial map, which the catalog
uses for exact symbolic identity checks at startup.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Mapping

from .errors import ExpressionError

_OPERATOR_CHARS = "+-*/^(),"
_CMP_OPS = ("<=", "<")


@dataclass(frozen=True)
class Token:
    kind: str  # 'num' | 'name' | 'op' | 'cmp' | 'end'
    text: str
    line: int
    column: int


def _tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    while i < len(source):
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        start_col = col
        if ch.isdigit() or (ch == "." and i + 1 < len(source) and source[i + 1].isdigit()):
            j = i
            seen_exp = False
            while j < len(source):
                c = source[j]
                if c.isdigit() or c == ".":
                    j += 1
                elif c in "eE" and j + 1 < len(source) and (source[j + 1].isdigit() or source[j + 1] in "+-"):
                    seen_exp = True
                    j += 2
                else:
                    break
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                raise ExpressionError(f"malformed number {text!r}", line, start_col)
            tokens.append(Token("num", text, line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(source) and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(Token("name", source[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if source.startswith("<=", i):
            tokens.append(Token("cmp", "<=", line, start_col))
            i += 2
            col += 2
            continue
        if ch == "<":
            tokens.append(Token("cmp", "<", line, start_col))
            i += 1
            col += 1
            continue
        if ch in _OPERATOR_CHARS:
            tokens.append(Token("op", ch, line, start_col))
            i += 1
            col += 1
            continue
        raise ExpressionError(f"unexpected character {ch!r}", line, start_col)
    tokens.append(Token("end", "", line, col))
    return tokens


# ---------------------------------------------------------------- AST nodes

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Abs:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str  # '+', '-', '*', '/', '^'
    left: object
    right: object


@dataclass(frozen=True)
class Chain:
    """Chained comparison a <op1> b <op2> c ..., true iff every link holds."""

    operands: tuple
    ops: tuple[str, ...]


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind == "op" and tok.text == text:
            return self.advance()
        found = repr(tok.text) if tok.text else "end of input"
        raise ExpressionError(f"expected {text!r}, found {found}", tok.line, tok.column)

    def parse(self):
        node = self.comparison()
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionError(f"unexpected trailing input {tok.text!r}", tok.line, tok.column)
        return node

    def comparison(self):
        first = self.sum_()
        operands = [first]
        ops: list[str] = []
        while self.peek().kind == "cmp":
            ops.append(self.advance().text)
            operands.append(self.sum_())
        if not ops:
            return first
        return Chain(tuple(operands), tuple(ops))

    def sum_(self):
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if tok.kind == "op" and tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            return Bin("^", base, self.unary())  # right-associative
        return base

    def atom(self):
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "name":
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                if tok.text != "abs":
                    raise ExpressionError(f"unknown function {tok.text!r} (only abs is available)", tok.line, tok.column)
                self.advance()
                arg = self.comparison()
                self.expect(")")
                return Abs(arg)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            node = self.comparison()
            self.expect(")")
            return node
        what = tok.text or "end of input"
        raise ExpressionError(f"expected a value, found {what!r}", tok.line, tok.column)


@lru_cache(maxsize=2048)
def parse(source: str):
    """Parse an expression string into an AST (cached)."""
    return _Parser(_tokenize(source)).parse()


def evaluate(source: str, env: Mapping[str, float]) -> float:
    """Evaluate an arithmetic expression; raises on comparison chains."""
    value = _eval(parse(source), env)
    if isinstance(value, bool):
        raise ExpressionError(f"expected an arithmetic expression, got a comparison: {source!r}")
    return value


def evaluate_predicate(source: str, env: Mapping[str, float]) -> bool:
    """Evaluate a constraint; a bare arithmetic expression is a grammar misuse."""
    value = _eval(parse(source), env)
    if not isinstance(value, bool):
        raise ExpressionError(f"expected a comparison, got an arithmetic expression: {source!r}")
    return value


def _eval(node, env: Mapping[str, float]):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return float(env[node.name])
        except KeyError:
            raise ExpressionError(f"unknown or unset parameter {node.name!r}") from None
    if isinstance(node, Neg):
        return -_eval(node.arg, env)
    if isinstance(node, Abs):
        return abs(_eval(node.arg, env))
    if isinstance(node, Bin):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if b == 0:
                raise ExpressionError("division by zero")
            return a / b
        if node.op == "^":
            try:
                value = a ** b
            except (OverflowError, ValueError, ZeroDivisionError) as exc:
                raise ExpressionError(f"cannot raise {a!r} to {b!r}: {exc}") from None
            if isinstance(value, complex):
                raise ExpressionError(f"{a!r} ^ {b!r} is not real")
            return value
        raise ExpressionError(f"unknown operator {node.op!r}")
    if isinstance(node, Chain):
        values = [_eval(operand, env) for operand in node.operands]
        for left, op, right in zip(values, node.ops, values[1:]):
            ok = left <= right if op == "<=" else left < right
            if not ok:
                return False
        return True
    raise ExpressionError(f"unknown node {node!r}")


def symbols(source: str) -> set[str]:
    """All parameter names occurring in an expression."""
    names: set[str] = set()

    def walk(node):
        if isinstance(node, Var):
            names.add(node.name)
        elif isinstance(node, (Neg, Abs)):
            walk(node.arg)
        elif isinstance(node, Bin):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Chain):
            for operand in node.operands:
                walk(operand)

    walk(parse(source))
    return names


# ------------------------------------------------- exact polynomial algebra

class NotPolynomial(ValueError):
    pass


def expand_polynomial(source: str, variables: tuple[str, ...]) -> dict[tuple[int, ...], Fraction]:
    """Expand an expression into {exponent tuple: rational coefficient}.

    Only +, -, *, division by a constant, and nonnegative integer powers are
    polynomial operations; anything else raises NotPolynomial.  Two
    expressions are identical polynomials iff their expansions are equal.
    """
    index = {name: k for k, name in enumerate(variables)}
    zero = tuple([0] * len(variables))

    def add(p, q):
        out = dict(p)
        for mono, coeff in q.items():
            out[mono] = out.get(mono, Fraction(0)) + coeff
            if out[mono] == 0:
                del out[mono]
        return out

    def mul(p, q):
        out: dict[tuple[int, ...], Fraction] = {}
        for m1, c1 in p.items():
            for m2, c2 in q.items():
                mono = tuple(a + b for a, b in zip(m1, m2))
                coeff = out.get(mono, Fraction(0)) + c1 * c2
                if coeff == 0:
                    out.pop(mono, None)
                else:
                    out[mono] = coeff
        return out

    def scale(p, factor: Fraction):
        return {m: c * factor for m, c in p.items() if c * factor != 0}

    def walk(node) -> dict[tuple[int, ...], Fraction]:
        if isinstance(node, Num):
            frac = Fraction(node.value).limit_denominator(10**12)
            if float(frac) != node.value:
                raise NotPolynomial(f"non-rational constant {node.value!r}")
            return {zero: frac} if frac != 0 else {}
        if isinstance(node, Var):
            if node.name not in index:
                raise NotPolynomial(f"unexpected variable {node.name!r}")
            mono = tuple(1 if k == index[node.name] else 0 for k in range(len(variables)))
            return {mono: Fraction(1)}
        if isinstance(node, Neg):
            return scale(walk(node.arg), Fraction(-1))
        if isinstance(node, Bin):
            if node.op == "+":
                return add(walk(node.left), walk(node.right))
            if node.op == "-":
                return add(walk(node.left), scale(walk(node.right), Fraction(-1)))
            if node.op == "*":
                return mul(walk(node.left), walk(node.right))
            if node.op == "/":
                denom = walk(node.right)
                if set(denom) - {zero}:
                    raise NotPolynomial("division by a non-constant")
                if not denom:
                    raise NotPolynomial("division by zero")
                return scale(walk(node.left), 1 / denom[zero])
            if node.op == "^":
                exponent = walk(node.right)
                if set(exponent) - {zero}:
                    raise NotPolynomial("non-constant exponent")
                power = exponent.get(zero, Fraction(0))
                if power.denominator != 1 or power < 0:
                    raise NotPolynomial(f"non-integer exponent {power}")
                result = {zero: Fraction(1)}
                base = walk(node.left)
                for _ in range(int(power)):
                    result = mul(result, base)
                return result
        raise NotPolynomial(f"non-polynomial construct {type(node).__name__}")

    return walk(parse(source))
