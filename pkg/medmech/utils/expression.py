"""
Expression mini-language for alpha1(q) and alpha2(q)
=====================================================
Grammar (lowest to highest binding):

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' ('-' atom | atom))*
    atom    := NUMBER | 'q' | '(' sum ')'

All binary operators are left-associative, so ``2^3^2 == (2^3)^2`` and
``-q^2 == -(q^2)``. Evaluation is vectorized: ``q`` may be a float or a
numpy array and the result has the same shape.
"""
from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np

from medmech.errors import EvaluationError, ExpressionSyntaxError, UnknownIdentifierError

Number = Union[float, np.ndarray]

_OPERATORS = "+-*/^()"


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str = "q"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


Node = Union[Num, Var, Neg, BinOp]


@dataclass(frozen=True)
class Expression:
    root: Node
    source: str = ""

    def __call__(self, q: Number) -> Number:
        return eval_expression(self, q)

    def __str__(self) -> str:
        return to_text(self)


# ---------------------------
# tokenizer
# ---------------------------
def tokenize(text: str) -> List[Tuple[str, object, int]]:
    """Returns (kind, value, position) triples; kind is 'num', 'ident' or 'op'."""
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            start = i
            while i < n and text[i].isdigit():
                i += 1
            if i < n and text[i] == ".":
                i += 1
                while i < n and text[i].isdigit():
                    i += 1
            # exponent only when digits follow, otherwise 'e' starts an identifier
            if i < n and text[i] in "eE":
                j = i + 1
                if j < n and text[j] in "+-":
                    j += 1
                if j < n and text[j].isdigit():
                    i = j
                    while i < n and text[i].isdigit():
                        i += 1
            tokens.append(("num", float(text[start:i]), start))
            continue
        if c.isalpha() or c == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            name = text[start:i]
            if name != "q":
                raise UnknownIdentifierError(name, start)
            tokens.append(("ident", name, start))
            continue
        if c in _OPERATORS:
            tokens.append(("op", c, i))
            i += 1
            continue
        raise ExpressionSyntaxError(f"unexpected character {c!r}", i)
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0

    def _peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _peek_op(self, ops: str) -> bool:
        tok = self._peek()
        return tok is not None and tok[0] == "op" and tok[1] in ops

    def _advance(self):
        tok = self._peek()
        if tok is None:
            raise ExpressionSyntaxError("unexpected end of input", len(self.text))
        self.pos += 1
        return tok

    def parse(self) -> Node:
        node = self.sum()
        tok = self._peek()
        if tok is not None:
            raise ExpressionSyntaxError(f"unexpected token {tok[1]!r}", tok[2])
        return node

    def sum(self) -> Node:
        node = self.product()
        while self._peek_op("+-"):
            op = self._advance()[1]
            node = BinOp(op, node, self.product())
        return node

    def product(self) -> Node:
        node = self.unary()
        while self._peek_op("*/"):
            op = self._advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self._peek_op("-"):
            self._advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        while self._peek_op("^"):
            self._advance()
            if self._peek_op("-"):
                self._advance()
                rhs = Neg(self.atom())
            else:
                rhs = self.atom()
            node = BinOp("^", node, rhs)
        return node

    def atom(self) -> Node:
        kind, value, position = self._advance()
        if kind == "num":
            return Num(value)
        if kind == "ident":
            return Var(value)
        if value == "(":
            node = self.sum()
            tok = self._peek()
            if tok is None:
                raise ExpressionSyntaxError("expected ')'", len(self.text))
            if tok[1] != ")":
                raise ExpressionSyntaxError(f"expected ')' but found {tok[1]!r}", tok[2])
            self._advance()
            return node
        raise ExpressionSyntaxError(f"unexpected operator {value!r}", position)


def parse_expression(text: str) -> Expression:
    if text is None or not str(text).strip():
        raise ExpressionSyntaxError("empty expression", 0)
    text = str(text)
    return Expression(_Parser(text).parse(), text)


# ---------------------------
# evaluation
# ---------------------------
def _eval(node: Node, q: Number) -> Number:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return q
    if isinstance(node, Neg):
        return -_eval(node.operand, q)

    left = _eval(node.left, q)
    right = _eval(node.right, q)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if np.any(np.asarray(right) == 0):
            raise EvaluationError("division by zero")
        return np.divide(left, right)
    # '^'
    base, expo = np.asarray(left, dtype=float), np.asarray(right, dtype=float)
    if np.any((base == 0) & (expo < 0)):
        raise EvaluationError("domain error: 0 raised to a negative power")
    if np.any((base < 0) & (expo != np.round(expo))):
        raise EvaluationError("domain error: negative base with non-integer exponent")
    with np.errstate(over="ignore"):
        out = np.power(base, expo)
    return out if out.ndim else float(out)


def eval_expression(expr: Expression, q: Number) -> Number:
    root = expr.root if isinstance(expr, Expression) else expr
    value = _eval(root, q)
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise EvaluationError(f"non-finite value while evaluating {to_text(root)!r}")
    if np.ndim(q) == 0 and arr.ndim == 0:
        return float(arr)
    # constant expressions evaluated on an array come back broadcast
    return np.broadcast_to(arr, np.shape(q)).astype(float)


# ---------------------------
# printing
# ---------------------------
def to_text(expr) -> str:
    """Fully parenthesized text; parse_expression(to_text(e)) evaluates like e."""
    node = expr.root if isinstance(expr, Expression) else expr
    if isinstance(node, Num):
        return repr(float(node.value)) if node.value >= 0 else f"(-{repr(float(-node.value))})"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
