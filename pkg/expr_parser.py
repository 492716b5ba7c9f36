"""
A small arithmetic expression language for problem files.

Expressions name the user-supplied functions of a problem (F, G, f, j, alpha,
beta, p, r, M, K) so problems are data, not code. The grammar is documented in
docs/grammar.md. Evaluation is vectorised with numpy: every variable may be
bound to a scalar or to an array, and arrays broadcast.
"""

import math
import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np


VARIABLES = frozenset({"x", "y", "z", "q", "u", "u1", "u2", "Hu"})
FUNCTIONS = {
    "sin": 1,
    "cos": 1,
    "exp": 1,
    "abs": 1,
    "sqrt": 1,
    "min": 2,
    "max": 2,
}
# Bounds syntactic nesting: parentheses, unary minus, powers and call arguments.
# Flat operator chains are unlimited; the tree walkers below do not recurse.
MAX_DEPTH = 100


class ExprError(ValueError):
    """Base class for every parse or evaluation failure; offset is a byte offset."""

    def __init__(self, message: str, offset: Optional[int] = None):
        self.message = message
        self.offset = offset
        super().__init__(message if offset is None else f"{message} (at byte {offset})")


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifierError(ExprError):
    pass


class ArityError(ExprError):
    pass


class UnboundVariableError(ExprError):
    pass


class EvaluationError(ExprError):
    """Division by zero, a domain violation, or any non-finite intermediate."""


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Expr", ...]
    pos: int = field(default=0, compare=False)


Expr = Union[Num, Var, Neg, BinOp, Call]
Env = Mapping[str, Union[float, np.ndarray]]


class Token(NamedTuple):
    kind: str
    text: str
    pos: int


class ExprParser:
    """Recursive-descent parser.

    Precedence, loosest first: + - (left), * / (left), unary -, ^ (right).
    The exponent of ^ may itself start with a unary minus: 2^-1.
    """

    TOKEN_PATTERN = re.compile(
        r"""
        (?P<ws>\s+)
        |(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
        |(?P<name>[A-Za-z_][A-Za-z_0-9]*)
        |(?P<op>[-+*/^(),])
        """,
        re.VERBOSE,
    )

    def __init__(self, text: str):
        self.text = text
        self.tokens = self._tokenize(text)
        self.position = 0
        self.depth = 0

    def _offset(self, pos: int) -> int:
        return len(self.text[:pos].encode("utf-8"))

    def _tokenize(self, text: str) -> List[Token]:
        tokens = []
        pos = 0
        while pos < len(text):
            match = self.TOKEN_PATTERN.match(text, pos)
            if match is None:
                raise ExprSyntaxError(f"unexpected character {text[pos]!r}", self._offset(pos))
            kind = match.lastgroup
            if kind != "ws":
                tokens.append(Token(kind, match.group(), pos))
            pos = match.end()
        tokens.append(Token("end", "", len(text)))
        return tokens

    def _peek(self) -> Token:
        return self.tokens[self.position]

    def _advance(self) -> Token:
        token = self.tokens[self.position]
        self.position += 1
        return token

    def _is_op(self, *ops: str) -> bool:
        token = self._peek()
        return token.kind == "op" and token.text in ops

    def _expect(self, op: str) -> Token:
        token = self._peek()
        if token.kind == "op" and token.text == op:
            return self._advance()
        found = "end of input" if token.kind == "end" else repr(token.text)
        raise ExprSyntaxError(f"expected {op!r}, found {found}", self._offset(token.pos))

    def parse(self) -> Expr:
        tree = self._expression()
        token = self._peek()
        if token.kind != "end":
            raise ExprSyntaxError(f"unexpected {token.text!r}", self._offset(token.pos))
        return tree

    def _enter(self, token: Token) -> None:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ExprSyntaxError("expression is nested too deeply", self._offset(token.pos))

    def _expression(self) -> Expr:
        self._enter(self._peek())
        left = self._term()
        while self._is_op("+", "-"):
            op = self._advance()
            left = BinOp(op.text, left, self._term(), op.pos)
        self.depth -= 1
        return left

    def _term(self) -> Expr:
        left = self._unary()
        while self._is_op("*", "/"):
            op = self._advance()
            left = BinOp(op.text, left, self._unary(), op.pos)
        return left

    def _unary(self) -> Expr:
        if self._is_op("-"):
            token = self._advance()
            self._enter(token)
            operand = self._unary()
            self.depth -= 1
            return Neg(operand, token.pos)
        return self._power()

    def _power(self) -> Expr:
        base = self._atom()
        if self._is_op("^"):
            op = self._advance()
            self._enter(op)
            exponent = self._unary()
            self.depth -= 1
            return BinOp("^", base, exponent, op.pos)
        return base

    def _atom(self) -> Expr:
        token = self._advance()
        if token.kind == "number":
            value = float(token.text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"number {token.text} is out of range", self._offset(token.pos))
            return Num(value, token.pos)
        if token.kind == "name":
            if self._is_op("("):
                return self._call(token)
            if token.text in FUNCTIONS:
                raise ArityError(
                    f"function {token.text!r} needs {FUNCTIONS[token.text]} argument(s)",
                    self._offset(token.pos),
                )
            if token.text not in VARIABLES:
                raise UnknownIdentifierError(f"unknown identifier {token.text!r}", self._offset(token.pos))
            return Var(token.text, token.pos)
        if token.kind == "op" and token.text == "(":
            inner = self._expression()
            self._expect(")")
            return inner
        found = "end of input" if token.kind == "end" else repr(token.text)
        raise ExprSyntaxError(f"expected a number, name or '(', found {found}", self._offset(token.pos))

    def _call(self, name: Token) -> Expr:
        if name.text not in FUNCTIONS:
            raise UnknownIdentifierError(f"unknown function {name.text!r}", self._offset(name.pos))
        self._expect("(")
        args = []
        if not self._is_op(")"):
            args.append(self._expression())
            while self._is_op(","):
                self._advance()
                args.append(self._expression())
        self._expect(")")
        if len(args) != FUNCTIONS[name.text]:
            raise ArityError(
                f"{name.text} takes {FUNCTIONS[name.text]} argument(s), got {len(args)}",
                self._offset(name.pos),
            )
        return Call(name.text, tuple(args), name.pos)


def _children(node: Expr) -> Tuple[Expr, ...]:
    if isinstance(node, Neg):
        return (node.operand,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Call):
        return node.args
    return ()


def _postorder(tree: Expr) -> List[Expr]:
    """Nodes with every child before its parent, children left to right."""
    order, stack = [], [tree]
    while stack:
        node = stack.pop()
        order.append(node)
        stack.extend(_children(node))
    order.reverse()
    return order


def _take(stack: list, count: int) -> list:
    if count == 0:
        return []
    taken = stack[-count:]
    del stack[-count:]
    return taken


def parse(text: str) -> Expr:
    """Parse text into an expression tree; raises an ExprError subclass on failure."""
    return ExprParser(text).parse()


def to_text(expr: Expr) -> str:
    """Fully parenthesised rendering.

    parse(to_text(e)) == e for every tree parse returns. The parser never builds a
    negative literal; one built by hand prints as a negation with the same value.
    """
    parts: List[str] = []
    for node in _postorder(expr):
        if isinstance(node, Num):
            if math.copysign(1.0, node.value) < 0:
                parts.append(f"(-{-node.value!r})")
            else:
                parts.append(repr(node.value))
        elif isinstance(node, Var):
            parts.append(node.name)
        elif isinstance(node, Neg):
            parts.append(f"(-{parts.pop()})")
        elif isinstance(node, BinOp):
            left, right = _take(parts, 2)
            parts.append(f"({left} {node.op} {right})")
        else:
            parts.append(f"{node.name}({', '.join(_take(parts, len(node.args)))})")
    return parts[0]


def variables(expr: Expr) -> FrozenSet[str]:
    """Names of the variables an expression reads."""
    return frozenset(node.name for node in _postorder(expr) if isinstance(node, Var))


_UNARY = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
    "sqrt": np.sqrt,
}
_BINARY = {
    "min": np.minimum,
    "max": np.maximum,
}


def _finite(value: np.ndarray, node: Expr, offsets: Dict[int, int]) -> np.ndarray:
    if not np.all(np.isfinite(value)):
        raise EvaluationError("non-finite intermediate value", offsets.get(node.pos, node.pos))
    return value


def _apply(node: Expr, args: list, env: Mapping[str, np.ndarray], offsets: Dict[int, int]) -> np.ndarray:
    at = offsets.get(node.pos, node.pos)
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        if node.name not in env:
            raise UnboundVariableError(f"variable {node.name!r} is not bound", at)
        return _finite(env[node.name], node, offsets)
    if isinstance(node, Neg):
        return -args[0]
    if isinstance(node, BinOp):
        left, right = args
        if node.op == "+":
            value = left + right
        elif node.op == "-":
            value = left - right
        elif node.op == "*":
            value = left * right
        elif node.op == "/":
            if np.any(right == 0):
                raise EvaluationError("division by zero", at)
            value = left / right
        else:
            value = np.power(left, right)
        return _finite(value, node, offsets)
    if node.name == "sqrt" and np.any(args[0] < 0):
        raise EvaluationError("sqrt of a negative number", at)
    if node.name in _BINARY:
        return _BINARY[node.name](args[0], args[1])
    return _finite(_UNARY[node.name](args[0]), node, offsets)


def _eval(tree: Expr, env: Mapping[str, np.ndarray], offsets: Dict[int, int]) -> np.ndarray:
    values: list = []
    for node in _postorder(tree):
        args = _take(values, len(_children(node)))
        values.append(_apply(node, args, env, offsets))
    return values[0]


def evaluate_array(expr: Expr, env: Env, text: Optional[str] = None) -> np.ndarray:
    """Evaluate over broadcast numpy arrays.

    Any division by zero, domain violation, overflow or non-finite intermediate
    raises EvaluationError instead of producing a NaN or infinity.
    """
    bound = {name: np.asarray(value, dtype=float) for name, value in env.items()}
    offsets = {} if text is None else _byte_offsets(text)
    try:
        with np.errstate(divide="raise", over="raise", invalid="raise", under="ignore"):
            return np.asarray(_eval(expr, bound, offsets), dtype=float)
    except (FloatingPointError, OverflowError, ZeroDivisionError) as exc:
        raise EvaluationError(f"arithmetic error: {exc}") from None


def evaluate(expr: Expr, env: Env) -> float:
    """Scalar evaluation; see evaluate_array for the error rules."""
    result = evaluate_array(expr, env)
    if result.ndim != 0:
        raise EvaluationError("scalar evaluation received array bindings")
    return float(result)


def _byte_offsets(text: str) -> Dict[int, int]:
    offsets, running = {}, 0
    for i, ch in enumerate(text):
        offsets[i] = running
        running += len(ch.encode("utf-8"))
    return offsets


class Expression:
    """A parsed expression together with its source text and role label.

    Problem specs hold these rather than bare trees so that evaluation errors
    can name the expression (F, G, alpha, ...) they came from.
    """

    __slots__ = ("text", "tree", "label")

    def __init__(self, text: str, label: str = "expr", allowed: Optional[Iterable[str]] = None):
        self.text = text
        self.label = label
        self.tree = parse(text)
        if allowed is not None:
            extra = sorted(variables(self.tree) - frozenset(allowed))
            if extra:
                raise UnknownIdentifierError(
                    f"{label} may only use {', '.join(sorted(allowed))}; found {', '.join(extra)}", 0
                )

    @classmethod
    def constant(cls, value: float, label: str = "expr") -> "Expression":
        return cls(repr(float(value)), label)

    @property
    def variables(self) -> FrozenSet[str]:
        return variables(self.tree)

    def evaluate(self, env: Env) -> np.ndarray:
        return evaluate_array(self.tree, env, self.text)

    def __repr__(self) -> str:
        return f"Expression({self.label}={self.text!r})"
