# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

"""
Scalar expressions over the variables ``x1 .. xN``.

Grammar::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | base ('^' integer)?
    base    := number | 'x' digits | func '(' expr ')' | '(' expr ')'
    func    := 'sin' | 'cos' | 'exp' | 'sqrt'

Unary minus binds looser than ``^``, so ``-x1^2`` is ``-(x1^2)``.
Derivatives come from forward-mode dual numbers.
"""

import dataclasses
from functools import cached_property
import re
from typing import Union

from colcon_core.logging import colcon_logger
from colcon_equistab.errors import (
    DimensionMismatch,
    DomainError,
    NonFiniteInput,
    ParseError,
    UnknownFunction,
    VariableOutOfRange,
)
import numpy as np

logger = colcon_logger.getChild(__name__)

FUNCTIONS = ("sin", "cos", "exp", "sqrt")

# denominators at or below this magnitude raise DomainError
DIVISION_GUARD = 1e-300


@dataclasses.dataclass(frozen=True)
class Var:
    index: int


@dataclasses.dataclass(frozen=True)
class Const:
    value: float


@dataclasses.dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclasses.dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclasses.dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclasses.dataclass(frozen=True)
class Call:
    name: str
    arg: "Node"


Node = Union[Var, Const, Neg, BinOp, Pow, Call]


_TOKEN = re.compile(
    r"(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)
_VARIABLE = re.compile(r"x(\d+)$")


def tokenize(text):
    """Split text into ``(kind, value, position)`` triples."""
    tokens = []
    position = 0
    while position < len(text):
        if text[position].isspace():
            position += 1
            continue
        match = _TOKEN.match(text, position)
        if match is None:
            raise ParseError(position, "a number, name or operator", text)
        tokens.append((match.lastgroup, match.group(), position))
        position = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:

    def __init__(self, text, n_vars):
        self.text = text
        self.n_vars = n_vars
        self.tokens = tokenize(text)
        self.index = 0

    @property
    def current(self):
        return self.tokens[self.index]

    def _accept(self, kind, value=None):
        token = self.current
        if token[0] == kind and (value is None or token[1] == value):
            self.index += 1
            return token
        return None

    def _expect(self, kind, value, expected):
        token = self._accept(kind, value)
        if token is None:
            raise ParseError(self.current[2], expected, self.text)
        return token

    def parse(self):
        if self.current[0] == "end":
            raise ParseError(self.current[2], "an expression", self.text)
        node = self.expression()
        if self.current[0] != "end":
            raise ParseError(self.current[2], "an operator or end of input", self.text)
        return node

    def expression(self):
        node = self.term()
        while self.current[0] == "op" and self.current[1] in "+-":
            op = self.tokens[self.index][1]
            self.index += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.current[0] == "op" and self.current[1] in "*/":
            op = self.tokens[self.index][1]
            self.index += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self._accept("op", "-"):
            return Neg(self.factor())
        node = self.base()
        if self._accept("op", "^"):
            node = Pow(node, self.integer())
        return node

    def integer(self):
        sign = -1 if self._accept("op", "-") else 1
        token = self.current
        if token[0] != "number" or not token[1].isdigit():
            raise ParseError(token[2], "an integer exponent", self.text)
        self.index += 1
        return sign * int(token[1])

    def base(self):
        kind, value, position = self.current
        if kind == "number":
            self.index += 1
            return Const(float(value))
        if kind == "name":
            self.index += 1
            variable = _VARIABLE.match(value)
            if variable:
                index = int(variable.group(1))
                if not 1 <= index <= self.n_vars:
                    raise VariableOutOfRange(index, self.n_vars, position, self.text)
                return Var(index)
            if value in FUNCTIONS:
                self._expect("op", "(", "'('")
                arg = self.expression()
                self._expect("op", ")", "')'")
                return Call(value, arg)
            if self.current[0] == "op" and self.current[1] == "(":
                raise UnknownFunction(value, position, self.text)
            raise ParseError(position, "a variable, number, function or '('", self.text)
        if kind == "op" and value == "(":
            self.index += 1
            node = self.expression()
            self._expect("op", ")", "')'")
            return node
        raise ParseError(position, "a variable, number, function or '('", self.text)


def to_text(node):
    """Canonical fully parenthesized text of an AST."""
    if isinstance(node, Var):
        return "x{}".format(node.index)
    if isinstance(node, Const):
        if node.value < 0 or (node.value == 0 and np.signbit(node.value)):
            return "(-{!r})".format(-node.value)
        return repr(float(node.value))
    if isinstance(node, Neg):
        return "(-{})".format(to_text(node.arg))
    if isinstance(node, BinOp):
        return "({} {} {})".format(to_text(node.left), node.op, to_text(node.right))
    if isinstance(node, Pow):
        return "({})^{}".format(to_text(node.base), node.exponent)
    if isinstance(node, Call):
        return "{}({})".format(node.name, to_text(node.arg))
    raise TypeError("not an expression node: {!r}".format(node))


def max_variable(node):
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Const):
        return 0
    if isinstance(node, BinOp):
        return max(max_variable(node.left), max_variable(node.right))
    if isinstance(node, (Neg, Call)):
        return max_variable(node.arg)
    return max_variable(node.base)


class Dual:
    """
    Forward-mode dual number ``val + der * eps``.

    ``der`` may be an array of tangents (one row per seeded direction)
    and ``val`` may itself be a Dual for second derivatives.
    """

    __slots__ = ("val", "der")
    # keep numpy from turning Duals into object arrays
    __array_ufunc__ = None

    def __init__(self, val, der):
        self.val = val
        self.der = der

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.der + other.der)
        return Dual(self.val + other, self.der)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.der - other.der)
        return Dual(self.val - other, self.der)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.der)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val * other.val,
                self.der * other.val + self.val * other.der)
        return Dual(self.val * other, self.der * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val / other.val,
                (self.der * other.val - self.val * other.der)
                / (other.val * other.val))
        return Dual(self.val / other, self.der / other)

    def __rtruediv__(self, other):
        return Dual(other / self.val, -other * self.der / (self.val * self.val))

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __pow__(self, n):
        if n == 0:
            return Dual(self.val * 0 + 1, self.der * 0)
        return Dual(self.val ** n, n * self.val ** (n - 1) * self.der)

    def sin(self):
        return Dual(_sin(self.val), _cos(self.val) * self.der)

    def cos(self):
        return Dual(_cos(self.val), -_sin(self.val) * self.der)

    def exp(self):
        value = _exp(self.val)
        return Dual(value, value * self.der)

    def sqrt(self):
        root = _sqrt(self.val)
        return Dual(root, self.der / (2 * root))


def _sin(x):
    return x.sin() if isinstance(x, Dual) else np.sin(x)


def _cos(x):
    return x.cos() if isinstance(x, Dual) else np.cos(x)


def _exp(x):
    return x.exp() if isinstance(x, Dual) else np.exp(x)


def _sqrt(x):
    return x.sqrt() if isinstance(x, Dual) else np.sqrt(x)


_CALLS = {"sin": _sin, "cos": _cos, "exp": _exp, "sqrt": _sqrt}


def _primal(x):
    while isinstance(x, Dual):
        x = x.val
    return x


def _guard_denominator(x):
    if np.any(np.abs(_primal(x)) <= DIVISION_GUARD):
        raise DomainError("division by zero")
    return x


def _guard_sqrt(x):
    if np.any(_primal(x) < 0):
        raise DomainError("square root of a negative number")
    return x


def _compile(node):
    """Turn an AST into a closure over a sequence of variable values."""
    if isinstance(node, Var):
        index = node.index - 1
        return lambda xs: xs[index]
    if isinstance(node, Const):
        value = node.value
        return lambda xs: value
    if isinstance(node, Neg):
        arg = _compile(node.arg)
        return lambda xs: -arg(xs)
    if isinstance(node, BinOp):
        left = _compile(node.left)
        right = _compile(node.right)
        if node.op == "+":
            return lambda xs: left(xs) + right(xs)
        if node.op == "-":
            return lambda xs: left(xs) - right(xs)
        if node.op == "*":
            return lambda xs: left(xs) * right(xs)
        return lambda xs: left(xs) / _guard_denominator(right(xs))
    if isinstance(node, Pow):
        base = _compile(node.base)
        exponent = node.exponent
        if exponent < 0:
            return lambda xs: _guard_denominator(base(xs)) ** exponent
        return lambda xs: base(xs) ** exponent
    if isinstance(node, Call):
        arg = _compile(node.arg)
        function = _CALLS[node.name]
        if node.name == "sqrt":
            return lambda xs: function(_guard_sqrt(arg(xs)))
        return lambda xs: function(arg(xs))
    raise TypeError("not an expression node: {!r}".format(node))


@dataclasses.dataclass(frozen=True, eq=False)
class Expression:
    """A parsed scalar expression in ``n_vars`` variables."""

    ast: Node
    n_vars: int

    @classmethod
    def parse(cls, text, n_vars):
        """
        Parse text into an expression.

        :raises ParseError: with the zero-based offending position
        """
        return cls(_Parser(text, n_vars).parse(), n_vars)

    @classmethod
    def constant(cls, value, n_vars):
        return cls(Const(float(value)), n_vars)

    def __str__(self):
        return to_text(self.ast)

    @property
    def text(self):
        return to_text(self.ast)

    @cached_property
    def _function(self):
        return _compile(self.ast)

    def _point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.n_vars,):
            raise DimensionMismatch(
                "expected {} variables, got shape {}".format(self.n_vars, x.shape))
        if not np.all(np.isfinite(x)):
            raise NonFiniteInput("evaluation point has non-finite entries")
        return x

    def evaluate(self, x):
        x = self._point(x)
        if x.ndim > 1:
            return self.evaluate_batch(x)
        return float(self._function(list(x)))

    def evaluate_batch(self, xs):
        xs = self._point(xs)
        batch = xs.shape[:-1]
        flat = xs.reshape(-1, self.n_vars)
        value = self._function([flat[:, i] for i in range(self.n_vars)])
        return np.broadcast_to(np.asarray(value, dtype=float), flat.shape[:1]).reshape(batch).copy()

    def gradient(self, x):
        """
        Gradient at a point.

        Every variable is seeded with its own unit tangent so a single
        sweep yields all partial derivatives.
        """
        x = self._point(x)
        if x.ndim > 1:
            return self.gradient_batch(x)
        seeds = np.eye(self.n_vars)
        value = self._function([Dual(float(x[i]), seeds[i]) for i in range(self.n_vars)])
        if not isinstance(value, Dual):
            return np.zeros(self.n_vars)
        return np.broadcast_to(np.asarray(value.der, dtype=float), (self.n_vars,)).copy()

    def gradient_batch(self, xs):
        xs = self._point(xs)
        batch = xs.shape[:-1]
        flat = xs.reshape(-1, self.n_vars)
        size = flat.shape[0]
        variables = []
        for i in range(self.n_vars):
            tangent = np.zeros((self.n_vars, size))
            tangent[i] = 1.0
            variables.append(Dual(flat[:, i], tangent))
        value = self._function(variables)
        if not isinstance(value, Dual):
            return np.zeros(batch + (self.n_vars,))
        der = np.broadcast_to(np.asarray(value.der, dtype=float), (self.n_vars, size))
        return der.T.reshape(batch + (self.n_vars,)).copy()

    def hessian(self, x):
        """Hessian at a point from nested duals, one sweep per entry pair."""
        x = self._point(x)
        n = self.n_vars
        hessian = np.zeros((n, n))
        for i in range(n):
            for j in range(i, n):
                variables = [
                    Dual(
                        Dual(float(x[k]), 1.0 if k == j else 0.0),
                        Dual(1.0 if k == i else 0.0, 0.0),
                    )
                    for k in range(n)
                ]
                hessian[i, j] = _second_derivative(self._function(variables))
                hessian[j, i] = hessian[i, j]
        return 0.5 * (hessian + hessian.T)


def _second_derivative(value):
    if not isinstance(value, Dual):
        return 0.0
    der = value.der
    if not isinstance(der, Dual):
        return 0.0
    return float(der.der)


def parse(text, n_vars):
    return Expression.parse(text, n_vars)


def linear_combination(terms, n_vars):
    """Expression for ``sum(c * e)`` over ``(c, e)`` pairs, skipping zeros."""
    node = None
    for coefficient, expression in terms:
        if coefficient == 0:
            continue
        term = expression.ast if coefficient == 1 else BinOp(
            "*", Const(float(coefficient)), expression.ast)
        node = term if node is None else BinOp("+", node, term)
    return Expression(node if node is not None else Const(0.0), n_vars)


def quadratic_form(matrix, n_vars):
    """Expression for ``x^T M x`` with ``M`` symmetrized."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape != (n_vars, n_vars):
        raise DimensionMismatch("quadratic form must be {0}x{0}".format(n_vars))
    matrix = 0.5 * (matrix + matrix.T)
    node = None
    for i in range(n_vars):
        for j in range(i, n_vars):
            coefficient = matrix[i, j] if i == j else 2.0 * matrix[i, j]
            if coefficient == 0:
                continue
            if i == j:
                monomial = Pow(Var(i + 1), 2)
            else:
                monomial = BinOp("*", Var(i + 1), Var(j + 1))
            term = BinOp("*", Const(float(coefficient)), monomial)
            node = term if node is None else BinOp("+", node, term)
    return Expression(node if node is not None else Const(0.0), n_vars)


def subtract(left, right):
    if left.n_vars != right.n_vars:
        raise DimensionMismatch("expressions have different variable counts")
    return Expression(BinOp("-", left.ast, right.ast), left.n_vars)


@dataclasses.dataclass(frozen=True)
class InvarianceReport:
    max_violation: float
    n_samples: int
    skipped: int = 0


def check_invariance(expression, action, n_samples=100, seed=0, center=None, scale=1.0):
    """Sample ``|e(g.x) - e(x)|`` over random group elements and points."""
    rng = np.random.default_rng(seed)
    center = np.zeros(action.dim) if center is None else np.asarray(center, dtype=float)
    worst = 0.0
    skipped = 0
    for _ in range(n_samples):
        g = action.group.random_element(rng)
        x = center + scale * rng.standard_normal(action.dim)
        try:
            violation = abs(expression.evaluate(action.act(g, x)) - expression.evaluate(x))
        except DomainError:
            skipped += 1
            continue
        worst = max(worst, violation)
    return InvarianceReport(float(worst), n_samples, skipped)
