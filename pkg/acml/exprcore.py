"""Scalar-field expressions: parsing, printing, exact jets and batched evaluation.

Expressions are written in a small arithmetic language over chart
coordinates ``x1 .. x<dim>``::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' integer)?
    atom   := number | ident | func '(' expr ')' | '(' expr ')' | '-' atom
    ident  := 'x' integer
    func   := 'sin' | 'cos' | 'exp' | 'sqrt'

Parsed expressions are immutable ASTs. Differentiation is symbolic (the AST
is lowered to sympy), so every partial derivative is exact up to rounding of
the final evaluation; finite differences exist only as an oracle.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, ClassVar, Dict, FrozenSet, Mapping, Sequence, Tuple, Union

import numpy as np
import sympy
from lark import Lark, Token, Transformer
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedToken, VisitError

from .errors import CoordinateRangeError, DomainError, ExpressionSyntaxError, UnknownSymbolError

logger = logging.getLogger(__name__)

MAX_JET_ORDER = 3

_GRAMMAR = r'''
?start: expr

?expr: term
     | expr "+" term   -> add
     | expr "-" term   -> sub

?term: factor
     | term "*" factor -> mul
     | term "/" factor -> div

?factor: atom
       | atom "^" INT  -> power

?atom: NUMBER              -> number
     | NAME "(" expr ")"   -> call
     | NAME                -> symbol
     | "(" expr ")"
     | "-" atom            -> negate

NAME: /[A-Za-z_][A-Za-z0-9_]*/

%import common.NUMBER
%import common.INT
%import common.WS
%ignore WS
'''

_PARSER = Lark(_GRAMMAR, parser='lalr')

_FUNCTIONS: Dict[str, Tuple[Callable, Callable]] = {
    'sin': (math.sin, sympy.sin),
    'cos': (math.cos, sympy.cos),
    'exp': (math.exp, sympy.exp),
    'sqrt': (math.sqrt, sympy.sqrt),
}


def _format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


class Expr:
    """Base class of the expression AST."""
    precedence: ClassVar[int] = 5

    def evaluate(self, point: Sequence[float]) -> float:
        raise NotImplementedError

    def to_sympy(self, symbols: Sequence[sympy.Symbol]) -> sympy.Expr:
        raise NotImplementedError

    def coordinates(self) -> FrozenSet[int]:
        raise NotImplementedError

    def _wrapped(self, minimum: int) -> str:
        text = str(self)
        return f'({text})' if self.precedence < minimum else text


@dataclass(frozen=True)
class Number(Expr):
    value: float

    @property
    def precedence(self) -> int:
        return 4 if self.value < 0 else 5

    def evaluate(self, point):
        return self.value

    def to_sympy(self, symbols):
        if self.value.is_integer():
            return sympy.Integer(int(self.value))
        return sympy.Float(self.value)

    def coordinates(self):
        return frozenset()

    def __str__(self):
        return _format_number(self.value)


@dataclass(frozen=True)
class Coordinate(Expr):
    index: int

    def evaluate(self, point):
        return float(point[self.index - 1])

    def to_sympy(self, symbols):
        return symbols[self.index - 1]

    def coordinates(self):
        return frozenset({self.index})

    def __str__(self):
        return f'x{self.index}'


@dataclass(frozen=True)
class Negate(Expr):
    operand: Expr
    precedence: ClassVar[int] = 4

    def evaluate(self, point):
        return -self.operand.evaluate(point)

    def to_sympy(self, symbols):
        return -self.operand.to_sympy(symbols)

    def coordinates(self):
        return self.operand.coordinates()

    def __str__(self):
        return '-' + self.operand._wrapped(4)


@dataclass(frozen=True)
class BinaryOp(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def precedence(self) -> int:
        return 1 if self.op in '+-' else 2

    def evaluate(self, point):
        lhs = self.left.evaluate(point)
        rhs = self.right.evaluate(point)
        if self.op == '+':
            return lhs + rhs
        if self.op == '-':
            return lhs - rhs
        if self.op == '*':
            return lhs * rhs
        if rhs == 0.0:
            raise DomainError('division by zero', str(self), point)
        return lhs / rhs

    def to_sympy(self, symbols):
        lhs = self.left.to_sympy(symbols)
        rhs = self.right.to_sympy(symbols)
        if self.op == '+':
            return lhs + rhs
        if self.op == '-':
            return lhs - rhs
        if self.op == '*':
            return lhs * rhs
        return lhs / rhs

    def coordinates(self):
        return self.left.coordinates() | self.right.coordinates()

    def __str__(self):
        # operators are left-associative, so an equal-precedence right operand needs parentheses
        return f'{self.left._wrapped(self.precedence)} {self.op} {self.right._wrapped(self.precedence + 1)}'


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    exponent: int
    precedence: ClassVar[int] = 3

    def evaluate(self, point):
        return self.base.evaluate(point) ** self.exponent

    def to_sympy(self, symbols):
        return self.base.to_sympy(symbols) ** self.exponent

    def coordinates(self):
        return self.base.coordinates()

    def __str__(self):
        return f'{self.base._wrapped(4)}^{self.exponent}'


@dataclass(frozen=True)
class Call(Expr):
    func: str
    argument: Expr

    def evaluate(self, point):
        arg = self.argument.evaluate(point)
        if self.func == 'sqrt' and arg < 0:
            raise DomainError('sqrt of a negative number', str(self), point)
        try:
            return _FUNCTIONS[self.func][0](arg)
        except OverflowError:
            raise DomainError('overflow', str(self), point) from None

    def to_sympy(self, symbols):
        return _FUNCTIONS[self.func][1](self.argument.to_sympy(symbols))

    def coordinates(self):
        return self.argument.coordinates()

    def __str__(self):
        return f'{self.func}({self.argument})'


class _ASTBuilder(Transformer):
    def __init__(self, dim: int):
        super().__init__()
        self.dim = dim

    def number(self, items):
        return Number(float(items[0]))

    def symbol(self, items):
        token: Token = items[0]
        name = str(token)
        if name[:1] == 'x' and name[1:].isdigit():
            index = int(name[1:])
            if not 1 <= index <= self.dim:
                raise CoordinateRangeError(index, self.dim, token.start_pos)
            return Coordinate(index)
        raise UnknownSymbolError(name, token.start_pos)

    def call(self, items):
        token, argument = items
        if str(token) not in _FUNCTIONS:
            raise UnknownSymbolError(str(token), token.start_pos)
        return Call(str(token), argument)

    def negate(self, items):
        operand = items[0]
        if isinstance(operand, Number):
            return Number(-operand.value)
        return Negate(operand)

    def power(self, items):
        return Power(items[0], int(items[1]))

    def add(self, items):
        return BinaryOp('+', *items)

    def sub(self, items):
        return BinaryOp('-', *items)

    def mul(self, items):
        return BinaryOp('*', *items)

    def div(self, items):
        return BinaryOp('/', *items)


def parse(source: str, dim: int) -> Expr:
    """Parse ``source`` into an AST over coordinates ``x1 .. x<dim>``."""
    if not source or not source.strip():
        raise ExpressionSyntaxError(0, ['expression'])
    try:
        tree = _PARSER.parse(source)
    except UnexpectedCharacters as exc:
        raise ExpressionSyntaxError(exc.pos_in_stream, exc.allowed or ()) from None
    except UnexpectedToken as exc:
        offset = len(source) if exc.token.type == '$END' else exc.token.start_pos
        raise ExpressionSyntaxError(offset, exc.expected) from None
    except UnexpectedEOF as exc:
        raise ExpressionSyntaxError(len(source), exc.expected) from None
    try:
        return _ASTBuilder(dim).transform(tree)
    except VisitError as exc:
        raise exc.orig_exc from None


@lru_cache(maxsize=None)
def coordinate_symbols(dim: int) -> Tuple[sympy.Symbol, ...]:
    return tuple(sympy.Symbol(f'x{i}', real=True) for i in range(1, dim + 1))


@dataclass(frozen=True)
class Jet:
    """Value and all mixed partials up to ``order``; partials keyed by sorted 1-based multi-index."""
    value: float
    order: int
    partials: Mapping[Tuple[int, ...], float] = field(default_factory=dict)

    def partial(self, *indices: int) -> float:
        if not indices:
            return self.value
        if len(indices) > self.order:
            raise ValueError(f'jet of order {self.order} has no partial of order {len(indices)}')
        return self.partials[tuple(sorted(indices))]


@lru_cache(maxsize=4096)
def _derivative_function(expr: sympy.Expr, dim: int, key: Tuple[int, ...]) -> Callable:
    symbols = coordinate_symbols(dim)
    derivative = sympy.diff(expr, *[symbols[i - 1] for i in key]) if key else expr
    return sympy.lambdify(symbols, derivative, modules='math')


def _sympy_jet(expr: sympy.Expr, dim: int, point: Sequence[float], order: int, value: float, label: str) -> Jet:
    if not 0 <= order <= MAX_JET_ORDER:
        raise ValueError(f'jet order must be within 0..{MAX_JET_ORDER}, got {order}')
    partials = {}
    for k in range(1, order + 1):
        for key in itertools.combinations_with_replacement(range(1, dim + 1), k):
            fn = _derivative_function(expr, dim, key)
            try:
                result = float(fn(*point))
            except (ValueError, ZeroDivisionError, OverflowError, TypeError):
                raise DomainError(f'partial derivative {key} undefined', label, point) from None
            if not math.isfinite(result):
                raise DomainError(f'partial derivative {key} undefined', label, point)
            partials[key] = result
    return Jet(value=value, order=order, partials=partials)


def eval_jet(e: Expr, p: Sequence[float], order: int) -> Jet:
    """Value of ``e`` at ``p`` with every partial derivative up to ``order`` (at most 3)."""
    dim = len(p)
    if max(e.coordinates(), default=0) > dim:
        raise ValueError(f'point of length {dim} does not cover the coordinates of {e}')
    value = e.evaluate(p)
    return _sympy_jet(e.to_sympy(coordinate_symbols(dim)), dim, tuple(map(float, p)), order, value, str(e))


def fd_partial(e: Expr, p: Sequence[float], index: int, h: float) -> float:
    """Central difference along coordinate ``index`` (1-based); an oracle only."""
    if h <= 0:
        raise ValueError('finite-difference step must be positive')
    forward = list(map(float, p))
    backward = list(forward)
    forward[index - 1] += h
    backward[index - 1] -= h
    return (e.evaluate(forward) - e.evaluate(backward)) / (2 * h)


class ScalarField:
    """A smooth function on a chart, held as a sympy expression over ``x1 .. x<dim>``."""
    __slots__ = ('expr', 'dim', 'source')

    def __init__(self, expr: sympy.Expr, dim: int, source: str = ''):
        self.expr = sympy.sympify(expr)
        self.dim = dim
        self.source = source or str(self.expr)

    @classmethod
    def from_source(cls, source: str, dim: int) -> 'ScalarField':
        return cls(parse(source, dim).to_sympy(coordinate_symbols(dim)), dim, source)

    def jet(self, point: Sequence[float], order: int) -> Jet:
        point = tuple(map(float, point))
        if len(point) != self.dim:
            raise ValueError(f'point has length {len(point)}, field lives in dimension {self.dim}')
        fn = _derivative_function(self.expr, self.dim, ())
        try:
            value = float(fn(*point))
        except (ValueError, ZeroDivisionError, OverflowError, TypeError):
            raise DomainError('value undefined', self.source, point) from None
        return _sympy_jet(self.expr, self.dim, point, order, value, self.source)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return FieldArray(np.array([self.expr], dtype=object).reshape(()), self.dim).evaluate(points)

    def diff(self, index: int) -> 'ScalarField':
        return ScalarField(sympy.diff(self.expr, coordinate_symbols(self.dim)[index - 1]), self.dim)

    def __repr__(self):
        return f'ScalarField({self.source!r}, dim={self.dim})'


FieldLike = Union[str, int, float, ScalarField, sympy.Expr]


def as_expr(value: FieldLike, dim: int) -> sympy.Expr:
    """Coerce source text, numbers, ScalarFields and sympy expressions to a sympy expression."""
    if isinstance(value, ScalarField):
        if value.dim != dim:
            raise ValueError(f'field of dimension {value.dim} used in dimension {dim}')
        return value.expr
    if isinstance(value, str):
        return parse(value, dim).to_sympy(coordinate_symbols(dim))
    return sympy.sympify(value)


def object_array(shape: Tuple[int, ...], fill: Callable[..., sympy.Expr]) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    for index in np.ndindex(*shape):
        out[index] = sympy.sympify(fill(*index))
    return out


@lru_cache(maxsize=512)
def _compile(exprs: Tuple[sympy.Expr, ...], dim: int) -> Callable:
    logger.debug('compiling %d field components in dimension %d', len(exprs), dim)
    return sympy.lambdify(coordinate_symbols(dim), list(exprs), modules='numpy', cse=True)


class FieldArray:
    """A dense array of scalar fields evaluated over a batch of points in one call."""

    def __init__(self, exprs: np.ndarray, dim: int):
        self.exprs = np.asarray(exprs, dtype=object)
        self.dim = dim
        self._fn = None

    @classmethod
    def build(cls, shape: Tuple[int, ...], fill: Callable[..., sympy.Expr], dim: int) -> 'FieldArray':
        return cls(object_array(shape, fill), dim)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.exprs.shape

    def __getitem__(self, index):
        return self.exprs[index]

    def diff(self, index: int) -> 'FieldArray':
        symbol = coordinate_symbols(self.dim)[index - 1]
        return FieldArray(object_array(self.shape, lambda *i: sympy.diff(self.exprs[i], symbol)), self.dim)

    def is_zero(self) -> bool:
        return all(e == 0 for e in self.exprs.flat)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values at ``points`` (shape ``(P, dim)``) as an array of shape ``(P, *self.shape)``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dim:
            raise ValueError(f'points have {points.shape[1]} coordinates, fields live in dimension {self.dim}')
        count = points.shape[0]
        flat = tuple(self.exprs.flat)
        out = np.empty((count, len(flat)))
        if flat:
            if self._fn is None:
                self._fn = _compile(flat, self.dim)
            with np.errstate(all='ignore'):
                values = self._fn(*points.T)
            for k, v in enumerate(values):
                out[:, k] = v
        bad = ~np.isfinite(out)
        if bad.any():
            row, col = np.argwhere(bad)[0]
            component = np.unravel_index(col, self.shape) if self.shape else ()
            raise DomainError(f'component {tuple(int(c) for c in component)} undefined',
                              str(flat[col]), points[row])
        return out.reshape((count,) + self.shape)
