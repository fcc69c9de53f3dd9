"""Adapted charts, the adapted frame, admissible tensors, brackets and exterior derivatives.

Frame indices are 0-based in code. ``a`` in ``0 .. n-2`` names the
horizontal field ``e_a = d_a - Gamma_a d_n`` (coordinate ``x<a+1>``); the
index ``m = n-1`` names the vertical field ``d_n``. Component arrays keep
upper indices first: ``c[C, A, B]`` means ``[E_A, E_B] = c^C_AB E_C``.
"""
import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np
import sympy

from .errors import ChartError, MetricError, UnsupportedDegreeError
from .exprcore import FieldArray, FieldLike, ScalarField, as_expr, coordinate_symbols, object_array

logger = logging.getLogger(__name__)

_CHECK_POINTS = 25


def probe_points(dim: int, points: Optional[np.ndarray]) -> np.ndarray:
    if points is not None:
        return np.atleast_2d(np.asarray(points, dtype=float))
    return np.random.default_rng(0).uniform(-1.0, 1.0, size=(_CHECK_POINTS, dim))


class AdaptedChart:
    """A chart of odd dimension ``n`` with distribution coefficients ``Gamma^n_a``.

    The distribution is ``D = ker eta`` with ``eta = dx^n + Gamma_a dx^a`` and
    ``xi = d_n``. Instances are immutable; build them with :func:`make_chart`.
    """

    def __init__(self, n: int, gamma: Sequence[sympy.Expr]):
        self.n = n
        self.m = n - 1
        self.symbols = coordinate_symbols(n)
        self.gamma = FieldArray(object_array((self.m,), lambda a: gamma[a]), n)

    @property
    def dim(self) -> int:
        return self.n

    @property
    def xn(self) -> sympy.Symbol:
        return self.symbols[self.n - 1]

    def apply(self, A: int, f: sympy.Expr) -> sympy.Expr:
        """The frame field ``E_A`` applied to the expression ``f``."""
        f = sympy.sympify(f)
        dn = sympy.diff(f, self.xn)
        if A == self.m:
            return dn
        return sympy.diff(f, self.symbols[A]) - self.gamma[A] * dn

    def frame_gradient(self, fields: FieldArray, horizontal: bool = False) -> FieldArray:
        """``E_A`` applied to every component; the new frame index comes first."""
        count = self.m if horizontal else self.n
        return FieldArray.build((count,) + fields.shape,
                                lambda A, *i: self.apply(A, fields[i]), self.n)

    def vertical_derivative(self, fields: FieldArray) -> FieldArray:
        return fields.diff(self.n)

    @cached_property
    def eta(self) -> FieldArray:
        """Full-frame components of eta: zero on every ``e_a``, one on ``d_n``."""
        return FieldArray.build((self.n,), lambda A: 1 if A == self.m else 0, self.n)

    @cached_property
    def frame_matrix(self) -> np.ndarray:
        """``L[k, A]``: coordinate components of ``E_A``."""
        def entry(k, A):
            if k == A:
                return 1
            if k == self.m and A < self.m:
                return -self.gamma[A]
            return 0
        return object_array((self.n, self.n), entry)

    @cached_property
    def structure_constants(self) -> FieldArray:
        return structure_constants(self)

    def standing_assumption_residual(self, points: Optional[np.ndarray] = None) -> float:
        """max |d_n Gamma_a| at the probe points."""
        derivative = self.gamma.diff(self.n)
        if derivative.is_zero():
            return 0.0
        return float(np.max(np.abs(derivative.evaluate(probe_points(self.n, points)))))

    def __repr__(self):
        return f'AdaptedChart(n={self.n}, gamma={list(self.gamma.exprs)})'


def make_chart(n: int, gamma_exprs: Sequence[FieldLike], points: Optional[np.ndarray] = None,
               tolerance: float = 1e-10) -> AdaptedChart:
    """Build and validate an adapted chart; ``d_n Gamma_a`` must vanish at the probe points."""
    if n < 3 or n % 2 == 0:
        raise ChartError(f'chart dimension must be odd and at least 3, got {n}')
    if len(gamma_exprs) != n - 1:
        raise ChartError(f'expected {n - 1} distribution coefficients, got {len(gamma_exprs)}')
    chart = AdaptedChart(n, [as_expr(e, n) for e in gamma_exprs])
    residual = chart.standing_assumption_residual(points)
    if residual > tolerance:
        raise ChartError(f'distribution coefficients depend on x{n}: max |d_{n} Gamma| = {residual:.3g}')
    logger.debug('chart n=%d validated (max |d_n Gamma| = %g)', n, residual)
    return chart


def frame_apply(chart: AdaptedChart, a: int, f: ScalarField, p: Sequence[float]) -> float:
    """``e_a f`` at ``p`` from exact jets; ``a`` is 1-based as in ``x<a>``."""
    if not 1 <= a <= chart.m:
        raise ValueError(f'horizontal index must be within 1..{chart.m}, got {a}')
    jet = f.jet(p, 1)
    gamma_a = ScalarField(chart.gamma[a - 1], chart.n).jet(p, 0).value
    return jet.partial(a) - gamma_a * jet.partial(chart.n)


class FrameVectorField:
    """``X = X^a e_a + X^n d_n``, components held as expressions."""

    def __init__(self, chart: AdaptedChart, horizontal: Sequence[FieldLike], vertical: FieldLike = 0):
        if len(horizontal) != chart.m:
            raise ValueError(f'expected {chart.m} horizontal components, got {len(horizontal)}')
        self.chart = chart
        self.horizontal = tuple(as_expr(v, chart.n) for v in horizontal)
        self.vertical = as_expr(vertical, chart.n)

    @classmethod
    def from_components(cls, chart: AdaptedChart, components: Sequence[FieldLike]) -> 'FrameVectorField':
        return cls(chart, components[:chart.m], components[chart.m])

    @property
    def components(self) -> Tuple[sympy.Expr, ...]:
        return self.horizontal + (self.vertical,)

    def coordinate_components(self) -> Tuple[sympy.Expr, ...]:
        gamma = self.chart.gamma
        vertical = self.vertical - sum((gamma[a] * v for a, v in enumerate(self.horizontal)), sympy.Integer(0))
        return self.horizontal + (vertical,)

    def project(self) -> 'FrameVectorField':
        return FrameVectorField(self.chart, self.horizontal, 0)

    def is_admissible(self) -> bool:
        return self.vertical == 0

    def apply(self, f: sympy.Expr) -> sympy.Expr:
        """Directional derivative ``X f``."""
        return sum((v * self.chart.apply(A, f) for A, v in enumerate(self.components) if v != 0),
                   sympy.Integer(0))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return FieldArray(np.array(self.components, dtype=object), self.chart.n).evaluate(points)

    def __add__(self, other: 'FrameVectorField') -> 'FrameVectorField':
        return FrameVectorField.from_components(
            self.chart, [u + v for u, v in zip(self.components, other.components)])

    def __sub__(self, other: 'FrameVectorField') -> 'FrameVectorField':
        return FrameVectorField.from_components(
            self.chart, [u - v for u, v in zip(self.components, other.components)])

    def scale(self, f: FieldLike) -> 'FrameVectorField':
        f = as_expr(f, self.chart.n)
        return FrameVectorField.from_components(self.chart, [f * v for v in self.components])

    def __repr__(self):
        return f'FrameVectorField({list(self.components)})'


def frame_vector(chart: AdaptedChart, A: int) -> FrameVectorField:
    """The basis field ``E_A`` (``A = m`` is ``d_n``)."""
    return FrameVectorField.from_components(chart, [1 if B == A else 0 for B in range(chart.n)])


def bracket(X: FrameVectorField, Y: FrameVectorField) -> FrameVectorField:
    """``[X, Y]`` computed in coordinates and re-expressed in the adapted frame."""
    if X.chart is not Y.chart:
        raise ValueError('vector fields live on different charts')
    chart = X.chart
    x_coords = X.coordinate_components()
    y_coords = Y.coordinate_components()
    coords = []
    for k in range(chart.n):
        term = sympy.Integer(0)
        for i, sym in enumerate(chart.symbols):
            if x_coords[i] != 0:
                term += x_coords[i] * sympy.diff(y_coords[k], sym)
            if y_coords[i] != 0:
                term -= y_coords[i] * sympy.diff(x_coords[k], sym)
        coords.append(term)
    horizontal = coords[:chart.m]
    vertical = coords[chart.m] + sum((chart.gamma[a] * v for a, v in enumerate(horizontal)), sympy.Integer(0))
    return FrameVectorField(chart, horizontal, vertical)


def lie_bracket(X: FrameVectorField, Y: FrameVectorField, p: Sequence[float]) -> np.ndarray:
    """Frame components ``(v^1 .. v^m, v^n)`` of ``[X, Y]`` at ``p``."""
    return bracket(X, Y).evaluate(np.asarray([p], dtype=float))[0]


def structure_constants(chart: AdaptedChart) -> FieldArray:
    basis = [frame_vector(chart, A) for A in range(chart.n)]
    table = np.empty((chart.n, chart.n, chart.n), dtype=object)
    for A, B in itertools.product(range(chart.n), repeat=2):
        if B < A:
            table[:, A, B] = -table[:, B, A]
            continue
        table[:, A, B] = bracket(basis[A], basis[B]).components if A != B else [sympy.Integer(0)] * chart.n
    return FieldArray(table, chart.n)


def nonholonomicity(chart: AdaptedChart) -> FieldArray:
    """``M^n_ab``: the vertical component of ``[e_a, e_b]``."""
    c = chart.structure_constants
    return FieldArray(c.exprs[chart.m, :chart.m, :chart.m], chart.n)


@dataclass(frozen=True)
class AdmissibleTensorField:
    """An admissible tensor of valence ``(p, q)``: components over horizontal frame indices only.

    ``symmetric`` and ``antisymmetric`` list index pairs whose (anti)symmetry is declared.
    """
    chart: AdaptedChart
    valence: Tuple[int, int]
    components: FieldArray
    symmetric: Tuple[Tuple[int, int], ...] = ()
    antisymmetric: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        expected = (self.chart.m,) * sum(self.valence)
        if self.components.shape != expected:
            raise ValueError(f'components of shape {self.components.shape}, expected {expected}')

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.components.evaluate(points)

    def symmetry_residual(self, points: np.ndarray) -> float:
        values = self.evaluate(points)
        residual = 0.0
        for pairs, sign in ((self.symmetric, 1.0), (self.antisymmetric, -1.0)):
            for i, j in pairs:
                swapped = np.swapaxes(values, i + 1, j + 1)
                if values.size:
                    residual = max(residual, float(np.max(np.abs(values - sign * swapped))))
        return residual

    def full(self) -> FieldArray:
        """Components in the full frame, zero whenever a slot is vertical."""
        m = self.chart.m
        rank = sum(self.valence)
        return FieldArray.build((self.chart.n,) * rank,
                                lambda *i: 0 if m in i else self.components[i], self.chart.n)


def omega_from_chart(chart: AdaptedChart) -> AdmissibleTensorField:
    """``omega`` defined by ``[e_a, e_b] = 2 omega_ba d_n``."""
    M = nonholonomicity(chart)
    omega = FieldArray.build((chart.m, chart.m), lambda a, b: M[b, a] / 2, chart.n)
    return AdmissibleTensorField(chart, (0, 2), omega, antisymmetric=((0, 1),))


def invert_admissible_metric(g: AdmissibleTensorField, p: Sequence[float]) -> np.ndarray:
    """``g^{ab}`` at ``p``; raises MetricError unless ``g(p)`` is symmetric positive definite."""
    return invert_metric_values(g.evaluate(np.asarray([p], dtype=float)), np.asarray([p], dtype=float))[0]


def invert_metric_values(values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Batch inverse of metric matrices ``values[P, m, m]`` with a positive-definiteness check."""
    asymmetry = np.abs(values - np.swapaxes(values, 1, 2)).max(axis=(1, 2)) if values.size else np.zeros(0)
    bad = np.flatnonzero(asymmetry > 1e-12 * (1 + np.abs(values).max(axis=(1, 2))))
    if bad.size:
        raise MetricError('metric is not symmetric', points[bad[0]])
    eigenvalues = np.linalg.eigvalsh(values)
    bad = np.flatnonzero(eigenvalues[:, 0] <= 0)
    if bad.size:
        raise MetricError(f'metric is not positive definite (smallest eigenvalue {eigenvalues[bad[0], 0]:.3g})',
                          points[bad[0]])
    return np.linalg.inv(values)


def exterior_derivative(chart: AdaptedChart, form: FieldArray) -> FieldArray:
    """``d alpha`` of a full-frame k-form (k = 1 or 2), normalized so that ``d eta(e_a, e_b) = omega_ab``.

    ``d alpha(X0..Xk) = 1/(k+1) [sum_i (-1)^i Xi alpha(..) + sum_{i<j} (-1)^(i+j) alpha([Xi, Xj], ..)]``
    """
    k = len(form.shape)
    if k not in (1, 2) or any(size != chart.n for size in form.shape):
        raise UnsupportedDegreeError(f'exterior derivative supports full 1- and 2-forms, got shape {form.shape}')
    grad = chart.frame_gradient(form)
    c = chart.structure_constants

    def component(*A):
        total = sympy.Integer(0)
        for i in range(k + 1):
            rest = A[:i] + A[i + 1:]
            total += (-1) ** i * grad[(A[i],) + rest]
        for i, j in itertools.combinations(range(k + 1), 2):
            rest = tuple(A[t] for t in range(k + 1) if t not in (i, j))
            for D in range(chart.n):
                coefficient = c[D, A[i], A[j]]
                if coefficient != 0:
                    total += (-1) ** (i + j) * coefficient * form[(D,) + rest]
        return total / (k + 1)

    return FieldArray.build((chart.n,) * (k + 1), component, chart.n)


def max_abs(values: np.ndarray) -> np.ndarray:
    """Per-point max of ``|values|`` over every axis but the first."""
    values = np.abs(values)
    if values.ndim == 1:
        return values
    return values.reshape(values.shape[0], -1).max(axis=1) if values.size else np.zeros(values.shape[0])
