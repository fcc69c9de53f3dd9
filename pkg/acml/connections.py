"""Interior and extended connections, Levi-Civita coefficients, curvature and parallel transport.

Coefficient arrays keep the upper index first: ``gamma[a, b, c] = Gamma^a_bc``
with ``nabla_{e_b} e_c = Gamma^a_bc e_a``, and ``R[d, a, b, c] = R_abc^d``
with ``R(e_a, e_b) e_c = R_abc^d e_d``.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from .acms import AlmostContactStructure, derived_fields
from .exprcore import FieldArray, FieldLike, as_expr
from .frames import AdaptedChart, AdmissibleTensorField, invert_metric_values

logger = logging.getLogger(__name__)

DEFAULT_RK4_STEP = 1e-3


@dataclass(frozen=True)
class InteriorConnection:
    """Covariant differentiation of admissible fields along admissible directions."""
    chart: AdaptedChart
    coefficients: FieldArray

    def __post_init__(self):
        m = self.chart.m
        if self.coefficients.shape != (m, m, m):
            raise ValueError(f'connection coefficients of shape {self.coefficients.shape}, expected {(m, m, m)}')

    @classmethod
    def from_table(cls, chart: AdaptedChart, table: Sequence) -> 'InteriorConnection':
        """From nested ``table[a][b][c] = Gamma^a_bc`` of expressions or source text."""
        m = chart.m
        return cls(chart, FieldArray.build((m, m, m), lambda a, b, c: as_expr(table[a][b][c], chart.n), chart.n))

    @classmethod
    def zero(cls, chart: AdaptedChart) -> 'InteriorConnection':
        m = chart.m
        return cls(chart, FieldArray.build((m, m, m), lambda *_: 0, chart.n))


@dataclass(frozen=True)
class ExtendedConnection:
    """``nabla^1``: the interior connection plus ``G^a_n = 0`` along ``xi``."""
    interior: InteriorConnection

    @property
    def chart(self) -> AdaptedChart:
        return self.interior.chart


class FrameConnection:
    """Connection coefficients over the full frame: ``coefficients[C, A, B] = Gamma~^C_AB``."""

    def __init__(self, chart: AdaptedChart, coefficients: Optional[FieldArray] = None,
                 evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None):
        if (coefficients is None) == (evaluator is None):
            raise ValueError('give either symbolic coefficients or a numeric evaluator')
        self.chart = chart
        self.coefficients = coefficients
        self._evaluator = evaluator

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        if self.coefficients is not None:
            return self.coefficients.evaluate(points)
        return self._evaluator(np.atleast_2d(np.asarray(points, dtype=float)))


def _sum(terms) -> sympy.Expr:
    return sum(terms, sympy.Integer(0))


def interior_metric_connection(s: AlmostContactStructure) -> InteriorConnection:
    """``Gamma^a_bc = 1/2 g^ad (e_b g_cd + e_c g_bd - e_d g_bc)``: metric and torsion free."""
    m = s.m
    dg = s.chart.frame_gradient(s.g, horizontal=True)
    ginv = s.g_inverse

    def coefficient(a, b, c):
        return _sum(ginv[a, d] * (dg[b, c, d] + dg[c, b, d] - dg[d, b, c]) for d in range(m)) / 2

    return InteriorConnection(s.chart, FieldArray.build((m, m, m), coefficient, s.n))


def torsion(c: InteriorConnection) -> AdmissibleTensorField:
    """``S^c_ab = Gamma^c_ab - Gamma^c_ba``."""
    gamma = c.coefficients
    m = c.chart.m
    S = FieldArray.build((m, m, m), lambda k, a, b: gamma[k, a, b] - gamma[k, b, a], c.chart.n)
    return AdmissibleTensorField(c.chart, (1, 2), S, antisymmetric=((1, 2),))


def covariant_derivative(c: InteriorConnection, t: AdmissibleTensorField) -> AdmissibleTensorField:
    """``nabla t`` with the derivative index first; upper slots of ``t`` precede lower ones."""
    chart = c.chart
    m = chart.m
    upper, lower = t.valence
    rank = upper + lower
    gamma = c.coefficients
    grad = chart.frame_gradient(t.components, horizontal=True)

    def component(a, *index):
        total = grad[(a,) + index]
        for slot in range(rank):
            for y in range(m):
                replaced = index[:slot] + (y,) + index[slot + 1:]
                if slot < upper:
                    coefficient = gamma[index[slot], a, y]
                    if coefficient != 0:
                        total += coefficient * t.components[replaced]
                else:
                    coefficient = gamma[y, a, index[slot]]
                    if coefficient != 0:
                        total -= coefficient * t.components[replaced]
        return total

    values = FieldArray.build((m,) * (rank + 1), component, chart.n)
    return AdmissibleTensorField(chart, (upper, lower + 1), values)


def extended_derivative(ec: ExtendedConnection, t: AdmissibleTensorField) -> FieldArray:
    """``nabla^1 t`` over the full frame: ``[0..m)`` delegate to the interior connection, ``m`` is ``d_n t``."""
    chart = ec.chart
    horizontal = covariant_derivative(ec.interior, t).components
    vertical = chart.vertical_derivative(t.components)
    return FieldArray.build((chart.n,) + t.components.shape,
                            lambda A, *i: vertical[i] if A == chart.m else horizontal[(A,) + i], chart.n)


def levi_civita_adapted(s: AlmostContactStructure, interior: Optional[InteriorConnection] = None) -> FrameConnection:
    """Levi-Civita coefficients of ``g + eta x eta`` in the adapted frame, assembled from the
    interior metric connection, ``omega``, ``C`` and ``psi``."""
    m, n = s.m, s.n
    interior = interior or interior_metric_connection(s)
    derived = derived_fields(s)
    gamma = interior.coefficients
    omega = s.omega.components
    C = derived.C.components
    mixed = derived.C_sharp.components.exprs - derived.psi.components.exprs

    def coefficient(K, A, B):
        if A < m and B < m:
            return gamma[K, A, B] if K < m else omega[B, A] - C[A, B]
        if K < m and (A < m) != (B < m):
            return mixed[K, A if A < m else B]
        return 0

    return FrameConnection(s.chart, FieldArray.build((n, n, n), coefficient, n))


def levi_civita_oracle(s: AlmostContactStructure) -> FrameConnection:
    """Independent Levi-Civita coefficients: coordinate Christoffels of the full metric,
    transported to the adapted frame."""
    chart = s.chart
    n, m = chart.n, chart.m
    gamma_n = chart.gamma

    def coordinate_metric(i, j):
        if i < m and j < m:
            return s.g[i, j] + gamma_n[i] * gamma_n[j]
        if i == m and j == m:
            return 1
        return gamma_n[min(i, j)]

    G = FieldArray.build((n, n), coordinate_metric, n)
    dG = FieldArray(np.stack([G.diff(k).exprs for k in range(1, n + 1)]), n)
    L = FieldArray(chart.frame_matrix, n)
    dL = FieldArray(np.stack([L.diff(k).exprs for k in range(1, n + 1)]), n)

    def evaluate(points: np.ndarray) -> np.ndarray:
        Gv = G.evaluate(points)
        Ginv = invert_metric_values(Gv, points)
        dGv = dG.evaluate(points)                     # dGv[p, l, i, j] = d_l G_ij
        christoffel = 0.5 * np.einsum('pkl,pijl->pkij', Ginv,
                                      dGv + np.swapaxes(dGv, 1, 2) - np.moveaxis(dGv, 1, 3))
        Lv = L.evaluate(points)
        Linv = np.linalg.inv(Lv)
        dLv = dL.evaluate(points)                     # dLv[p, i, k, B] = d_i L[k, B]
        coordinate = (np.einsum('piA,pikB->pkAB', Lv, dLv)
                      + np.einsum('piA,pjB,pkij->pkAB', Lv, Lv, christoffel))
        return np.einsum('pCk,pkAB->pCAB', Linv, coordinate)

    return FrameConnection(chart, evaluator=evaluate)


def schouten_curvature(c: InteriorConnection) -> FieldArray:
    """``R_abc^d = e_a Gamma^d_bc - e_b Gamma^d_ac + Gamma^e_bc Gamma^d_ae - Gamma^e_ac Gamma^d_be``."""
    m = c.chart.m
    gamma = c.coefficients
    dgamma = c.chart.frame_gradient(gamma, horizontal=True)

    def component(d, a, b, k):
        if a == b:
            return 0
        return (dgamma[a, d, b, k] - dgamma[b, d, a, k]
                + _sum(gamma[e, b, k] * gamma[d, a, e] - gamma[e, a, k] * gamma[d, b, e] for e in range(m)))

    return FieldArray.build((m, m, m, m), component, c.chart.n)


def p_tensor(c: InteriorConnection) -> FieldArray:
    """``P^a_bc = d_n Gamma^a_bc``."""
    return c.chart.vertical_derivative(c.coefficients)


def prescribed_torsion_connection(c: InteriorConnection, s: AlmostContactStructure,
                                  target: FieldArray) -> InteriorConnection:
    """Metric connection with torsion ``target[d, a, b] = T^d_ab``, built from the torsion-free
    metric connection ``c`` by the contorsion ``K_cab = 1/2 (T_cab + T_acb + T_bca)``."""
    m = s.m
    g, ginv = s.g, s.g_inverse
    lowered = FieldArray.build((m, m, m), lambda k, a, b: _sum(g[k, d] * target[d, a, b] for d in range(m)), s.n)
    contorsion = FieldArray.build((m, m, m), lambda k, a, b: (lowered[k, a, b] + lowered[a, k, b]
                                                              + lowered[b, k, a]) / 2, s.n)
    gamma = c.coefficients
    return InteriorConnection(c.chart, FieldArray.build(
        (m, m, m), lambda d, a, b: gamma[d, a, b] + _sum(ginv[d, k] * contorsion[k, a, b] for k in range(m)), s.n))


class ExpressionCurve:
    """``t -> x(t)`` with components given as expressions in ``x1`` (the parameter), ``t`` in ``[t0, t1]``."""

    def __init__(self, components: Sequence[FieldLike], t0: float = 0.0, t1: float = 1.0):
        self.components = tuple(as_expr(c, 1) for c in components)
        self.dim = len(self.components)
        self.t0, self.t1 = float(t0), float(t1)
        self._position = FieldArray(np.array(self.components, dtype=object), 1)
        self._velocity = self._position.diff(1)

    def pieces(self):
        yield self.t0, self.t1, self._evaluate

    def _evaluate(self, times: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        column = times.reshape(-1, 1)
        return self._position.evaluate(column), self._velocity.evaluate(column)

    def start(self) -> np.ndarray:
        return self._position.evaluate(np.array([[self.t0]]))[0]

    def end(self) -> np.ndarray:
        return self._position.evaluate(np.array([[self.t1]]))[0]


class PolylineCurve:
    """Piecewise-linear curve through ``vertices``; each segment is parametrized by ``[0, 1]``."""

    def __init__(self, vertices: Sequence[Sequence[float]]):
        self.vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
        if self.vertices.shape[0] < 2:
            raise ValueError('a polyline needs at least two vertices')
        self.dim = self.vertices.shape[1]

    def pieces(self):
        for start, end in zip(self.vertices[:-1], self.vertices[1:]):
            def segment(times, start=start, end=end):
                position = start + np.outer(times, end - start)
                return position, np.broadcast_to(end - start, position.shape)
            yield 0.0, 1.0, segment

    def start(self) -> np.ndarray:
        return self.vertices[0].copy()

    def end(self) -> np.ndarray:
        return self.vertices[-1].copy()


Curve = Union[ExpressionCurve, PolylineCurve]


def parallel_transport(ec: ExtendedConnection, curve: Curve, v0: Sequence[float],
                       steps: Optional[int] = None, step: float = DEFAULT_RK4_STEP) -> np.ndarray:
    """Transport the admissible vector ``v0`` along ``curve`` with classical RK4.

    Solves ``dv^a/dt = -Gamma^a_bc(x) xdot^b v^c`` on every smooth piece with a fixed
    number of steps (``1/step`` unless ``steps`` is given).
    """
    chart = ec.chart
    if curve.dim != chart.n:
        raise ValueError(f'curve lives in dimension {curve.dim}, chart in {chart.n}')
    if steps is None:
        steps = max(2, int(round(1.0 / step)))
    if steps < 2:
        raise ValueError(f'parallel transport needs at least 2 steps, got {steps}')
    v = np.asarray(v0, dtype=float).copy()
    if v.shape != (chart.m,):
        raise ValueError(f'admissible vector must have {chart.m} components')
    gamma = ec.interior.coefficients
    for t0, t1, evaluate in curve.pieces():
        h = (t1 - t0) / steps
        times = t0 + 0.5 * h * np.arange(2 * steps + 1)
        position, velocity = evaluate(times)
        coefficients = gamma.evaluate(position)
        # A[j, a, c] = -Gamma^a_bc xdot^b at the j-th half step
        A = -np.einsum('jabc,jb->jac', coefficients, velocity[:, :chart.m])
        for k in range(steps):
            k1 = A[2 * k] @ v
            k2 = A[2 * k + 1] @ (v + 0.5 * h * k1)
            k3 = A[2 * k + 1] @ (v + 0.5 * h * k2)
            k4 = A[2 * k + 2] @ (v + h * k3)
            v = v + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return v


def square_loop(center: Sequence[float], side: float, plane: Tuple[int, int] = (0, 1)) -> PolylineCurve:
    """Counter-clockwise square of the given side in the coordinate plane ``plane`` (0-based)."""
    center = np.asarray(center, dtype=float)
    i, j = plane
    half = side / 2.0
    vertices = []
    for di, dj in ((-1, -1), (1, -1), (1, 1), (-1, 1), (-1, -1)):
        vertex = center.copy()
        vertex[i] += di * half
        vertex[j] += dj * half
        vertices.append(vertex)
    return PolylineCurve(vertices)


def curvature_flux(c: InteriorConnection, center: Sequence[float], side: float, v0: Sequence[float],
                   plane: Tuple[int, int] = (0, 1), cells: int = 8) -> np.ndarray:
    """Holonomy predicted by curvature for :func:`square_loop`: ``-sum R_ijd^a v0^d dA`` over a grid."""
    center = np.asarray(center, dtype=float)
    i, j = plane
    offsets = (np.arange(cells) + 0.5) / cells * side - side / 2.0
    points = np.repeat(center[None, :], cells * cells, axis=0)
    grid = np.array(list(itertools.product(offsets, offsets)))
    points[:, i] += grid[:, 0]
    points[:, j] += grid[:, 1]
    R = schouten_curvature(c).evaluate(points)
    area = (side / cells) ** 2
    return -np.einsum('pad,d->a', R[:, :, i, j, :], np.asarray(v0, dtype=float)) * area
