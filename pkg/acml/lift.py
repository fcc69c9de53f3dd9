"""Lift of an almost contact metric structure to the total space of its distribution.

Lifted coordinates are ``(x1 .. x<m>, x<n+1> .. x<n+m>, x<n>)`` with ``m = n - 1``:
the fiber coordinates ``y^a = x<n+a>`` come before ``x<n>`` so the lift is again
an adapted chart. With ``A^b_a = Gamma^b_ac y^c`` the lifted frame is
``eps_a = e_a - A^b_a d_{n+b}``, ``d_{n+a}``, ``d_n`` and

    J eps_a = d_{n+a},  J d_{n+a} = -eps_a,  J d_n = 0,
    g~(eps_a, eps_b) = g~(d_{n+a}, d_{n+b}) = g_ab,  g~(eps_a, d_{n+b}) = 0,  g~(d_n, d_n) = 1.

In the adapted frame ``(e^_a, d_{n+a})`` of the lifted chart this reads
``phi^ = [[-A, -I], [I + A^2, A]]`` and ``g^ = [[g + A^T g A, A^T g], [g A, g]]``.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Tuple

import numpy as np
import sympy

from .acms import AlmostContactStructure, nijenhuis_field, require_valid
from .classify import analyze, classify
from .connections import InteriorConnection, interior_metric_connection, p_tensor, schouten_curvature, torsion
from .errors import StructureError
from .exprcore import FieldArray, coordinate_symbols
from .frames import AdaptedChart, FrameVectorField, bracket, frame_vector, make_chart, probe_points
from .report import TaskEntry
from .sampling import SampleSpec, SweepOptions, merge_stats, residual_stats, sample_points

logger = logging.getLogger(__name__)


def lifted_spec(spec: SampleSpec, half_width: float = 1.0) -> SampleSpec:
    """Base box with ``[-half_width, half_width]`` on every fiber coordinate, ``x<n>`` last."""
    m = spec.dim - 1
    box = list(spec.box[:m]) + [(-half_width, half_width)] * m + [spec.box[m]]
    return spec.model_copy(update={'box': box})


def base_spec(spec: SampleSpec) -> SampleSpec:
    """The base box of a lifted sampling box."""
    m = (spec.dim - 1) // 2
    return spec.model_copy(update={'box': list(spec.box[:m]) + [spec.box[-1]]})


@dataclass
class LiftedSpace:
    base: AlmostContactStructure
    connection: InteriorConnection
    structure: AlmostContactStructure
    notes: List[str] = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.base.m

    @property
    def chart(self) -> AdaptedChart:
        return self.structure.chart

    def lift_fields(self, fields: FieldArray) -> FieldArray:
        """Re-express base fields in lifted coordinates (``x<n>`` moves last)."""
        base_xn = self.base.chart.xn
        lifted_xn = self.chart.xn
        return FieldArray.build(fields.shape, lambda *i: sympy.sympify(fields[i]).xreplace({base_xn: lifted_xn}),
                                self.chart.n)

    @property
    def fiber_symbols(self) -> Tuple[sympy.Symbol, ...]:
        return self.chart.symbols[self.m:2 * self.m]

    @cached_property
    def gamma(self) -> FieldArray:
        return self.lift_fields(self.connection.coefficients)

    @cached_property
    def a_matrix(self) -> FieldArray:
        """``A[b, a] = Gamma^b_ac y^c``."""
        m, y, gamma = self.m, self.fiber_symbols, self.gamma
        return FieldArray.build((m, m), lambda b, a: sum((gamma[b, a, c] * y[c] for c in range(m)),
                                                         sympy.Integer(0)), self.chart.n)

    def epsilon(self, a: int) -> FrameVectorField:
        m = self.m
        horizontal = [1 if k == a else 0 for k in range(m)] + [-self.a_matrix[b, a] for b in range(m)]
        return FrameVectorField(self.chart, horizontal, 0)

    def fiber(self, a: int) -> FrameVectorField:
        return frame_vector(self.chart, self.m + a)

    @property
    def reeb(self) -> FrameVectorField:
        return frame_vector(self.chart, 2 * self.m)

    def combination(self, eps: List[sympy.Expr], fib: List[sympy.Expr], vertical: sympy.Expr = 0) -> FrameVectorField:
        """``eps^a eps_a + fib^a d_{n+a} + vertical d_n`` in the lifted adapted frame."""
        m = self.m
        horizontal = list(eps) + [fib[b] - sum((self.a_matrix[b, a] * eps[a] for a in range(m)), sympy.Integer(0))
                                  for b in range(m)]
        return FrameVectorField(self.chart, horizontal, vertical)

    @cached_property
    def curvature(self) -> FieldArray:
        return self.lift_fields(schouten_curvature(self.connection))

    @cached_property
    def p(self) -> FieldArray:
        return self.lift_fields(p_tensor(self.connection))

    @cached_property
    def torsion(self) -> FieldArray:
        return self.lift_fields(torsion(self.connection).components)

    @cached_property
    def omega(self) -> FieldArray:
        return self.lift_fields(self.base.omega.components)

    def contract_fiber(self, tensor: FieldArray, slot: int) -> FieldArray:
        """``tensor`` with the index ``slot`` contracted against ``y``."""
        y = self.fiber_symbols
        shape = tensor.shape[:slot] + tensor.shape[slot + 1:]

        def component(*i):
            return sum((tensor[i[:slot] + (c,) + i[slot:]] * y[c] for c in range(self.m)), sympy.Integer(0))
        return FieldArray.build(shape, component, self.chart.n)

    @cached_property
    def fiber_curvature(self) -> FieldArray:
        """``F[d, a, b] = -R_abc^d y^c``: fiber part of ``[eps_a, eps_b]``."""
        contracted = self.contract_fiber(self.curvature, 3)
        return FieldArray(-contracted.exprs, self.chart.n)

    @cached_property
    def p_contracted(self) -> FieldArray:
        """``P^b_ac y^c`` as ``[b, a]``."""
        return self.contract_fiber(self.p, 2)


def lift_space(s: AlmostContactStructure, c: Optional[InteriorConnection] = None,
               points: Optional[np.ndarray] = None) -> LiftedSpace:
    """Build the lifted structure and check it against the structure axioms."""
    n, m = s.n, s.m
    if n < 3:
        raise StructureError(f'cannot lift a structure of dimension {n}')
    require_valid(s)
    c = c or interior_metric_connection(s)
    notes = []
    if n == 3:
        logger.warning('lifting a 3-dimensional base; the construction is stated for n > 3')
        notes.append('base dimension 3 (construction stated for n > 3)')

    N = 2 * n - 1
    base_xn = s.chart.xn
    lifted_xn = coordinate_symbols(N)[N - 1]

    def move(expr):
        return sympy.sympify(expr).xreplace({base_xn: lifted_xn})

    gamma_row = [move(s.chart.gamma[a]) for a in range(m)] + [sympy.Integer(0)] * m
    chart = make_chart(N, gamma_row)
    y = chart.symbols[m:2 * m]
    gamma = c.coefficients
    A = sympy.Matrix(m, m, lambda b, a: sum((move(gamma[b, a, k]) * y[k] for k in range(m)), sympy.Integer(0)))
    g = sympy.Matrix(m, m, lambda a, b: move(s.g[a, b]))
    ginv = sympy.Matrix(m, m, lambda a, b: move(s.g_inverse[a, b]))
    identity = sympy.eye(m)

    phi_hat = sympy.Matrix(sympy.BlockMatrix([[-A, -identity], [identity + A * A, A]]))
    g_hat = sympy.Matrix(sympy.BlockMatrix([[g + A.T * g * A, A.T * g], [g * A, g]]))
    ginv_hat = sympy.Matrix(sympy.BlockMatrix([[ginv, -ginv * A.T], [-A * ginv, A * ginv * A.T + ginv]]))

    def rows(matrix):
        return [[matrix[i, j] for j in range(2 * m)] for i in range(2 * m)]

    lifted = AlmostContactStructure(chart, rows(g_hat), rows(phi_hat), g_inverse=rows(ginv_hat))
    require_valid(lifted, probe_points(N, points))
    logger.debug('lifted structure of dimension %d built', N)
    return LiftedSpace(base=s, connection=c, structure=lifted, notes=notes)


def lift_structure(s: AlmostContactStructure, c: Optional[InteriorConnection] = None) -> AlmostContactStructure:
    return lift_space(s, c).structure


def _components(X: FrameVectorField) -> List[sympy.Expr]:
    return list(X.components)


def _residual_field(L: LiftedSpace, pairs, expected) -> FieldArray:
    """Stack ``computed - expected`` over ``pairs`` into one field array ``[pair, component]``."""
    rows = []
    for (computed, target) in zip(pairs, expected):
        rows.append([u - v for u, v in zip(_components(computed), _components(target))])
    if not rows:
        return FieldArray(np.empty((0, L.chart.n), dtype=object), L.chart.n)
    return FieldArray(np.array(rows, dtype=object), L.chart.n)


def _zero(L: LiftedSpace) -> List[sympy.Expr]:
    return [sympy.Integer(0)] * L.m


def lifted_brackets_check(L: LiftedSpace, spec: SampleSpec, options: SweepOptions = SweepOptions()) -> TaskEntry:
    """``[eps_a, eps_b] = 2 omega_ba d_n - R_abc^d y^c d_{n+d}``, ``[eps_a, d_n] = P^b_ac y^c d_{n+b}``,
    ``[eps_a, d_{n+b}] = Gamma^c_ab d_{n+c}``, ``[d_{n+a}, d_{n+b}] = 0``."""
    m = L.m
    points = sample_points(spec)
    tol = spec.tolerance
    F, omega, Py, gamma = L.fiber_curvature, L.omega, L.p_contracted, L.gamma
    zero = _zero(L)

    computed = {'q8': [], 'q9': [], 'q10': [], 'fiber': []}
    expected = {'q8': [], 'q9': [], 'q10': [], 'fiber': []}
    printed = []
    for a in range(m):
        computed['q9'].append(bracket(L.epsilon(a), L.reeb))
        expected['q9'].append(L.combination(zero, [Py[b, a] for b in range(m)]))
        for b in range(m):
            computed['q10'].append(bracket(L.epsilon(a), L.fiber(b)))
            expected['q10'].append(L.combination(zero, [gamma[k, a, b] for k in range(m)]))
            if a < b:
                eps_bracket = bracket(L.epsilon(a), L.epsilon(b))
                computed['q8'].append(eps_bracket)
                expected['q8'].append(L.combination(zero, [F[d, a, b] for d in range(m)], 2 * omega[b, a]))
                printed.append(L.combination(zero, [-F[d, a, b] for d in range(m)], 2 * omega[b, a]))
                computed['fiber'].append(bracket(L.fiber(a), L.fiber(b)))
                expected['fiber'].append(L.combination(zero, zero))

    stats = {}
    for key in computed:
        field_array = _residual_field(L, computed[key], expected[key])
        stats[key] = residual_stats(options.map(field_array.evaluate, points), points)
    printed_stats = residual_stats(options.map(_residual_field(L, computed['q8'], printed).evaluate, points), points)
    worst = merge_stats(list(stats.values()))
    notes = list(L.notes)
    if printed_stats.max_residual > tol:
        notes.append(f'printed sign of the curvature term in [eps_a, eps_b] differs: residual '
                     f'{printed_stats.max_residual:.3e}')
    return TaskEntry(name='lift-brackets', verdict='pass' if worst.max_residual <= tol else 'fail',
                     max_residual=worst.max_residual, tolerance=tol, witness=worst.witness, notes=notes,
                     details={**{k: v.max_residual for k, v in stats.items()},
                              'q8_printed': printed_stats.max_residual})


def lifted_nijenhuis_check(L: LiftedSpace, spec: SampleSpec, options: SweepOptions = SweepOptions()) -> TaskEntry:
    """``N_J`` on pairs of lifted frame fields against the closed forms, plus the non-normality witness."""
    m = L.m
    J = L.structure
    points = sample_points(spec)
    tol = spec.tolerance
    F, S, omega, Py = L.fiber_curvature, L.torsion, L.omega, L.p_contracted
    zero = _zero(L)

    computed, derived, printed = [], [], []
    for a in range(m):
        for b in range(m):
            if a < b:
                computed.append(nijenhuis_field(J, L.epsilon(a), L.epsilon(b)))
                derived.append(L.combination([S[d, a, b] for d in range(m)], [-F[d, a, b] for d in range(m)]))
                printed.append(L.combination(zero, [F[d, a, b] for d in range(m)]))

                computed.append(nijenhuis_field(J, L.fiber(a), L.fiber(b)))
                derived.append(L.combination([-S[d, a, b] for d in range(m)], [F[d, a, b] for d in range(m)],
                                             2 * omega[b, a]))
                printed.append(L.combination(zero, [-F[d, a, b] for d in range(m)], 2 * omega[b, a]))
            computed.append(nijenhuis_field(J, L.epsilon(a), L.fiber(b)))
            derived.append(L.combination([-F[d, a, b] for d in range(m)], [-S[k, a, b] for k in range(m)]))
            printed.append(L.combination(zero, zero))
        computed.append(nijenhuis_field(J, L.epsilon(a), L.reeb))
        derived.append(L.combination(zero, [-Py[b, a] for b in range(m)]))
        printed.append(L.combination(zero, [-Py[b, a] for b in range(m)]))

        computed.append(nijenhuis_field(J, L.fiber(a), L.reeb))
        derived.append(L.combination([-Py[b, a] for b in range(m)], zero))
        printed.append(L.combination(zero, [-Py[b, a] for b in range(m)]))

    display = residual_stats(options.map(_residual_field(L, computed, derived).evaluate, points), points)
    printed_stats = residual_stats(options.map(_residual_field(L, computed, printed).evaluate, points), points)

    # N1 on fiber pairs carries the vertical component 2 omega_ba
    n1 = analyze(J).normality.n1
    fiber_n1 = FieldArray(n1.exprs[:, m:2 * m, m:2 * m], J.n)
    n1_values = np.abs(options.map(fiber_n1.evaluate, points)).reshape(len(points), -1).max(axis=1)
    omega_values = np.abs(options.map(omega.evaluate, points)).reshape(len(points), -1).max(axis=1)
    witness_row = int(np.argmax(n1_values))
    notes = list(L.notes)
    details = {'derived_forms': display.max_residual, 'printed_forms': printed_stats.max_residual,
               'n1_witness': float(n1_values[witness_row]), 'max_omega': float(omega_values.max())}
    witness_ok = True
    if omega_values.max() > tol:
        witness_ok = n1_values.max() >= 2 * omega_values.max() - tol
        details['n1_witness_point'] = points[witness_row].tolist()
    else:
        notes.append('omega vanishes on the sample: no non-normality witness expected')
    if printed_stats.max_residual > tol:
        notes.append(f'printed N_J forms differ: residual {printed_stats.max_residual:.3e}')
    if not witness_ok:
        notes.append('lifted N1 smaller than 2 max|omega|')
    verdict = 'pass' if display.max_residual <= tol and witness_ok else 'fail'
    return TaskEntry(name='lift-nijenhuis', verdict=verdict, max_residual=display.max_residual, tolerance=tol,
                     witness=display.witness, notes=notes, details=details)


def check_theorems_9_10(L: LiftedSpace, spec: SampleSpec, options: SweepOptions = SweepOptions()) -> TaskEntry:
    """Curvature and ``P`` of the base against almost normality and closedness of the lift."""
    tol = spec.tolerance
    points = sample_points(spec)
    m = L.m
    base_points = np.concatenate([points[:, :m], points[:, -1:]], axis=1)
    curvature = residual_stats(options.map(schouten_curvature(L.connection).evaluate, base_points), base_points)
    p = residual_stats(options.map(p_tensor(L.connection).evaluate, base_points), base_points)
    lifted = analyze(L.structure)
    projected = residual_stats(options.map(lifted.normality.projected.evaluate, points), points)
    d_omega = residual_stats(options.map(lifted.d_fundamental.evaluate, points), points)
    base = classify(L.base, base_spec(spec), options)

    sasakian = base.sasakian.verdict
    flat = curvature.max_residual <= tol
    lifted_ack = projected.max_residual <= tol and d_omega.max_residual <= tol
    lifted_almost_normal = projected.max_residual <= tol
    consistent_10 = lifted_ack == (sasakian and flat)
    consistent_9 = lifted_almost_normal == (flat and p.max_residual <= tol)
    notes = list(L.notes)
    if not consistent_10:
        notes.append('lifted acK verdict differs from (base sasakian and zero curvature)')
    if not consistent_9:
        notes.append('lifted almost normality differs from (R = 0 and P = 0)')
    return TaskEntry(
        name='lift-theorems', verdict='pass' if consistent_9 and consistent_10 else 'info',
        max_residual=d_omega.max_residual, tolerance=tol, witness=d_omega.witness, notes=notes,
        details={'base_curvature': curvature.max_residual, 'base_p': p.max_residual,
                 'lifted_almost_normal': projected.max_residual, 'lifted_d_omega': d_omega.max_residual,
                 'base_sasakian': sasakian, 'lifted_ack': lifted_ack,
                 'consistent_zero_curvature': consistent_9, 'consistent_sasakian': consistent_10})
