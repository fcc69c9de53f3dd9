"""Almost contact metric structures in adapted coordinates and their derived tensors."""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np
import sympy
from pydantic import BaseModel, Field

from .errors import StructureError
from .exprcore import FieldArray, FieldLike, as_expr, object_array
from .frames import (AdaptedChart, AdmissibleTensorField, FrameVectorField, probe_points, bracket,
                     exterior_derivative, frame_vector, omega_from_chart)

logger = logging.getLogger(__name__)


class AlmostContactStructure:
    """``(phi, xi, eta, g)`` on an adapted chart.

    ``g[a, b] = g_ab`` and ``phi[a, b] = phi^a_b`` live on the distribution;
    ``xi = d_n`` and ``eta`` come from the chart, ``g(xi, xi) = 1`` and
    ``g(xi, e_a) = 0``, ``phi xi = 0``.
    """

    def __init__(self, chart: AdaptedChart, g: Sequence[Sequence[FieldLike]], phi: Sequence[Sequence[FieldLike]],
                 g_inverse: Optional[Sequence[Sequence[FieldLike]]] = None):
        m = chart.m
        for label, rows in (('g', g), ('phi', phi)):
            if len(rows) != m or any(len(row) != m for row in rows):
                raise StructureError(f'{label} must be a {m}x{m} matrix')
        self.chart = chart
        self.g = FieldArray.build((m, m), lambda a, b: as_expr(g[a][b], chart.n), chart.n)
        self.phi = FieldArray.build((m, m), lambda a, b: as_expr(phi[a][b], chart.n), chart.n)
        self._g_inverse = None
        if g_inverse is not None:
            self._g_inverse = FieldArray.build((m, m), lambda a, b: as_expr(g_inverse[a][b], chart.n), chart.n)

    @property
    def n(self) -> int:
        return self.chart.n

    @property
    def m(self) -> int:
        return self.chart.m

    @property
    def metric(self) -> AdmissibleTensorField:
        return AdmissibleTensorField(self.chart, (0, 2), self.g, symmetric=((0, 1),))

    @property
    def endomorphism(self) -> AdmissibleTensorField:
        return AdmissibleTensorField(self.chart, (1, 1), self.phi)

    @cached_property
    def g_inverse(self) -> FieldArray:
        if self._g_inverse is not None:
            return self._g_inverse
        inverse = sympy.Matrix(self.g.exprs.tolist()).inv(method='LU')
        return FieldArray.build((self.m, self.m), lambda a, b: inverse[a, b], self.n)

    @cached_property
    def omega(self) -> AdmissibleTensorField:
        return omega_from_chart(self.chart)

    @cached_property
    def phi_full(self) -> FieldArray:
        """``phi^A_B`` in the full frame, with ``phi xi = 0`` and ``eta o phi = 0``."""
        m = self.m
        return FieldArray.build((self.n, self.n), lambda A, B: 0 if m in (A, B) else self.phi[A, B], self.n)

    @cached_property
    def metric_full(self) -> FieldArray:
        """``g_AB`` in the full frame: ``g`` on the distribution, ``eta x eta`` across it."""
        m = self.m
        def entry(A, B):
            if A == m or B == m:
                return 1 if A == B else 0
            return self.g[A, B]
        return FieldArray.build((self.n, self.n), entry, self.n)

    def apply_phi(self, X: FrameVectorField) -> FrameVectorField:
        horizontal = [sum((self.phi[a, b] * X.horizontal[b] for b in range(self.m)), sympy.Integer(0))
                      for a in range(self.m)]
        return FrameVectorField(self.chart, horizontal, 0)

    def __repr__(self):
        return f'AlmostContactStructure(n={self.n})'


class Diagnostic(BaseModel):
    """One failed structure axiom, with its worst witness."""
    check: str = Field(description='Axiom that failed.')
    residual: float = Field(description='Largest residual over the sample.')
    point: List[float] = Field(description='Witness point.')
    index: List[int] = Field(default_factory=list, description='Component index of the witness (0-based).')


def _worst(values: np.ndarray, points: np.ndarray):
    flat = np.abs(values).reshape(values.shape[0], -1)
    row, col = np.unravel_index(int(np.argmax(flat)), flat.shape)
    index = [int(i) for i in np.unravel_index(col, values.shape[1:])] if values.ndim > 1 else []
    return float(flat[row, col]), points[row].tolist(), index


def structure_residuals(s: AlmostContactStructure, points: np.ndarray) -> dict:
    """Pointwise residual arrays of every structure axiom."""
    g = s.g.evaluate(points)
    phi = s.phi.evaluate(points)
    identity = np.eye(s.m)
    return {
        'phi_squared': np.einsum('pab,pbc->pac', phi, phi) + identity,
        'compatibility': np.einsum('pca,pcd,pdb->pab', phi, g, phi) - g,
        'metric_symmetry': g - np.swapaxes(g, 1, 2),
        'smallest_eigenvalue': np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, 1, 2)))[:, 0],
    }


def validate_structure(s: AlmostContactStructure, points: Optional[np.ndarray] = None,
                       tolerance: float = 1e-10) -> List[Diagnostic]:
    """Diagnostics for every axiom violated at ``points``; empty iff the structure is valid."""
    points = probe_points(s.n, points)
    diagnostics = []
    standing = s.chart.standing_assumption_residual(points)
    if standing > tolerance:
        diagnostics.append(Diagnostic(check='standing_assumption', residual=standing, point=points[0].tolist()))
    residuals = structure_residuals(s, points)
    smallest = residuals.pop('smallest_eigenvalue')
    if np.any(smallest <= 0):
        row = int(np.argmin(smallest))
        diagnostics.append(Diagnostic(check='positive_definite', residual=float(-smallest[row]),
                                      point=points[row].tolist()))
    for check, values in residuals.items():
        residual, point, index = _worst(values, points)
        if residual > tolerance:
            diagnostics.append(Diagnostic(check=check, residual=residual, point=point, index=index))
    for d in diagnostics:
        logger.debug('structure axiom %s violated: %g at %s', d.check, d.residual, d.point)
    return diagnostics


def require_valid(s: AlmostContactStructure, points: Optional[np.ndarray] = None, tolerance: float = 1e-10):
    diagnostics = validate_structure(s, points, tolerance)
    if diagnostics:
        raise StructureError('invalid almost contact metric structure: '
                             + ', '.join(d.check for d in diagnostics), diagnostics)


def fundamental_form(s: AlmostContactStructure) -> AdmissibleTensorField:
    """``Omega_ab = g_ac phi^c_b``; ``Omega(xi, .) = 0`` through :meth:`AdmissibleTensorField.full`."""
    m = s.m
    omega = FieldArray.build((m, m), lambda a, b: sum((s.g[a, c] * s.phi[c, b] for c in range(m)),
                                                      sympy.Integer(0)), s.n)
    return AdmissibleTensorField(s.chart, (0, 2), omega, antisymmetric=((0, 1),))


@dataclass(frozen=True)
class NijenhuisComponents:
    """The non-zero adapted components of ``N_phi``.

    ``horizontal[e, a, b] = N^e_ab``, ``vertical[a, b] = N^n_ab``,
    ``mixed[e, a] = N^e_na``.
    """
    horizontal: FieldArray
    vertical: FieldArray
    mixed: FieldArray

    def full(self) -> FieldArray:
        """``N[C, A, B]`` over the full frame."""
        m = self.vertical.shape[0]
        dim = self.vertical.dim

        def entry(C, A, B):
            if A == B:
                return 0
            if A < m and B < m:
                return self.vertical[A, B] if C == m else self.horizontal[C, A, B]
            if C == m:
                return 0
            return self.mixed[C, B] if A == m else -self.mixed[C, A]
        return FieldArray.build((m + 1,) * 3, entry, dim)


def nijenhuis_adapted(s: AlmostContactStructure) -> NijenhuisComponents:
    m = s.m
    chart = s.chart
    dphi = chart.frame_gradient(s.phi, horizontal=True)   # dphi[c, a, b] = e_c phi^a_b
    vphi = chart.vertical_derivative(s.phi)
    M = chart.structure_constants.exprs[m]

    def horizontal(e, a, b):
        total = sympy.Integer(0)
        for c in range(m):
            total += (s.phi[c, a] * dphi[c, e, b] - s.phi[c, b] * dphi[c, e, a]
                      + s.phi[e, c] * dphi[b, c, a] - s.phi[e, c] * dphi[a, c, b])
        return total

    def vertical(a, b):
        return sum((s.phi[c, a] * s.phi[d, b] * M[c, d] for c in range(m) for d in range(m)), sympy.Integer(0))

    def mixed(e, a):
        return -sum((s.phi[e, c] * vphi[c, a] for c in range(m)), sympy.Integer(0))

    return NijenhuisComponents(
        horizontal=FieldArray.build((m, m, m), horizontal, s.n),
        vertical=FieldArray.build((m, m), vertical, s.n),
        mixed=FieldArray.build((m, m), mixed, s.n),
    )


def nijenhuis_field(s: AlmostContactStructure, X: FrameVectorField, Y: FrameVectorField) -> FrameVectorField:
    """``[phi X, phi Y] + phi^2 [X, Y] - phi [phi X, Y] - phi [X, phi Y]`` with ``phi xi = 0``."""
    phi_x = s.apply_phi(X)
    phi_y = s.apply_phi(Y)
    return (bracket(phi_x, phi_y) + s.apply_phi(s.apply_phi(bracket(X, Y)))
            - s.apply_phi(bracket(phi_x, Y)) - s.apply_phi(bracket(X, phi_y)))


def nijenhuis_direct(s: AlmostContactStructure, X: FrameVectorField, Y: FrameVectorField,
                     p: Sequence[float]) -> np.ndarray:
    return nijenhuis_field(s, X, Y).evaluate(np.asarray([p], dtype=float))[0]


def nijenhuis_direct_full(s: AlmostContactStructure) -> FieldArray:
    """``N[C, A, B]`` from the bracket formula on every pair of basis fields."""
    basis = [frame_vector(s.chart, A) for A in range(s.n)]
    table = np.empty((s.n, s.n, s.n), dtype=object)
    for A in range(s.n):
        table[:, A, A] = [sympy.Integer(0)] * s.n
        for B in range(A + 1, s.n):
            table[:, A, B] = nijenhuis_field(s, basis[A], basis[B]).components
            table[:, B, A] = -table[:, A, B]
    return FieldArray(table, s.n)


def lie_derivative_eta(X: FrameVectorField, Y: FrameVectorField) -> sympy.Expr:
    """``(L_X eta)(Y) = X(eta(Y)) - eta([X, Y])``."""
    return X.apply(Y.vertical) - bracket(X, Y).vertical


@dataclass(frozen=True)
class NormalityTensors:
    """``n1[C, A, B]``, ``n2[A, B]`` and ``projected[C, A, B] = P(N_phi)`` in the full frame."""
    nijenhuis: FieldArray
    n1: FieldArray
    n2: FieldArray
    projected: FieldArray
    deta: FieldArray
    projection_identity: FieldArray


def normality_tensors(s: AlmostContactStructure) -> NormalityTensors:
    n, m = s.n, s.m
    N = nijenhuis_adapted(s).full()
    deta = exterior_derivative(s.chart, s.chart.eta)
    n1 = FieldArray.build((n, n, n), lambda C, A, B: N[C, A, B] + (2 * deta[A, B] if C == m else 0), n)

    basis = [frame_vector(s.chart, A) for A in range(n)]
    phi_basis = [s.apply_phi(E) for E in basis]
    n2 = FieldArray.build((n, n), lambda A, B: lie_derivative_eta(phi_basis[A], basis[B])
                          - lie_derivative_eta(phi_basis[B], basis[A]), n)

    projected = FieldArray.build((n, n, n), lambda C, A, B: 0 if C == m else N[C, A, B], n)
    phi = s.phi_full
    deta_phi = FieldArray.build((n, n), lambda A, B: sum(
        (phi[C, A] * phi[D, B] * deta[C, D] for C in range(m) for D in range(m)), sympy.Integer(0)), n)
    identity = FieldArray.build((n, n, n), lambda C, A, B: projected[C, A, B] - N[C, A, B]
                                - (2 * deta_phi[A, B] if C == m else 0), n)
    return NormalityTensors(nijenhuis=N, n1=n1, n2=n2, projected=projected, deta=deta,
                            projection_identity=identity)


@dataclass(frozen=True)
class DerivedFields:
    h: AdmissibleTensorField
    C: AdmissibleTensorField
    C_sharp: AdmissibleTensorField
    psi: AdmissibleTensorField


def derived_fields(s: AlmostContactStructure) -> DerivedFields:
    """``h = 1/2 d_n phi``, ``C = 1/2 d_n g``, ``C^a_b = g^da C_db``, ``psi^b_a = g^db omega_da``."""
    m, chart = s.m, s.chart
    ginv = s.g_inverse
    omega = s.omega.components
    h = FieldArray.build((m, m), lambda a, b: sympy.diff(s.phi[a, b], chart.xn) / 2, s.n)
    C = FieldArray.build((m, m), lambda a, b: sympy.diff(s.g[a, b], chart.xn) / 2, s.n)
    C_sharp = FieldArray.build((m, m), lambda a, b: sum((ginv[d, a] * C[d, b] for d in range(m)),
                                                        sympy.Integer(0)), s.n)
    psi = FieldArray.build((m, m), lambda b, a: sum((ginv[d, b] * omega[d, a] for d in range(m)),
                                                    sympy.Integer(0)), s.n)
    return DerivedFields(
        h=AdmissibleTensorField(chart, (1, 1), h),
        C=AdmissibleTensorField(chart, (0, 2), C, symmetric=((0, 1),)),
        C_sharp=AdmissibleTensorField(chart, (1, 1), C_sharp),
        psi=AdmissibleTensorField(chart, (1, 1), psi),
    )


def reeb_nondegeneracy(s: AlmostContactStructure) -> FieldArray:
    """``det omega`` on the distribution; nonzero everywhere iff eta is a contact form."""
    omega = sympy.Matrix(s.omega.components.exprs.tolist())
    return FieldArray(object_array((), lambda: omega.det(method='berkowitz')), s.n)
