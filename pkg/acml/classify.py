"""Classification of almost contact metric structures and theorem checks as residual sweeps.

Every check evaluates exact tensor fields at the sample points of a
SampleSpec and reports the largest residual with its witness point. Verdicts
are "residual <= tolerance at every sampled point".
"""
import logging
import weakref
from functools import cached_property
from typing import Dict, List, Optional, Sequence

import numpy as np
import sympy
from pydantic import BaseModel

from .acms import (AlmostContactStructure, derived_fields, fundamental_form, nijenhuis_adapted,
                   nijenhuis_direct_full, normality_tensors, reeb_nondegeneracy, structure_residuals,
                   validate_structure)
from .connections import (ExtendedConnection, covariant_derivative, extended_derivative, interior_metric_connection,
                          levi_civita_adapted, levi_civita_oracle, prescribed_torsion_connection, torsion)
from .exprcore import FieldArray
from .frames import exterior_derivative
from .report import TaskEntry
from .sampling import ResidualStats, SampleSpec, SweepOptions, merge_stats, random_vectors, residual_stats, \
    sample_points

logger = logging.getLogger(__name__)

VALIDATION_TOLERANCE = 1e-10
ALMOST_NORMAL_TOLERANCE = 1e-10
FD_TOLERANCE = 1e-5
RANDOM_TRIPLES = 20
FD_POINTS = 25


class StructureAnalysis:
    """The tensors shared by the checks, built once per structure."""

    def __init__(self, s: AlmostContactStructure):
        self.s = s
        self.chart = s.chart

    @cached_property
    def interior(self):
        return interior_metric_connection(self.s)

    @cached_property
    def extended(self) -> ExtendedConnection:
        return ExtendedConnection(self.interior)

    @cached_property
    def derived(self):
        return derived_fields(self.s)

    @cached_property
    def fundamental(self) -> FieldArray:
        return fundamental_form(self.s).full()

    @cached_property
    def d_fundamental(self) -> FieldArray:
        return exterior_derivative(self.chart, self.fundamental)

    @cached_property
    def nijenhuis(self):
        return nijenhuis_adapted(self.s)

    @cached_property
    def normality(self):
        return normality_tensors(self.s)

    @cached_property
    def levi_civita(self):
        return levi_civita_adapted(self.s, self.interior)

    @cached_property
    def nabla_phi(self) -> FieldArray:
        """Interior ``nabla_a phi^b_c`` as ``[a, b, c]``."""
        return covariant_derivative(self.interior, self.s.endomorphism).components

    @cached_property
    def nabla1_phi(self) -> FieldArray:
        return extended_derivative(self.extended, self.s.endomorphism)

    @cached_property
    def levi_civita_phi(self) -> FieldArray:
        """``(nabla~_{E_A} phi)^C_B`` as ``[A, C, B]`` for the full Levi-Civita connection."""
        n = self.s.n
        phi = self.s.phi_full
        gamma = self.levi_civita.coefficients
        grad = self.chart.frame_gradient(phi)

        def component(A, C, B):
            total = grad[A, C, B]
            for D in range(n):
                total += gamma[C, A, D] * phi[D, B] - gamma[D, A, B] * phi[C, D]
            return total

        return FieldArray.build((n, n, n), component, n)

    @cached_property
    def psi_full(self) -> FieldArray:
        m = self.s.m
        psi = self.derived.psi.components
        return FieldArray.build((self.s.n, self.s.n), lambda C, A: 0 if m in (C, A) else psi[C, A], self.s.n)

    @cached_property
    def omega_phi_defect(self) -> FieldArray:
        """``omega(phi e_a, phi e_b) - omega(e_a, e_b)``."""
        s, m = self.s, self.s.m
        omega = s.omega.components
        return FieldArray.build((m, m), lambda a, b: sum(
            (s.phi[c, a] * s.phi[d, b] * omega[c, d] for c in range(m) for d in range(m)),
            sympy.Integer(0)) - omega[a, b], s.n)


_ANALYSES: 'weakref.WeakKeyDictionary[AlmostContactStructure, StructureAnalysis]' = weakref.WeakKeyDictionary()


def analyze(s: AlmostContactStructure) -> StructureAnalysis:
    analysis = _ANALYSES.get(s)
    if analysis is None:
        analysis = _ANALYSES[s] = StructureAnalysis(s)
    return analysis


def _points(s: AlmostContactStructure, spec: SampleSpec) -> np.ndarray:
    if spec.dim != s.n:
        raise ValueError(f'sample box has {spec.dim} intervals, structure lives in dimension {s.n}')
    return sample_points(spec)


def _difference(a: FieldArray, b: FieldArray) -> FieldArray:
    return FieldArray(a.exprs - b.exprs, a.dim)


def _flag(stats: ResidualStats, tolerance: float) -> str:
    return 'pass' if stats.max_residual <= tolerance else 'fail'


class PredicateResult(BaseModel):
    verdict: bool
    max_residual: float
    witness: Optional[List[float]] = None


def _predicate(parts: Sequence[ResidualStats], tolerance: float) -> PredicateResult:
    worst = merge_stats(parts)
    return PredicateResult(verdict=all(p.max_residual <= tolerance for p in parts),
                           max_residual=worst.max_residual, witness=worst.witness)


class ClassificationReport(BaseModel):
    """Verdicts of the structure predicates with residuals and witnesses."""
    tolerance: float
    contact_metric: PredicateResult
    almost_hermitian: PredicateResult
    normal: PredicateResult
    sasakian: PredicateResult
    ack_full: PredicateResult
    ack_horizontal: PredicateResult
    contact_form: bool
    omega_min_abs_det: float
    sasakian_identity: PredicateResult
    theorem_checks: List[TaskEntry]

    def flags(self) -> Dict[str, bool]:
        return {name: getattr(self, name).verdict for name in
                ('contact_metric', 'almost_hermitian', 'normal', 'sasakian', 'ack_full', 'ack_horizontal')}

    def lattice_holds(self) -> bool:
        f = self.flags()
        return ((not f['sasakian'] or (f['contact_metric'] and f['normal']))
                and (not f['ack_full'] or f['ack_horizontal']))

    def entry(self) -> TaskEntry:
        notes = []
        if not self.lattice_holds():
            notes.append('implication lattice violated')
        if self.sasakian_identity.verdict != self.sasakian.verdict:
            notes.append('sasakian verdict disagrees with the identity (nabla_x phi)y = g(x,y)xi - eta(y)x')
        failed = [t.name for t in self.theorem_checks if t.verdict == 'fail']
        if failed:
            notes.append('inconsistent: ' + ', '.join(failed))
        details = {name: {'verdict': p.verdict, 'max_residual': p.max_residual}
                   for name, p in ((k, getattr(self, k)) for k in
                                   ('contact_metric', 'almost_hermitian', 'normal', 'sasakian',
                                    'ack_full', 'ack_horizontal', 'sasakian_identity'))}
        details['contact_form'] = self.contact_form
        details['omega_min_abs_det'] = self.omega_min_abs_det
        return TaskEntry(name='classify', verdict='pass' if self.lattice_holds() and not failed else 'fail',
                         tolerance=self.tolerance, notes=notes, details=details)


def check_structure(s: AlmostContactStructure, spec: SampleSpec) -> TaskEntry:
    """Structure axioms at the sample points."""
    points = _points(s, spec)
    diagnostics = validate_structure(s, points, VALIDATION_TOLERANCE)
    residuals = structure_residuals(s, points)
    residuals.pop('smallest_eigenvalue')
    stats = merge_stats([residual_stats(v, points) for v in residuals.values()])
    return TaskEntry(name='validate', verdict='fail' if diagnostics else 'pass', max_residual=stats.max_residual,
                     tolerance=VALIDATION_TOLERANCE, witness=stats.witness,
                     notes=[f'{d.check}: {d.residual:.3e} at {d.point}' for d in diagnostics])


def check_sasakian_identity(s: AlmostContactStructure, spec: SampleSpec,
                            options: SweepOptions = SweepOptions()) -> PredicateResult:
    """``(nabla~_x phi) y = g(x, y) xi - eta(y) x`` on every pair of frame fields."""
    a = analyze(s)
    points = _points(s, spec)
    n, m = s.n, s.m
    lhs = options.map(a.levi_civita_phi.evaluate, points)
    G = options.map(s.metric_full.evaluate, points)
    rhs = np.zeros_like(lhs)
    rhs[:, :, m, :] = G
    rhs[:, :, :, m] -= np.eye(n)[None, :, :]
    return _predicate([residual_stats(lhs - rhs, points)], spec.tolerance)


def check_theorem_N1(s: AlmostContactStructure, spec: SampleSpec, options: SweepOptions = SweepOptions(),
                     almost_hermitian: Optional[bool] = None) -> TaskEntry:
    """An almost contact Hermitian structure is normal iff ``omega(phi u, phi v) = omega(u, v)``."""
    a = analyze(s)
    points = _points(s, spec)
    tol = spec.tolerance
    if almost_hermitian is None:
        almost_hermitian = residual_stats(options.map(a.normality.projected.evaluate, points), points) \
            .max_residual <= tol
    n1 = residual_stats(options.map(a.normality.n1.evaluate, points), points)
    defect = residual_stats(options.map(a.omega_phi_defect.evaluate, points), points)
    details = {'n1': n1.max_residual, 'omega_phi_defect': defect.max_residual}
    if not almost_hermitian:
        return TaskEntry(name='theoremN1', verdict='info', max_residual=n1.max_residual, tolerance=tol,
                         witness=n1.witness, details=details,
                         notes=['skipped: structure is not almost contact Hermitian'])
    consistent = (n1.max_residual <= tol) == (defect.max_residual <= tol)
    worst = merge_stats([n1, defect])
    return TaskEntry(name='theoremN1', verdict='pass' if consistent else 'fail', max_residual=worst.max_residual,
                     tolerance=tol, witness=worst.witness, details=details,
                     notes=[] if consistent else ['normality and omega invariance disagree'])


def check_theorem3(s: AlmostContactStructure, spec: SampleSpec, options: SweepOptions = SweepOptions()) -> TaskEntry:
    """``P(N_phi) = 0`` iff the horizontal and mixed Nijenhuis components vanish."""
    a = analyze(s)
    points = _points(s, spec)
    tol = spec.tolerance
    projected = residual_stats(options.map(a.normality.projected.evaluate, points), points)
    horizontal = residual_stats(options.map(a.nijenhuis.horizontal.evaluate, points), points)
    mixed = residual_stats(options.map(a.nijenhuis.mixed.evaluate, points), points)
    lhs = projected.max_residual <= tol
    rhs = horizontal.max_residual <= tol and mixed.max_residual <= tol
    return TaskEntry(name='theorem3', verdict='pass' if lhs == rhs else 'fail', max_residual=projected.max_residual,
                     tolerance=tol, witness=projected.witness,
                     details={'almost_hermitian': lhs, 'horizontal': horizontal.max_residual,
                              'mixed': mixed.max_residual})


def classify(s: AlmostContactStructure, spec: SampleSpec, options: SweepOptions = SweepOptions()) -> ClassificationReport:
    a = analyze(s)
    points = _points(s, spec)
    tol = spec.tolerance
    m = s.m

    def stats(fields: FieldArray) -> ResidualStats:
        return residual_stats(options.map(fields.evaluate, points), points)

    contact = stats(_difference(a.fundamental, a.normality.deta))
    projected = stats(a.normality.projected)
    n1 = stats(a.normality.n1)
    d_omega = options.map(a.d_fundamental.evaluate, points)
    d_full = residual_stats(d_omega, points)
    d_horizontal = residual_stats(d_omega[:, :m, :m, :m], points)
    determinant = np.abs(options.map(reeb_nondegeneracy(s).evaluate, points))

    almost_hermitian = _predicate([projected], tol)
    report = ClassificationReport(
        tolerance=tol,
        contact_metric=_predicate([contact], tol),
        almost_hermitian=almost_hermitian,
        normal=_predicate([n1], tol),
        sasakian=_predicate([n1, contact], tol),
        ack_full=_predicate([projected, d_full], tol),
        ack_horizontal=_predicate([projected, d_horizontal], tol),
        contact_form=bool(np.all(determinant > tol)),
        omega_min_abs_det=float(determinant.min()),
        sasakian_identity=check_sasakian_identity(s, spec, options),
        theorem_checks=[check_theorem_N1(s, spec, options, almost_hermitian.verdict),
                        check_theorem3(s, spec, options)],
    )
    logger.debug('classified %r: %s', s, report.flags())
    return report


def _q4_terms(s: AlmostContactStructure, points: np.ndarray, options: SweepOptions) -> Dict[str, np.ndarray]:
    """Both sides of the Levi-Civita identity for ``2 g((nabla~_X phi) Y, Z)`` on frame triples ``[A, B, C]``."""
    a = analyze(s)
    m = s.m
    nphi = options.map(a.levi_civita_phi.evaluate, points)
    G = options.map(s.metric_full.evaluate, points)
    phi = options.map(s.phi_full.evaluate, points)
    d_omega = options.map(a.d_fundamental.evaluate, points)
    n1 = options.map(a.normality.n1.evaluate, points)
    n2 = options.map(a.normality.n2.evaluate, points)
    deta = options.map(a.normality.deta.evaluate, points)

    lhs = 2 * np.einsum('pcd,padb->pabc', G, nphi)
    closed = 3 * np.einsum('pade,pdb,pec->pabc', d_omega, phi, phi) - 3 * d_omega
    normal = np.einsum('pkl,pkbc,pla->pabc', G, n1, phi)
    eta_terms = np.zeros_like(lhs)
    eta_terms[:, m, :, :] += n2
    deta_phi = 2 * np.einsum('pda,pdb->pab', deta, phi)     # 2 d eta(phi E_b, E_a)
    eta_terms[:, :, :, m] += deta_phi
    eta_terms[:, :, m, :] -= deta_phi
    return {'lhs': lhs, 'closed': closed, 'normal': normal, 'eta': eta_terms}


def _trilinear(values: np.ndarray, vectors: np.ndarray, m: int) -> np.ndarray:
    """``values(u, v, w)`` for admissible ``u, v, w`` packed as rows of ``vectors``."""
    u, v, w = vectors[:, :m], vectors[:, m:2 * m], vectors[:, 2 * m:]
    return np.einsum('pabc,ka,kb,kc->pk', values[:, :m, :m, :m], u, v, w)


def check_q4(s: AlmostContactStructure, spec: SampleSpec, options: SweepOptions = SweepOptions(),
             triples: Optional[np.ndarray] = None) -> TaskEntry:
    """The identity for ``2 g((nabla~_x phi) y, z)`` on all frame triples and random admissible triples,
    with its reductions where their hypotheses hold."""
    points = _points(s, spec)
    tol, m = spec.tolerance, s.m
    terms = _q4_terms(s, points, options)
    if triples is None:
        triples = random_vectors(spec, RANDOM_TRIPLES, 3 * m)
    residual = terms['lhs'] - (terms['closed'] + terms['normal'] + terms['eta'])
    q4 = merge_stats([residual_stats(residual, points),
                      residual_stats(_trilinear(residual, triples, m), points)])

    a = analyze(s)
    projected = options.map(a.normality.projected.evaluate, points)
    almost_normal = residual_stats(projected, points)
    per_point_pn = np.abs(projected).reshape(len(points), -1).max(axis=1)
    per_point_d = np.abs(options.map(a.d_fundamental.evaluate, points)).reshape(len(points), -1).max(axis=1)
    notes, details = [], {'almost_normal': almost_normal.max_residual}
    q5_mask = per_point_pn <= ALMOST_NORMAL_TOLERANCE
    if q5_mask.any():
        q5 = residual_stats((terms['lhs'] - terms['closed'] - terms['eta'])[q5_mask], points[q5_mask])
        details['q5'] = q5.max_residual
        details['q5_points'] = int(q5_mask.sum())
        if q5.max_residual > tol:
            notes.append(f'reduced form without N1 disagrees: {q5.max_residual:.3e}')
        q6_mask = q5_mask & (per_point_d <= tol)
        if q6_mask.any():
            q6 = residual_stats((terms['lhs'] - terms['eta'])[q6_mask], points[q6_mask])
            details['q6'] = q6.max_residual
            details['q6_points'] = int(q6_mask.sum())
    else:
        notes.append('reduced forms not applicable: structure is not almost contact Hermitian at any point')
    verdict = 'pass'
    if q4.max_residual > tol:
        verdict = 'info'
        notes.append('identity residual exceeds tolerance (convention diagnostic)')
    return TaskEntry(name='q4', verdict=verdict, max_residual=q4.max_residual, tolerance=tol, witness=q4.witness,
                     notes=notes, details=details)


def check_theorem7(s: AlmostContactStructure, spec: SampleSpec, options: SweepOptions = SweepOptions()) -> TaskEntry:
    """Evidence for "almost contact Kaehlerian iff nabla^1 phi = 0" under both readings of closedness."""
    a = analyze(s)
    points = _points(s, spec)
    tol, m = spec.tolerance, s.m
    nabla1 = residual_stats(options.map(a.nabla1_phi.evaluate, points), points)
    d_omega = options.map(a.d_fundamental.evaluate, points)
    d_full = residual_stats(d_omega, points)
    d_horizontal = residual_stats(d_omega[:, :m, :m, :m], points)
    projected = residual_stats(options.map(a.normality.projected.evaluate, points), points)

    rhs = nabla1.max_residual <= tol
    consistent = {}
    for reading, d in (('full', d_full), ('horizontal', d_horizontal)):
        lhs = projected.max_residual <= tol and d.max_residual <= tol
        consistent[reading] = lhs == rhs
    details = {
        'nabla1_phi': nabla1.max_residual,
        'd_omega_full': d_full.max_residual,
        'd_omega_horizontal': d_horizontal.max_residual,
        'almost_normal': projected.max_residual,
        'consistent_full': consistent['full'],
        'consistent_horizontal': consistent['horizontal'],
    }
    notes = []
    if all(consistent.values()):
        verdict = 'pass'
    elif any(consistent.values()):
        verdict = 'info'
        reading = 'full' if consistent['full'] else 'horizontal'
        notes.append(f'convention discrepancy: consistent only under the {reading} reading of d Omega = 0')
        details['convention_discrepancy'] = True
    else:
        verdict = 'fail'
        notes.append('inconsistent under both readings')
    worst = merge_stats([nabla1, d_full, projected])
    return TaskEntry(name='theorem7', verdict=verdict, max_residual=worst.max_residual, tolerance=tol,
                     witness=worst.witness, notes=notes, details=details)


def check_theorem8(s: AlmostContactStructure, spec: SampleSpec, options: SweepOptions = SweepOptions()) -> TaskEntry:
    """``(nabla~_x phi) y = d eta(phi y, x) xi + eta(y) phi psi x - eta(x) (phi psi - psi phi) y`` holds
    iff ``nabla phi = 0``, ``d_n phi = 0`` and ``d_n g = 0``."""
    a = analyze(s)
    points = _points(s, spec)
    tol, m = spec.tolerance, s.m
    lhs = options.map(a.levi_civita_phi.evaluate, points)            # [A, C, B]
    phi = options.map(s.phi_full.evaluate, points)
    psi = options.map(a.psi_full.evaluate, points)
    deta = options.map(a.normality.deta.evaluate, points)
    phi_psi = np.einsum('pcd,pda->pca', phi, psi)
    psi_phi = np.einsum('pcd,pda->pca', psi, phi)
    rhs = np.zeros_like(lhs)
    rhs[:, :, m, :] += np.einsum('pdb,pda->pab', phi, deta)
    rhs[:, :, :, m] += np.swapaxes(phi_psi, 1, 2)
    rhs[:, m, :, :] -= phi_psi - psi_phi
    q7 = residual_stats(lhs - rhs, points)

    conditions = {
        'nabla_phi': residual_stats(options.map(a.nabla_phi.evaluate, points), points).max_residual,
        'dn_phi': residual_stats(options.map(s.chart.vertical_derivative(s.phi).evaluate, points),
                                 points).max_residual,
        'dn_g': residual_stats(options.map(s.chart.vertical_derivative(s.g).evaluate, points), points).max_residual,
    }
    holds = q7.max_residual <= tol
    conditions_hold = all(v <= tol for v in conditions.values())
    consistent = holds == conditions_hold
    notes = [] if consistent else ['identity and the three conditions disagree']
    return TaskEntry(name='theorem8', verdict='pass' if consistent else 'fail', max_residual=q7.max_residual,
                     tolerance=tol, witness=q7.witness, notes=notes,
                     details={**conditions, 'identity_holds': holds, 'conditions_hold': conditions_hold})


def check_theorem5_torsion(s: AlmostContactStructure, spec: SampleSpec,
                           options: SweepOptions = SweepOptions()) -> TaskEntry:
    """Metric connection with torsion ``1/4 P(N_phi)`` built by contorsion, plus evidence that
    ``nabla^1 phi = 0`` forces ``P(N_phi) = 0``."""
    a = analyze(s)
    points = _points(s, spec)
    tol, m = spec.tolerance, s.m
    horizontal = a.nijenhuis.horizontal
    target = FieldArray.build((m, m, m), lambda d, i, j: horizontal[d, i, j] / 4, s.n)
    modified = prescribed_torsion_connection(a.interior, s, target)
    torsion_residual = residual_stats(
        options.map(_difference(torsion(modified).components, target).evaluate, points), points)
    metricity = residual_stats(options.map(covariant_derivative(modified, s.metric).components.evaluate, points),
                               points)
    nabla1 = residual_stats(options.map(a.nabla1_phi.evaluate, points), points)
    projected = residual_stats(options.map(a.normality.projected.evaluate, points), points)
    if nabla1.max_residual > tol:
        evidence = 'vacuous'
    elif projected.max_residual <= tol:
        evidence = 'consistent'
    else:
        evidence = 'violated'
    notes = []
    verdict = 'pass'
    if torsion_residual.max_residual > tol or metricity.max_residual > tol:
        verdict = 'fail'
        notes.append('prescribed-torsion connection misses its torsion or metricity')
    if evidence == 'violated':
        verdict = 'fail'
        notes.append('nabla^1 phi = 0 but P(N_phi) != 0')
    return TaskEntry(name='theorem5', verdict=verdict, max_residual=torsion_residual.max_residual, tolerance=tol,
                     witness=torsion_residual.witness, notes=notes,
                     details={'metricity': metricity.max_residual, 'nabla1_phi': nabla1.max_residual,
                              'almost_normal': projected.max_residual, 'theorem6_evidence': evidence})


def check_nijenhuis_oracle(s: AlmostContactStructure, spec: SampleSpec,
                           options: SweepOptions = SweepOptions()) -> TaskEntry:
    """Adapted Nijenhuis components against the bracket formula, and the projection identity."""
    a = analyze(s)
    points = _points(s, spec)
    tol = spec.tolerance
    difference = _difference(a.nijenhuis.full(), nijenhuis_direct_full(s))
    oracle = residual_stats(options.map(difference.evaluate, points), points)
    identity = residual_stats(options.map(a.normality.projection_identity.evaluate, points), points)
    worst = merge_stats([oracle, identity])
    return TaskEntry(name='nijenhuis', verdict=_flag(worst, tol), max_residual=worst.max_residual, tolerance=tol,
                     witness=worst.witness,
                     details={'adapted_vs_direct': oracle.max_residual, 'projection_identity': identity.max_residual})


def check_levi_civita(s: AlmostContactStructure, spec: SampleSpec,
                      options: SweepOptions = SweepOptions()) -> TaskEntry:
    """Assembled Levi-Civita coefficients against coordinate Christoffels; metricity and torsion."""
    a = analyze(s)
    points = _points(s, spec)
    tol = spec.tolerance
    oracle = levi_civita_oracle(s)
    difference = options.map(a.levi_civita.evaluate, points) - options.map(oracle.evaluate, points)
    equivalence = residual_stats(difference, points)
    metricity = residual_stats(options.map(covariant_derivative(a.interior, s.metric).components.evaluate, points),
                               points)
    torsion_free = residual_stats(options.map(torsion(a.interior).components.evaluate, points), points)
    worst = merge_stats([equivalence, metricity, torsion_free])
    return TaskEntry(name='levi-civita', verdict=_flag(worst, tol), max_residual=worst.max_residual, tolerance=tol,
                     witness=worst.witness,
                     details={'adapted_vs_oracle': equivalence.max_residual, 'metricity': metricity.max_residual,
                              'torsion': torsion_free.max_residual})


def fd_cross_check(s: AlmostContactStructure, spec: SampleSpec, h: float = 1e-4) -> TaskEntry:
    """Exact first partials of every structure component against central differences."""
    points = _points(s, spec.model_copy(update={'count': FD_POINTS}))
    a = analyze(s)
    fields = {'gamma_n': s.chart.gamma, 'g': s.g, 'phi': s.phi, 'interior': a.interior.coefficients}
    worst, details = [], {}
    for label, array in fields.items():
        errors = []
        for k in range(1, s.n + 1):
            step = np.zeros(s.n)
            step[k - 1] = h
            exact = array.diff(k).evaluate(points)
            approx = (array.evaluate(points + step) - array.evaluate(points - step)) / (2 * h)
            errors.append(residual_stats(exact - approx, points))
        merged = merge_stats(errors)
        details[label] = merged.max_residual
        worst.append(merged)
    stats = merge_stats(worst)
    return TaskEntry(name='fd-check', verdict=_flag(stats, FD_TOLERANCE), max_residual=stats.max_residual,
                     tolerance=FD_TOLERANCE, witness=stats.witness, details=details)
