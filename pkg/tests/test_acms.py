import numpy as np
import pytest

from acml.acms import (AlmostContactStructure, derived_fields, fundamental_form, lie_derivative_eta, nijenhuis_adapted,
                       nijenhuis_direct, nijenhuis_direct_full, normality_tensors, reeb_nondegeneracy, require_valid,
                       validate_structure)
from acml.errors import StructureError
from acml.exprcore import ScalarField
from acml.frames import frame_vector, make_chart

from .conftest import IDENTITY, J, points_for


def test_fixtures_are_valid(all_fixtures, curved, random_structures):
    for s in list(all_fixtures.values()) + [curved] + random_structures:
        assert validate_structure(s, points_for(s)) == []


def test_phi_squared_violation_is_reported():
    s = AlmostContactStructure(make_chart(3, ['0', '0']), IDENTITY, IDENTITY)
    diagnostics = validate_structure(s)
    checks = {d.check for d in diagnostics}
    assert 'phi_squared' in checks
    worst = next(d for d in diagnostics if d.check == 'phi_squared')
    assert worst.residual == pytest.approx(2.0)
    with pytest.raises(StructureError) as info:
        require_valid(s)
    assert info.value.diagnostics


def test_indefinite_metric_is_reported():
    s = AlmostContactStructure(make_chart(3, ['0', '0']), [['1', '0'], ['0', '-1']], J)
    assert 'positive_definite' in {d.check for d in validate_structure(s)}


def test_incompatible_metric_is_reported():
    s = AlmostContactStructure(make_chart(3, ['0', '0']), [['2', '0'], ['0', '1']], J)
    assert 'compatibility' in {d.check for d in validate_structure(s)}


def test_matrix_shape_is_checked():
    with pytest.raises(StructureError):
        AlmostContactStructure(make_chart(3, ['0', '0']), [['1', '0', '0']] * 2, J)


def test_fundamental_form(fixture_b, fixture_d):
    point = np.array([[0.1, 0.2, 0.3]])
    omega_b = fundamental_form(fixture_b).evaluate(point)[0]
    np.testing.assert_allclose(omega_b, [[0.0, 1.0], [-1.0, 0.0]])
    omega_d = fundamental_form(fixture_d).evaluate(point)[0]
    assert omega_d[0, 1] == pytest.approx(-(1 + 0.1 * np.sin(0.3)))
    assert fundamental_form(fixture_d).symmetry_residual(point) == pytest.approx(0.0)


def test_nijenhuis_of_fixture_b(fixture_b):
    N = nijenhuis_adapted(fixture_b)
    points = points_for(fixture_b, count=10)
    np.testing.assert_allclose(N.vertical.evaluate(points)[:, 0, 1], -2.0)
    assert N.horizontal.is_zero()
    assert N.mixed.is_zero()
    e1, e2 = frame_vector(fixture_b.chart, 0), frame_vector(fixture_b.chart, 1)
    np.testing.assert_allclose(nijenhuis_direct(fixture_b, e1, e2, (0.3, 0.1, -0.2)), [0.0, 0.0, -2.0])


def test_adapted_nijenhuis_matches_bracket_formula(all_fixtures, curved, random_structures):
    for s in list(all_fixtures.values()) + [curved] + random_structures:
        points = points_for(s, count=30)
        adapted = nijenhuis_adapted(s).full().evaluate(points)
        direct = nijenhuis_direct_full(s).evaluate(points)
        assert np.abs(adapted - direct).max() <= 1e-8


def test_normality_of_fixture_b(fixture_b):
    t = normality_tensors(fixture_b)
    points = points_for(fixture_b, count=20)
    assert np.abs(t.n1.evaluate(points)).max() <= 1e-12
    assert np.abs(t.n2.evaluate(points)).max() <= 1e-12
    assert np.abs(t.projected.evaluate(points)).max() <= 1e-12


def test_projection_identity(all_fixtures, random_structures):
    for s in list(all_fixtures.values()) + random_structures:
        t = normality_tensors(s)
        assert np.abs(t.projection_identity.evaluate(points_for(s, count=30))).max() <= 1e-8


def test_fixture_c_is_normal(fixture_c):
    t = normality_tensors(fixture_c)
    points = points_for(fixture_c, count=20)
    assert np.abs(t.projected.evaluate(points)).max() <= 1e-12
    # N^n_12 = -1 against 2 d eta_12 = 1
    np.testing.assert_allclose(t.n1.evaluate(points)[:, 2, 0, 1], 0.0, atol=1e-12)
    np.testing.assert_allclose(t.nijenhuis.evaluate(points)[:, 2, 0, 1], -1.0)


def test_derived_fields(fixture_b, fixture_d):
    point = np.array([[0.4, -0.2, 0.5]])
    psi = derived_fields(fixture_b).psi.evaluate(point)[0]
    np.testing.assert_allclose(psi, [[0.0, 1.0], [-1.0, 0.0]])
    derived = derived_fields(fixture_d)
    C = derived.C.evaluate(point)[0]
    np.testing.assert_allclose(C, 0.05 * np.cos(0.5) * np.eye(2))
    assert derived.h.components.is_zero()
    C_sharp = derived.C_sharp.evaluate(point)[0]
    np.testing.assert_allclose(C_sharp, 0.05 * np.cos(0.5) / (1 + 0.1 * np.sin(0.5)) * np.eye(2))


def test_reeb_nondegeneracy(fixture_a, fixture_b, fixture_c):
    point = np.array([[0.1, 0.2, 0.3]])
    assert reeb_nondegeneracy(fixture_b).evaluate(point)[0] == pytest.approx(1.0)
    assert reeb_nondegeneracy(fixture_c).evaluate(point)[0] == pytest.approx(0.25)
    assert reeb_nondegeneracy(fixture_a).evaluate(point)[0] == pytest.approx(0.0)


def test_lie_derivative_of_eta(fixture_b):
    chart = fixture_b.chart
    e1, e2, xi = (frame_vector(chart, A) for A in range(3))
    points = points_for(fixture_b, count=5)
    assert ScalarField(lie_derivative_eta(e1, e2), 3).evaluate(points) == pytest.approx(np.full(5, 2.0))
    assert ScalarField(lie_derivative_eta(e2, e1), 3).evaluate(points) == pytest.approx(np.full(5, -2.0))
    assert ScalarField(lie_derivative_eta(xi, e1), 3).evaluate(points) == pytest.approx(np.zeros(5))
