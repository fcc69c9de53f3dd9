import numpy as np
import pytest

from acml.errors import ChartError, MetricError, UnsupportedDegreeError
from acml.exprcore import FieldArray, ScalarField
from acml.frames import (AdmissibleTensorField, FrameVectorField, bracket, exterior_derivative, frame_apply,
                         frame_vector, invert_admissible_metric, lie_bracket, make_chart, nonholonomicity,
                         omega_from_chart, structure_constants)

from .conftest import points_for


def test_make_chart_rejects_even_or_small_dimension():
    with pytest.raises(ChartError):
        make_chart(4, ['0', '0', '0'])
    with pytest.raises(ChartError):
        make_chart(1, [])


def test_make_chart_rejects_wrong_coefficient_count():
    with pytest.raises(ChartError):
        make_chart(3, ['0'])


def test_make_chart_enforces_standing_assumption():
    with pytest.raises(ChartError):
        make_chart(3, ['x3', '0'])
    assert make_chart(3, ['x1*x2', 'sin(x1)']).standing_assumption_residual() == 0.0


def test_frame_apply():
    chart = make_chart(3, ['-2*x2', '0'])
    assert frame_apply(chart, 1, ScalarField.from_source('x3', 3), (0.3, 0.5, 0.1)) == pytest.approx(1.0)
    assert frame_apply(chart, 2, ScalarField.from_source('x1*x2', 3), (0.3, 0.5, 0.1)) == pytest.approx(0.3)
    d_chart = make_chart(3, ['-x2', '0'])
    lam = ScalarField.from_source('1+0.1*sin(x3)', 3)
    assert frame_apply(d_chart, 1, lam, (0.0, 1.0, 0.0)) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        frame_apply(chart, 3, lam, (0.0, 0.0, 0.0))


def test_lie_bracket_of_frame_fields(fixture_b):
    chart = fixture_b.chart
    e1, e2, xi = (frame_vector(chart, A) for A in range(3))
    np.testing.assert_allclose(lie_bracket(e1, e2, (0.2, -0.4, 0.7)), [0.0, 0.0, -2.0])
    np.testing.assert_allclose(lie_bracket(e1, xi, (0.2, -0.4, 0.7)), [0.0, 0.0, 0.0])
    np.testing.assert_allclose(lie_bracket(e2, e1, (0.2, -0.4, 0.7)), [0.0, 0.0, 2.0])


def test_structure_constants_match_brackets(fixture_b, fixture_c):
    point = np.array([[0.4, -0.1, 0.9]])
    c = structure_constants(fixture_b.chart).evaluate(point)[0]
    expected = np.zeros((3, 3, 3))
    expected[2, 0, 1], expected[2, 1, 0] = -2.0, 2.0
    np.testing.assert_allclose(c, expected, atol=1e-12)
    c = fixture_c.chart.structure_constants.evaluate(point)[0]
    assert c[2, 0, 1] == pytest.approx(-1.0)
    np.testing.assert_allclose(c[:2], 0.0, atol=1e-12)


def test_nonholonomicity_and_omega(fixture_a, fixture_b, fixture_c):
    point = np.array([[0.1, 0.2, 0.3]])
    assert nonholonomicity(fixture_b.chart).evaluate(point)[0, 0, 1] == pytest.approx(-2.0)
    for s, expected in ((fixture_a, 0.0), (fixture_b, 1.0), (fixture_c, 0.5)):
        omega = omega_from_chart(s.chart)
        values = omega.evaluate(point)[0]
        assert values[0, 1] == pytest.approx(expected)
        assert values[1, 0] == pytest.approx(-expected)
        assert omega.symmetry_residual(point) == pytest.approx(0.0)


def test_d_eta_is_omega(all_fixtures, random_structures):
    for s in list(all_fixtures.values()) + random_structures:
        points = points_for(s, count=20)
        deta = exterior_derivative(s.chart, s.chart.eta).evaluate(points)
        omega = s.omega.full().evaluate(points)
        np.testing.assert_allclose(deta, omega, atol=1e-12)


def test_d_squared_vanishes(fixture_b, random_structures):
    for s in [fixture_b] + random_structures:
        chart = s.chart
        one_form = FieldArray.build((3,), lambda A: chart.symbols[A] ** 2 * chart.symbols[(A + 1) % 3], 3)
        dd = exterior_derivative(chart, exterior_derivative(chart, one_form))
        assert dd.shape == (3, 3, 3)
        assert np.abs(dd.evaluate(points_for(s, count=20))).max() <= 1e-10


def test_exterior_derivative_rejects_three_forms(fixture_b):
    three_form = FieldArray.build((3, 3, 3), lambda *_: 0, 3)
    with pytest.raises(UnsupportedDegreeError):
        exterior_derivative(fixture_b.chart, three_form)


def test_bracket_is_antisymmetric_and_satisfies_jacobi(random_structures):
    chart = random_structures[0].chart
    X = FrameVectorField(chart, ['x1', 'x2*x3'], 'x1^2')
    Y = FrameVectorField(chart, ['sin(x3)', '1'], 'x2')
    Z = FrameVectorField(chart, ['x2', '-x1'], '0')
    points = points_for(chart, count=15)
    total = (bracket(bracket(X, Y), Z).evaluate(points) + bracket(bracket(Y, Z), X).evaluate(points)
             + bracket(bracket(Z, X), Y).evaluate(points))
    assert np.abs(total).max() <= 1e-9
    assert np.abs(bracket(X, Y).evaluate(points) + bracket(Y, X).evaluate(points)).max() <= 1e-12


def test_frame_vector_field_requires_full_horizontal_part(fixture_b):
    with pytest.raises(ValueError):
        FrameVectorField(fixture_b.chart, ['1'], '0')


def test_invert_admissible_metric(fixture_b):
    chart = fixture_b.chart
    g = AdmissibleTensorField(chart, (0, 2), FieldArray.build((2, 2), lambda a, b: (2 if a == b else 0), 3),
                              symmetric=((0, 1),))
    np.testing.assert_allclose(invert_admissible_metric(g, (0.0, 0.0, 0.0)), 0.5 * np.eye(2))
    indefinite = AdmissibleTensorField(chart, (0, 2),
                                       FieldArray.build((2, 2), lambda a, b: (1 - 2 * a) if a == b else 0, 3))
    with pytest.raises(MetricError):
        invert_admissible_metric(indefinite, (0.0, 0.0, 0.0))
