import numpy as np
import pytest

from acml.classify import (analyze, check_levi_civita, check_nijenhuis_oracle, check_q4, check_sasakian_identity,
                           check_structure, check_theorem3, check_theorem5_torsion, check_theorem7, check_theorem8,
                           check_theorem_N1, classify, fd_cross_check)
from acml.sampling import SweepOptions

from .conftest import points_for, spec_for


@pytest.fixture(scope='module')
def reports(all_fixtures):
    return {name: classify(s, spec_for(s)) for name, s in all_fixtures.items()}


def test_fixture_b_is_sasakian(reports):
    flags = reports['B'].flags()
    assert flags == {'contact_metric': True, 'almost_hermitian': True, 'normal': True, 'sasakian': True,
                     'ack_full': True, 'ack_horizontal': True}
    assert reports['B'].contact_form
    assert reports['B'].omega_min_abs_det == pytest.approx(1.0)
    assert reports['B'].sasakian_identity.verdict
    assert reports['B'].entry().verdict == 'pass'


def test_fixture_a_is_flat_normal(reports):
    flags = reports['A'].flags()
    assert not flags['contact_metric']
    assert flags['normal']
    assert flags['ack_full']
    assert not reports['A'].contact_form


def test_fixture_c_is_not_contact_metric(reports):
    report = reports['C']
    assert not report.contact_metric.verdict
    assert report.contact_metric.max_residual == pytest.approx(0.5)
    assert report.almost_hermitian.verdict
    assert report.normal.verdict
    assert not report.sasakian.verdict
    assert report.ack_full.verdict


def test_fixture_d_is_closed_only_horizontally(reports):
    report = reports['D']
    assert report.almost_hermitian.verdict
    assert report.ack_horizontal.verdict
    assert not report.ack_full.verdict
    assert report.ack_full.max_residual >= 0.03


def test_fixture_f_is_not_horizontally_closed(reports, fixture_f):
    assert not reports['F'].ack_horizontal.verdict
    assert not reports['F'].ack_full.verdict
    assert reports['F'].almost_hermitian.verdict
    values = analyze(fixture_f).d_fundamental.evaluate(points_for(fixture_f, count=10))
    np.testing.assert_allclose(values[:, 2, 0, 1], -0.1 / 3)


def test_implication_lattice(reports):
    for report in reports.values():
        assert report.lattice_holds()
        assert report.sasakian_identity.verdict == report.sasakian.verdict
        assert all(t.verdict != 'fail' for t in report.theorem_checks)


def test_check_structure(fixture_b):
    entry = check_structure(fixture_b, spec_for(fixture_b))
    assert entry.verdict == 'pass'
    assert entry.max_residual <= 1e-12


def test_sample_box_must_match_dimension(fixture_b, fixture_f):
    with pytest.raises(ValueError):
        check_structure(fixture_b, spec_for(fixture_f))


def test_sasakian_identity_fails_off_contact(fixture_c):
    assert not check_sasakian_identity(fixture_c, spec_for(fixture_c)).verdict


def test_q4_identity(all_fixtures):
    for name in ('A', 'B'):
        s = all_fixtures[name]
        entry = check_q4(s, spec_for(s))
        assert entry.verdict == 'pass'
        assert entry.max_residual <= 1e-6
        assert 'q5' in entry.details
    s = all_fixtures['D']
    assert check_q4(s, spec_for(s)).verdict in ('pass', 'info')


def test_theorem7(all_fixtures):
    c = check_theorem7(all_fixtures['C'], spec_for(all_fixtures['C']))
    assert c.verdict == 'pass'
    assert c.details['nabla1_phi'] <= 1e-9

    f = check_theorem7(all_fixtures['F'], spec_for(all_fixtures['F']))
    assert f.verdict == 'pass'
    assert f.details['nabla1_phi'] >= 0.04

    d = check_theorem7(all_fixtures['D'], spec_for(all_fixtures['D']))
    assert d.verdict == 'info'
    assert d.details['convention_discrepancy']
    assert d.details['nabla1_phi'] <= 1e-9
    assert d.details['d_omega_horizontal'] <= 1e-9
    assert d.details['d_omega_full'] >= 0.03
    assert not d.details['consistent_full']
    assert d.details['consistent_horizontal']


def test_theorem8(all_fixtures):
    b = check_theorem8(all_fixtures['B'], spec_for(all_fixtures['B']))
    assert b.verdict == 'pass'
    assert b.details['identity_holds']
    assert b.max_residual <= 1e-8

    f = check_theorem8(all_fixtures['F'], spec_for(all_fixtures['F']))
    assert f.verdict == 'pass'
    assert not f.details['identity_holds']
    assert not f.details['conditions_hold']


def test_theorem5_torsion(fixture_c, random_structures):
    entry = check_theorem5_torsion(fixture_c, spec_for(fixture_c))
    assert entry.verdict == 'pass'
    assert entry.details['theorem6_evidence'] == 'consistent'
    s = random_structures[0]
    entry = check_theorem5_torsion(s, spec_for(s))
    assert entry.max_residual <= 1e-8
    assert entry.details['metricity'] <= 1e-8
    assert entry.verdict == 'pass'


def test_theorem_n1_and_theorem3(all_fixtures):
    for s in all_fixtures.values():
        assert check_theorem_N1(s, spec_for(s)).verdict in ('pass', 'info')
        assert check_theorem3(s, spec_for(s)).verdict == 'pass'
    assert check_theorem_N1(all_fixtures['B'], spec_for(all_fixtures['B'])).verdict == 'pass'


def test_oracles(all_fixtures, curved):
    for s in list(all_fixtures.values()) + [curved]:
        assert check_nijenhuis_oracle(s, spec_for(s)).verdict == 'pass'
        assert check_levi_civita(s, spec_for(s)).verdict == 'pass'


def test_fd_cross_check(fixture_d, curved):
    for s in (fixture_d, curved):
        entry = fd_cross_check(s, spec_for(s))
        assert entry.verdict == 'pass'
        assert entry.tolerance == 1e-5


def test_results_do_not_depend_on_workers(fixture_d):
    spec = spec_for(fixture_d)
    serial = check_q4(fixture_d, spec, SweepOptions(workers=1, chunk=16))
    threaded = check_q4(fixture_d, spec, SweepOptions(workers=4, chunk=16))
    assert serial.model_dump() == threaded.model_dump()
    assert classify(fixture_d, spec).model_dump() == classify(fixture_d, spec, SweepOptions(workers=3)).model_dump()
