import inspect
import json

import pytest

from acml import __version__
from acml.catalog import load_fixture
from acml.cli import check_transport, main, run_scenario
from acml.config import Settings
from acml.connections import DEFAULT_RK4_STEP, parallel_transport
from acml.loader import TransportSpec, load_scenario
from acml.report import report_json

BROKEN = '''name = broken
dim = 3
[gamma]  a1 = "0"   a2 = "0"
[g]      r1 = "1","0"   r2 = "0","1"
[phi]    r1 = "1","0"   r2 = "0","1"
[sample] points = 20
[tasks]  run = validate, classify
'''


@pytest.fixture(scope='module')
def fixture_b_report():
    return run_scenario(load_fixture('fixtureB'))


def test_fixture_b_run(fixture_b_report):
    report = fixture_b_report
    assert report.exit_code == 0
    assert report.classification['sasakian']
    assert [t.name for t in report.tasks] == ['validate', 'classify', 'q4', 'theorem7', 'theorem8', 'lift',
                                              'lift-theorems']
    assert report.tasks[-1].verdict == 'pass'
    assert report.elapsed_ms is None
    assert report.version == __version__


def test_broken_phi_fails_validation():
    report = run_scenario(load_scenario(BROKEN))
    assert report.tasks[0].name == 'validate'
    assert report.tasks[0].verdict == 'fail'
    assert any('phi_squared' in note for note in report.tasks[0].notes)
    assert report.exit_code == 1


def test_task_errors_become_failed_entries():
    sc = load_fixture('fixtureA')
    sc = sc.model_copy(update={'tasks': ['transport'], 'transport': TransportSpec(vector=[1.0, 0.0, 0.0])})
    report = run_scenario(sc)
    assert report.tasks[0].verdict == 'fail'
    assert report.tasks[0].notes[0].startswith('ValueError')
    assert report.exit_code == 1


def test_reports_are_reproducible():
    sc = load_fixture('fixtureA')
    first = report_json(run_scenario(sc, Settings(workers=1)))
    second = report_json(run_scenario(sc, Settings(workers=4)))
    assert first == second


def test_transport_tasks():
    report = run_scenario(load_fixture('curved'))
    verdicts = {t.name: t for t in report.tasks}
    assert verdicts['validate'].verdict == 'pass'
    assert verdicts['levi-civita'].verdict == 'pass'
    assert verdicts['transport'].verdict in ('pass', 'info')
    assert verdicts['transport'].details['relative_error'] < 0.5

    flat = run_scenario(load_fixture('fixtureA'))
    transport = next(t for t in flat.tasks if t.name == 'transport')
    assert transport.verdict == 'pass'


def test_main_run_writes_json(tmp_path, capsys):
    out = tmp_path / 'report.json'
    code = main(['run', 'fixtureA', '--points', '30', '--json', str(out), '--timing'])
    assert code == 0
    data = json.loads(out.read_text())
    assert data['scenario']['sample']['count'] == 30
    assert data['elapsed_ms'] is not None
    assert 'scenario flat-integrable' in capsys.readouterr().out


def test_main_missing_scenario(capsys):
    assert main(['run', 'no-such-scenario']) == 2
    assert 'Scenario error' in capsys.readouterr().err


def test_main_fixtures(capsys):
    assert main(['fixtures']) == 0
    assert 'fixtureB' in capsys.readouterr().out


def test_main_parse_expr(capsys):
    assert main(['parse-expr', 'x1+2*x2', '--dim', '3']) == 0
    out = capsys.readouterr().out
    assert 'expression: x1 + 2 * x2' in out
    assert 'coordinates: x1, x2' in out
    assert main(['parse-expr', 'x1 +', '--dim', '3']) == 2
    err = capsys.readouterr().err
    assert '    ^' in err


def test_transport_step_defaults_agree():
    assert Settings().rk4_step == DEFAULT_RK4_STEP
    assert inspect.signature(check_transport).parameters['step'].default == DEFAULT_RK4_STEP
    assert inspect.signature(parallel_transport).parameters['step'].default == DEFAULT_RK4_STEP
